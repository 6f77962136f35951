import numpy as np
import pytest

from slitsim.model import default_shimizu_config
from slitsim.wavepacket import classical_z_time


@pytest.fixture(scope="session")
def cfg():
    return default_shimizu_config()


@pytest.fixture(scope="session")
def times(cfg):
    t1 = classical_z_time(0.0, 0.0, cfg.slits.l1, cfg)
    t2 = classical_z_time(0.0, 0.0, cfg.slits.l1 + cfg.slits.l2, cfg)
    return t1, t2


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.max(np.abs(a - b) / np.abs(b))


_ACCEPTANCE: list[tuple[int, str]] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; returns the verdict."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
