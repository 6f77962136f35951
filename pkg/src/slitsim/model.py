"""Physical constants, source statistics and slit geometry.

Everything downstream reads numbers from an :class:`ExperimentConfig`.
Values are SI throughout. Planck-constant scaling for the classical-limit
study is applied here: ``config.hbar`` is the *effective* constant
``hbar / h_divisor`` and every formula uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import constants as _codata

from .errors import ConfigError

HBAR = _codata.hbar
BOLTZMANN = _codata.k
NEON_MASS = 3.349e-26
STANDARD_G = 9.81


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    mass: float = NEON_MASS
    g: float = STANDARD_G
    boltzmann: float = BOLTZMANN
    h_divisor: float = 1.0
    classical: bool = False

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0 and self.g > 0):
            raise ConfigError("hbar, mass and g must be positive")
        if not (math.isfinite(self.h_divisor) and self.h_divisor >= 1):
            raise ConfigError("h_divisor must be finite and >= 1; use classical=True for h = 0")

    @property
    def hbar_eff(self) -> float:
        """Planck constant actually used by the numerics (0 in classical mode)."""
        return 0.0 if self.classical else self.hbar / self.h_divisor


@dataclass(frozen=True)
class SourceModel:
    """Gaussian atom source.

    ``sigma_k`` is the per-axis wave-number spread at the *unscaled* hbar;
    ``sigma_v`` is the thermal speed sqrt(kB T / m), so that
    ``sigma_k = m sigma_v / (sqrt(3) hbar)``.
    """

    sigma0: float = 10e-6
    sigma_z: float = 0.3e-3
    sigma_k: float = 1.86e8
    sigma_v: float = 1.0

    def __post_init__(self):
        if min(self.sigma0, self.sigma_z, self.sigma_k, self.sigma_v) <= 0:
            raise ConfigError("all source spreads must be strictly positive")

    @classmethod
    def from_temperature(cls, temperature: float, sigma0: float, sigma_z: float,
                         constants: PhysicalConstants) -> "SourceModel":
        sigma_v = math.sqrt(constants.boltzmann * temperature / constants.mass)
        sigma_k = constants.mass * sigma_v / (math.sqrt(3.0) * constants.hbar)
        # sigma_v is re-derived from sigma_k so that config files round-trip exactly
        return cls.from_sigma_k(sigma_k, sigma0, sigma_z, constants)

    @classmethod
    def from_sigma_k(cls, sigma_k: float, sigma0: float, sigma_z: float,
                     constants: PhysicalConstants) -> "SourceModel":
        sigma_v = math.sqrt(3.0) * constants.hbar * sigma_k / constants.mass
        return cls(sigma0=sigma0, sigma_z=sigma_z, sigma_k=sigma_k, sigma_v=sigma_v)


@dataclass(frozen=True)
class SlitGeometry:
    width: float = 2e-6
    separation: float = 6e-6
    l1: float = 0.076
    l2: float = 0.113
    n_quad_slit: int = 200
    n_quad_k: int = 20

    def __post_init__(self):
        if not (self.separation > self.width > 0):
            raise ConfigError("need separation > width > 0")
        if self.l1 <= 0 or self.l2 <= 0:
            raise ConfigError("l1 and l2 must be positive")
        if self.n_quad_slit < 2 or self.n_quad_k < 1:
            raise ConfigError("quadrature sizes too small")

    @property
    def centers(self) -> tuple[float, float]:
        return (-0.5 * self.separation, 0.5 * self.separation)

    @property
    def intervals(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Open intervals of slit A (left) and slit B (right)."""
        h = 0.5 * self.width
        xa, xb = self.centers
        return ((xa - h, xa + h), (xb - h, xb + h))

    @property
    def outer_edge(self) -> float:
        """Distance from the axis to the outer slit edges, (d + b) / 2."""
        return 0.5 * (self.separation + self.width)


@dataclass(frozen=True)
class InitialConditions:
    """Initial position and velocity of one source atom.

    The velocity is stored (not the wave vector) so that the same sample
    stays meaningful when hbar is rescaled or set to zero.
    """

    position: tuple[float, float, float]
    velocity: tuple[float, float, float]

    @classmethod
    def from_wave_vector(cls, position, wave_vector, config: "ExperimentConfig") -> "InitialConditions":
        v = tuple(float(config.hbar * k / config.mass) for k in wave_vector)
        return cls(tuple(float(p) for p in position), v)

    def wave_vector(self, config: "ExperimentConfig") -> tuple[float, float, float]:
        if config.hbar == 0:
            raise ConfigError("wave vector undefined in classical mode")
        return tuple(config.mass * v / config.hbar for v in self.velocity)


@dataclass(frozen=True)
class Grid1D:
    min: float
    max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2 or not self.min < self.max:
            raise ConfigError("grid needs min < max and at least two points")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / (self.n_points - 1)


@dataclass(frozen=True)
class ExperimentConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    source: SourceModel = field(default_factory=SourceModel)
    slits: SlitGeometry = field(default_factory=SlitGeometry)
    seed: int = 0

    # shortcuts used all over the numerics
    @property
    def hbar(self) -> float:
        return self.constants.hbar_eff

    @property
    def mass(self) -> float:
        return self.constants.mass

    @property
    def g(self) -> float:
        return self.constants.g

    @property
    def sigma0(self) -> float:
        return self.source.sigma0

    @property
    def sigma_z(self) -> float:
        return self.source.sigma_z

    @property
    def velocity_spread(self) -> float:
        """Per-axis spread of the initial velocity, hbar * sigma_k / m (unscaled)."""
        return self.constants.hbar * self.source.sigma_k / self.constants.mass

    @property
    def tau(self) -> float:
        """Wave-number spread at the effective hbar.

        The physical velocity spread is held fixed under hbar scaling, so the
        wave-number spread grows by the divisor.
        """
        if self.constants.classical:
            return math.inf
        return self.source.sigma_k * self.constants.h_divisor

    @property
    def is_classical(self) -> bool:
        return self.constants.classical

    def scaled(self, eta: float) -> "ExperimentConfig":
        """Copy of this config with Planck's constant divided by ``eta``."""
        if eta < 1:
            raise ConfigError("eta must be >= 1")
        return replace(self, constants=replace(self.constants, h_divisor=float(eta), classical=False))

    def classical_limit(self) -> "ExperimentConfig":
        return replace(self, constants=replace(self.constants, classical=True))


def default_shimizu_config(temperature: float = 2.5e-3, seed: int = 0) -> ExperimentConfig:
    """Parameters of the 1992 Shimizu neon double-slit experiment."""
    constants = PhysicalConstants()
    source = SourceModel.from_temperature(temperature, sigma0=10e-6, sigma_z=0.3e-3,
                                          constants=constants)
    return ExperimentConfig(constants=constants, source=source, slits=SlitGeometry(), seed=seed)


def de_broglie_wavelength(speed: float, config: ExperimentConfig) -> float:
    """h / (m v) with the effective Planck constant."""
    if not speed > 0:
        raise ValueError("speed must be positive")
    return 2.0 * math.pi * config.hbar / (config.mass * speed)


# --------------------------------------------------------------------------
# plain-text config files

_FLOAT_KEYS = {
    "mass_kg": ("constants", "mass"),
    "g_ms2": ("constants", "g"),
    "sigma0_m": ("source", "sigma0"),
    "sigmaz_m": ("source", "sigma_z"),
    "sigmak_per_m": ("source", "sigma_k"),
    "slit_width_m": ("slits", "width"),
    "slit_separation_m": ("slits", "separation"),
    "l1_m": ("slits", "l1"),
    "l2_m": ("slits", "l2"),
}
_INT_KEYS = {
    "n_quad_slit": ("slits", "n_quad_slit"),
    "n_quad_k": ("slits", "n_quad_k"),
}
CONFIG_KEYS = ("mass_kg", "g_ms2", "hbar_divisor", "sigma0_m", "sigmaz_m", "sigmak_per_m",
               "slit_width_m", "slit_separation_m", "l1_m", "l2_m", "n_quad_slit",
               "n_quad_k", "seed")


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; keys missing from the text keep ``base`` values."""
    base = base or default_shimizu_config()
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value

    parts = {"constants": {}, "source": {}, "slits": {}}
    try:
        for key, (group, attr) in _FLOAT_KEYS.items():
            if key in values:
                parts[group][attr] = float(values[key])
        for key, (group, attr) in _INT_KEYS.items():
            if key in values:
                parts[group][attr] = int(values[key])
        seed = int(values["seed"]) if "seed" in values else base.seed
        if "hbar_divisor" in values:
            div = values["hbar_divisor"].lower()
            if div in ("inf", "infinity"):
                parts["constants"]["classical"] = True
            else:
                parts["constants"]["h_divisor"] = float(div)
                parts["constants"]["classical"] = False
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    constants = replace(base.constants, **parts["constants"])
    src = dict(sigma0=base.source.sigma0, sigma_z=base.source.sigma_z, sigma_k=base.source.sigma_k)
    src.update(parts["source"])
    source = SourceModel.from_sigma_k(src["sigma_k"], src["sigma0"], src["sigma_z"], constants)
    slits = replace(base.slits, **parts["slits"])
    return ExperimentConfig(constants=constants, source=source, slits=slits, seed=seed)


def format_config(config: ExperimentConfig) -> str:
    c, s, sl = config.constants, config.source, config.slits
    divisor = "inf" if c.classical else repr(c.h_divisor)
    rows = [
        ("mass_kg", repr(c.mass)), ("g_ms2", repr(c.g)), ("hbar_divisor", divisor),
        ("sigma0_m", repr(s.sigma0)), ("sigmaz_m", repr(s.sigma_z)),
        ("sigmak_per_m", repr(s.sigma_k)), ("slit_width_m", repr(sl.width)),
        ("slit_separation_m", repr(sl.separation)), ("l1_m", repr(sl.l1)),
        ("l2_m", repr(sl.l2)), ("n_quad_slit", str(sl.n_quad_slit)),
        ("n_quad_k", str(sl.n_quad_k)), ("seed", str(config.seed)),
    ]
    return "".join(f"{k} = {v}\n" for k, v in rows)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(format_config(config))
