"""Command-line batch runner: ``simulate <scenario> --config FILE --out DIR``.

Every scenario is deterministic given (config, seed). Each output CSV starts
with ``# key = value`` comment lines naming the scenario and the SHA-256 of
the config, and the run ends by writing ``manifest.json`` with the config
snapshot, quadrature sizes and a checksum for every file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .aperture import (DensityProfile, _classical_density, auto_grid, density_profile, l1_distance,
                       mode_densities, time_after_drop)
from .bohm import (SLIT_LABELS, ImpactRecord, TrajectoryState, classical_trajectory, impacts_to_csv,
                   integrate_ensemble, sample_passing, simulate_impacts, slit_index,
                   trajectories_to_csv, trajectory_before)
from .detector import (DEFAULT_RESOLUTION, TimeWindow, detector_smooth, fringe_metrics,
                       time_window_profile)
from .errors import ConfigError, InsufficientStructureError, SimulationError
from .model import (ExperimentConfig, Grid1D, InitialConditions, default_shimizu_config, format_config,
                    load_config)
from .scaling import scaling_report
from .wavepacket import classical_z_time, eps0_t, rho_transverse_before

log = logging.getLogger("slitsim")

SCENARIOS = ("before-density", "onset", "evolution-map", "detector", "trajectories", "impacts",
             "scaling")
ONSET_DROPS = (1e-6, 1e-5, 1e-4, 5e-4, 1e-3, 0.113)
DETECTOR_DROP = 0.113
DEFAULT_ETAS = (1.0, 5.0, 10.0, 100.0, 1000.0)
DEFAULT_N = {"trajectories": 100, "impacts": 5000, "scaling": 100}


def drop_label(dz: float) -> str:
    um = dz * 1e6
    if um < 1000:
        return f"{um:g}um"
    return f"{dz * 1e3:g}mm"


def _quantum(config: ExperimentConfig) -> ExperimentConfig:
    # grids are sized from the quantum scales even for classical runs
    if not config.is_classical:
        return config
    return replace(config, constants=replace(config.constants, classical=False))


class Run:
    """Collects output files, their checksums and run metadata."""

    def __init__(self, scenario: str, config: ExperimentConfig, out: Path, args):
        self.scenario = scenario
        self.config = config
        self.out = out
        self.args = args
        self.config_text = format_config(config)
        self.config_sha = hashlib.sha256(self.config_text.encode()).hexdigest()
        self.files: dict[str, str] = {}
        self.meta: dict = {}

    def header(self, **extra) -> dict:
        h = {"scenario": self.scenario, "config_sha256": self.config_sha, "seed": self.config.seed,
             "classical": self.config.is_classical}
        h.update(extra)
        return h

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        log.info("wrote %s", path)

    def write_profile(self, name: str, profile: DensityProfile, **extra) -> None:
        self.write(name, profile.to_csv(header=self.header(**extra)))

    def write_table(self, name: str, columns: list[str], rows, **extra) -> None:
        lines = [f"# {k} = {v}" for k, v in self.header(**extra).items()]
        lines.append(",".join(columns))
        lines += [",".join(repr(float(v)) if not isinstance(v, str) else v for v in row) for row in rows]
        self.write(name, "\n".join(lines) + "\n")

    def write_matrix(self, name: str, row_name: str, rows, x, values, **extra) -> None:
        """Heatmap as a plain matrix: first row holds x, first column the row coordinate."""
        lines = [f"# {k} = {v}" for k, v in self.header(**extra).items()]
        lines.append(f"# layout = first row x_m; first column {row_name}; cells rho_per_m")
        lines.append(",".join([row_name] + [repr(float(v)) for v in x]))
        for r, vals in zip(rows, values):
            lines.append(",".join([repr(float(r))] + [repr(float(v)) for v in vals]))
        self.write(name, "\n".join(lines) + "\n")

    def manifest(self) -> dict:
        try:
            version = metadata.version("artifact")
        except metadata.PackageNotFoundError:
            version = __version__
        return {
            "scenario": self.scenario,
            "tool_version": version,
            "seed": self.config.seed,
            "config": dict(line.split(" = ", 1) for line in self.config_text.splitlines()),
            "config_sha256": self.config_sha,
            "parameters": self.meta,
            "outputs": dict(sorted(self.files.items())),
        }


# --------------------------------------------------------------------------
# scenarios


def run_before_density(run: Run, args) -> None:
    cfg = run.config
    t1 = classical_z_time(0.0, 0.0, cfg.slits.l1, cfg)
    half = 4.0 * float(eps0_t(t1, cfg))
    x = np.linspace(-half, half, 401)
    times = np.linspace(0.0, t1, 41)
    rows = [rho_transverse_before(x, t, cfg) for t in times]
    run.write_matrix("before_density_map.csv", "t_s", times, x, rows)
    grid = Grid1D(-half, half, 401)
    run.write_profile("before_density_t1.csv", DensityProfile(grid, rows[-1], {"t_s": repr(float(t1))}),
                      t_s=repr(float(t1)))
    run.meta.update({"n_times": len(times), "n_x": x.size})


def run_onset(run: Run, args) -> None:
    cfg = run.config
    gaps = []
    quad = {}
    for dz in ONSET_DROPS:
        grid = auto_grid(dz, _quantum(cfg))
        t1, t = time_after_drop(dz, 0.0, 0.0, cfg)
        x = grid.points
        label = drop_label(dz)
        if cfg.is_classical:
            prof = density_profile(grid, dz, config=cfg, mode="classical")
            run.write_profile(f"onset_{label}.csv", prof, delta_z_m=repr(float(dz)))
            continue
        meta: dict = {}
        dens = mode_densities(x, t, t1, cfg, meta=meta)
        quad[label] = meta
        rows = zip(x, dens["interference"], dens["diffraction-sum"])
        run.write_table(f"onset_{label}.csv", ["x_m", "interference_per_m", "diffraction_sum_per_m"],
                        rows, delta_z_m=repr(float(dz)), t_s=repr(float(t)), t1_s=repr(float(t1)))
        gaps.append((dz, l1_distance(dens["interference"], dens["diffraction-sum"], x)))
    if gaps:
        run.write_table("onset_gaps.csv", ["delta_z_m", "coherence_gap"], gaps)
    run.meta["quadrature"] = quad


def _map_rows(cfg, drops, x):
    rows = []
    for dz in drops:
        t1, t = time_after_drop(dz, 0.0, 0.0, cfg)
        if cfg.is_classical:
            rows.append(_classical_density(x, t, t1, cfg))
        else:
            rows.append(mode_densities(x, t, t1, cfg)["interference"])
    return rows


def run_evolution_map(run: Run, args) -> None:
    cfg = run.config
    q = _quantum(cfg)
    near = np.geomspace(1e-6, 1e-3, 31)
    far = np.geomspace(1e-3, DETECTOR_DROP, 31)
    x_near = np.linspace(-auto_grid(1e-3, q).max, auto_grid(1e-3, q).max, 401)
    x_far = np.linspace(-auto_grid(DETECTOR_DROP, q).max, auto_grid(DETECTOR_DROP, q).max, 801)
    run.write_matrix("evolution_near.csv", "delta_z_m", near, x_near, _map_rows(cfg, near, x_near))
    run.write_matrix("evolution_far.csv", "delta_z_m", far, x_far, _map_rows(cfg, far, x_far))
    run.meta.update({"near_rows": near.size, "far_rows": far.size,
                     "near_columns": x_near.size, "far_columns": x_far.size})


def run_detector(run: Run, args) -> None:
    cfg = run.config
    grid = auto_grid(DETECTOR_DROP, _quantum(cfg))
    window = args.window
    raw = density_profile(grid, DETECTOR_DROP, config=cfg)
    run.write_profile("detector_raw.csv", raw, delta_z_m=repr(DETECTOR_DROP))
    if cfg.is_classical:
        base = raw
    else:
        base = time_window_profile(grid, window, cfg)
        run.write_profile("detector_windowed.csv", base, t_min_s=repr(float(window.t_min)),
                          t_max_s=repr(float(window.t_max)))
    smooth = detector_smooth(base, DEFAULT_RESOLUTION)
    run.write_profile("detector_smoothed.csv", smooth, resolution_m=repr(DEFAULT_RESOLUTION))
    text = []
    for name, prof in (("raw", raw), ("smoothed", smooth)):
        try:
            text.append(f"[{name}]\n" + fringe_metrics(prof).to_text())
        except InsufficientStructureError as exc:
            text.append(f"[{name}]\nabsent = {exc}\n")
    head = "".join(f"# {k} = {v}\n" for k, v in run.header().items())
    run.write("detector_fringes.txt", head + "\n".join(text))
    run.meta.update({"grid_points": grid.n_points, "window_s": [window.t_min, window.t_max],
                     **{k: v for k, v in raw.meta.items() if k.startswith("n_quad")}})


def _classical_impacts(pos, vel, cfg):
    t1 = classical_z_time(pos[:, 2], vel[:, 2], cfg.slits.l1, cfg)
    t2 = classical_z_time(pos[:, 2], vel[:, 2], cfg.slits.l1 + cfg.slits.l2, cfg)
    label = slit_index(pos[:, 0] + vel[:, 0] * t1, cfg)
    return (pos[:, 0] + vel[:, 0] * t2, pos[:, 1] + vel[:, 1] * t2, t2, label)


def run_trajectories(run: Run, args) -> None:
    cfg = run.config
    n = args.n or DEFAULT_N["trajectories"]
    pos, vel = sample_passing(n, cfg.seed, cfg)
    bundle, impacts = [], []
    if cfg.is_classical:
        for p, v in zip(pos, vel):
            states, imp = classical_trajectory(InitialConditions(tuple(p), tuple(v)), cfg)
            bundle.append(states)
            impacts.append(imp)
    else:
        res = integrate_ensemble(pos, vel, cfg, record_every=20)
        for i, (p, v) in enumerate(zip(pos, vel)):
            ic = InitialConditions(tuple(float(a) for a in p), tuple(float(a) for a in v))
            t1 = classical_z_time(p[2], v[2], cfg.slits.l1, cfg)
            states = [trajectory_before(ic, tb, cfg) for tb in np.linspace(0.0, t1, 25)[:-1]]
            for tt, xx, yy in res.paths[i]:
                zz = p[2] + v[2] * tt + 0.5 * cfg.g * tt * tt
                states.append(TrajectoryState((xx, yy, float(zz)), tt, ic))
            bundle.append(states)
            impacts.append(ImpactRecord(float(res.x[i]), float(res.y[i]), float(res.t_arrival[i]),
                                        SLIT_LABELS[int(res.slit[i])]))
        run.meta["integrator"] = res.meta
    run.write("trajectories.csv", trajectories_to_csv(bundle, header=run.header(n=n)))
    run.write("trajectory_impacts.csv", impacts_to_csv(impacts, header=run.header(n=n)))
    run.meta["n"] = n


def run_impacts(run: Run, args) -> None:
    cfg = run.config
    n = args.n or DEFAULT_N["impacts"]
    window = args.window
    if cfg.is_classical:
        pos, vel = sample_passing(n, cfg.seed, cfg, window=window)
        x, y, t, lab = _classical_impacts(pos, vel, cfg)
        impacts = [ImpactRecord(float(a), float(b), float(c), SLIT_LABELS[int(s)])
                   for a, b, c, s in zip(x, y, t, lab)]
        meta = {"n_requested": n, "n_flagged": 0}
    else:
        impacts, meta = simulate_impacts(n, cfg.seed, cfg, window=window)
    run.write("impacts.csv", impacts_to_csv(impacts, header=run.header(
        n=n, t_min_s=repr(float(window.t_min)), t_max_s=repr(float(window.t_max)))))
    run.meta.update(meta)


def run_scaling(run: Run, args) -> None:
    cfg = run.config
    if cfg.is_classical:
        raise ConfigError("the scaling scenario builds its own classical reference; drop --classical")
    etas = args.eta or list(DEFAULT_ETAS)
    n = args.n if args.n is not None else DEFAULT_N["scaling"]
    profiles: dict = {}
    report = scaling_report(etas, None, cfg, n_trajectories=n, seed=cfg.seed, profiles=profiles)
    run.write("scaling.csv", report.to_csv(header=run.header(resolution_m=repr(DEFAULT_RESOLUTION))))
    for eta, prof in profiles.items():
        run.write_profile(f"scaling_profile_eta{eta:g}.csv", prof, eta=repr(float(eta)))
    if report.trajectory_p90:
        run.write_table("scaling_trajectories.csv", ["eta", "p90_abs_dx_m"],
                        zip(report.divisors, report.trajectory_p90), n=n)
    run.meta.update({"etas": report.divisors, "n_trajectories": n,
                     "n_quad_slit_used": {repr(float(e)): p.meta.get("n_quad_slit_used")
                                          for e, p in profiles.items()}})


RUNNERS = {
    "before-density": run_before_density,
    "onset": run_onset,
    "evolution-map": run_evolution_map,
    "detector": run_detector,
    "trajectories": run_trajectories,
    "impacts": run_impacts,
    "scaling": run_scaling,
}


# --------------------------------------------------------------------------
# entry point


def _eta_list(text: str) -> list[float]:
    try:
        etas = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eta list {text!r}") from exc
    if not etas or any(not math.isfinite(e) or e < 1 for e in etas):
        raise argparse.ArgumentTypeError("eta values must be finite and >= 1")
    return etas


def _window(text: str) -> TimeWindow:
    try:
        lo, hi = (float(s) for s in text.split(","))
        return TimeWindow(lo, hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad window {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Neon double-slit simulation runner.")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", type=Path, help="key = value config file (defaults built in)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--n", type=int, help="number of atoms / trajectories")
    p.add_argument("--eta", type=_eta_list, help="comma-separated hbar divisors, first = 1")
    p.add_argument("--classical", action="store_true", help="hbar -> 0 ballistic baseline")
    p.add_argument("--window", type=_window, default=TimeWindow(),
                   help="arrival-time window T_MIN,T_MAX in seconds (default 0.17,0.22)")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def run(scenario: str, config: ExperimentConfig, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    r = Run(scenario, config, out, args)
    RUNNERS[scenario](r, args)
    manifest = r.manifest()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.n is not None and args.n < 1:
            raise ConfigError("--n must be >= 1")
        config = load_config(args.config) if args.config else default_shimizu_config()
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.classical:
            config = config.classical_limit()
        run(args.scenario, config, args.out, args)
    except SimulationError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
