"""Classical limit: the whole pipeline with Planck's constant divided by eta.

The comparison follows the usual semiclassical recipe: the source launches
every atom with k0x = k0z = 0, so in the hbar -> 0 limit the atoms fly
straight down and the plate shows the source density cut out by the two
openings. Quantum and classical profiles are compared after an 80 um boxcar,
so the distance measures the envelope and not fringes far below the
detector resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .aperture import DensityProfile, auto_grid, density_profile, l1_distance
from .bohm import generator, integrate_ensemble, sample_passing
from .detector import DEFAULT_RESOLUTION, fringe_metrics, smooth_values
from .errors import InsufficientStructureError
from .model import ExperimentConfig, Grid1D

DETECTOR_DROP = 0.113
COMPARISON_STEP = 2e-6
_FINE_POINTS = 8001
# RNG substream for bootstrap resampling
_BOOT_STREAM = 1 << 48


@dataclass
class ScalingReport:
    divisors: list[float]
    fringe_spacings: list[float]       # nan where no fringes could be resolved
    classical_distance: list[float]
    trajectory_p90: list[float] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.divisors)
        if len(self.fringe_spacings) != n or len(self.classical_distance) != n:
            raise ValueError("report lists must be index-aligned")
        if self.trajectory_p90 and len(self.trajectory_p90) != n:
            raise ValueError("report lists must be index-aligned")
        if any(d < 0 for d in self.classical_distance):
            raise ValueError("distances must be non-negative")

    def to_csv(self, path=None, header: dict | None = None) -> str:
        lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
        lines.append("eta,fringe_spacing_m,classical_l1")
        for eta, s, d in zip(self.divisors, self.fringe_spacings, self.classical_distance):
            lines.append(f"{float(eta)!r},{'' if math.isnan(s) else repr(float(s))},{float(d)!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def scaled_density(eta: float, grid: Grid1D | None, config: ExperimentConfig,
                   delta_z: float = DETECTOR_DROP) -> DensityProfile:
    """Interference profile at ``delta_z`` with hbar / eta and k0x = k0z = 0.

    Without a grid, one fine enough for the scaled fringes is chosen. The slit
    quadrature starts at sqrt(eta) times the configured size; the oscillation
    guard refines further where needed.
    """
    if eta < 1:
        raise ValueError("eta must be >= 1")
    cfg = config.scaled(eta) if eta != 1 else config
    grid = grid or auto_grid(delta_z, cfg, n_max=_FINE_POINTS, k_averaged=False)
    n_quad = int(math.ceil(cfg.slits.n_quad_slit * math.sqrt(eta)))
    prof = density_profile(grid, delta_z, 0.0, 0.0, "interference", cfg, k0x=0.0, n_quad=n_quad)
    prof.meta["eta"] = repr(float(eta))
    return prof


def comparison_grid(config: ExperimentConfig, delta_z: float = DETECTOR_DROP,
                    step: float = COMPARISON_STEP) -> Grid1D:
    """Common coarse grid covering the widest (eta = 1) pattern plus the boxcar."""
    half = auto_grid(delta_z, config, k_averaged=False).max + DEFAULT_RESOLUTION
    n = int(math.ceil(2.0 * half / step)) + 1
    n += 1 - n % 2
    return Grid1D(-half, half, n)


def _cell_edges(grid: Grid1D) -> np.ndarray:
    x = grid.points
    h = grid.spacing
    return np.concatenate([x - 0.5 * h, [x[-1] + 0.5 * h]])


def cell_average(profile: DensityProfile, grid: Grid1D) -> np.ndarray:
    """Mean of a finely sampled profile over each cell of a coarser grid."""
    x, y = profile.x, profile.values
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
    edges = np.clip(_cell_edges(grid), x[0], x[-1])
    return np.diff(np.interp(edges, x, cum)) / grid.spacing


def classical_cell_average(grid: Grid1D, config: ExperimentConfig) -> np.ndarray:
    """Exact cell means of the k0x = 0 classical density (source Gaussian cut by the slits)."""
    edges = _cell_edges(grid)
    s = config.sigma0
    mass = np.zeros(grid.n_points)
    for lo, hi in config.slits.intervals:
        a = np.clip(edges[:-1], lo, hi)
        b = np.clip(edges[1:], lo, hi)
        mass += ndtr(b / s) - ndtr(a / s)
    return mass / grid.spacing


def classical_distance(profile: DensityProfile, config: ExperimentConfig, grid: Grid1D,
                       resolution: float = DEFAULT_RESOLUTION) -> float:
    q = smooth_values(cell_average(profile, grid), grid.spacing, resolution)
    c = smooth_values(classical_cell_average(grid, config), grid.spacing, resolution)
    return l1_distance(q, c, grid.points)


def classical_self_distance(config: ExperimentConfig, n: int = 5000, n_boot: int = 200, seed: int = 0,
                            grid: Grid1D | None = None,
                            resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    """Bootstrap distances of ``n`` classical impacts from their own exact density.

    Impacts are drawn from the k0x = 0 classical plate density; each bootstrap
    resample is binned on the comparison grid, smoothed, and compared to the
    smoothed exact density. The spread is the noise floor a converged quantum
    profile should fall into.
    """
    classical = config.classical_limit()
    grid = grid or comparison_grid(config)
    pos, _ = sample_passing(n, seed, classical, transverse_velocity=False)
    x = pos[:, 0]
    exact = smooth_values(classical_cell_average(grid, config), grid.spacing, resolution)
    rng = generator(seed, _BOOT_STREAM)
    edges = _cell_edges(grid)
    out = np.empty(n_boot)
    for i in range(n_boot):
        counts, _ = np.histogram(rng.choice(x, size=n), bins=edges)
        hist = smooth_values(counts / (n * grid.spacing), grid.spacing, resolution)
        out[i] = l1_distance(hist, exact, grid.points)
    return out


def trajectory_deviation(eta: float, config: ExperimentConfig, n: int = 200, seed: int = 0,
                         percentile: float = 90.0, spin: bool = True) -> float:
    """Percentile of |x(t2) - x_classical(t2)| over Bohmian atoms with k0x = k0z = 0.

    The classical reference continues each atom ballistically (no transverse
    velocity) from the point where its Bohmian path crossed the slit plane.
    """
    cfg = config.scaled(eta) if eta != 1 else config
    pos, vel = sample_passing(n, seed, cfg, spin=spin, transverse_velocity=False)
    pos[:, 2] = 0.0
    vel[:, 2] = 0.0
    res = integrate_ensemble(pos, vel, cfg, spin=spin)
    ok = np.isfinite(res.x) & ~res.flagged
    return float(np.percentile(np.abs(res.x[ok] - res.x_slit[ok]), percentile))


def scaling_report(divisors, grid: Grid1D | None, config: ExperimentConfig,
                   delta_z: float = DETECTOR_DROP, n_trajectories: int = 0, seed: int = 0,
                   profiles: dict | None = None) -> ScalingReport:
    """Fringe spacing and smoothed classical distance for each divisor.

    ``grid`` is the common comparison grid (chosen automatically when None);
    each divisor's profile is computed on its own fine grid. Pass a dict as
    ``profiles`` to receive those profiles.
    """
    divisors = [float(e) for e in divisors]
    if not divisors or divisors[0] != 1 or sorted(divisors) != divisors:
        raise ValueError("divisors must be sorted ascending and start at 1")
    grid = grid or comparison_grid(config, delta_z)
    spacings, dists, p90 = [], [], []
    for eta in divisors:
        prof = scaled_density(eta, None, config, delta_z)
        if profiles is not None:
            profiles[eta] = prof
        try:
            spacings.append(fringe_metrics(prof).spacing)
        except InsufficientStructureError:
            spacings.append(math.nan)
        dists.append(classical_distance(prof, config, grid))
        if n_trajectories:
            p90.append(trajectory_deviation(eta, config, n_trajectories, seed))
    return ScalingReport(divisors, spacings, dists, p90)
