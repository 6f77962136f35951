"""From ideal densities to what the detection plate records.

Three steps, each a pure transformation:

1. ``rho_time_window`` sums the density over the initial vertical position
   and velocity of the atoms whose arrival time lies in the acquisition
   window.
2. ``detector_smooth`` applies the finite position resolution (boxcar).
3. ``fringe_metrics`` extracts spacing and visibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aperture import DensityProfile, mode_densities
from .errors import InsufficientStructureError, UnsatisfiableWindowError
from .model import ExperimentConfig, Grid1D
from .quadrature import gauss_hermite_normal, gauss_legendre_normal
from .wavepacket import classical_z_time

DEFAULT_RESOLUTION = 80e-6
# widest v0z range considered, in units of the velocity spread
_V_SIGMAS = 8.0


@dataclass(frozen=True)
class TimeWindow:
    t_min: float = 0.17
    t_max: float = 0.22

    def __post_init__(self):
        if not (0 <= self.t_min < self.t_max):
            raise ValueError("need 0 <= t_min < t_max")

    def contains(self, t):
        t = np.asarray(t)
        return (t >= self.t_min) & (t <= self.t_max)

    def velocity_interval(self, z0: float, drop: float, g: float) -> tuple[float, float]:
        """Initial vertical velocities whose arrival at ``drop`` falls inside the window."""
        def v_at(t):
            return (drop - z0 - 0.5 * g * t * t) / t
        lo = -math.inf if math.isinf(self.t_max) else v_at(self.t_max)
        hi = math.inf if self.t_min == 0 else v_at(self.t_min)
        return lo, hi


@dataclass(frozen=True)
class FringeMetrics:
    spacing: float
    visibility: float
    peak_positions: tuple[float, ...]

    def to_text(self) -> str:
        peaks = ";".join(repr(float(p)) for p in self.peak_positions)
        return (f"spacing_m = {float(self.spacing)!r}\nvisibility = {float(self.visibility)!r}\n"
                f"n_peaks = {len(self.peak_positions)}\npeak_positions_m = {peaks}\n")


def window_nodes(window: TimeWindow, config: ExperimentConfig, quad=(16, 16),
                 method: str = "legendre"):
    """Quadrature over (z0, v0z) restricted to arrivals inside ``window``.

    Returns arrays (z0, v0z, weight) with weights summing to one. The
    ``"legendre"`` method places Gauss-Legendre nodes on the admitted v0z
    interval (exact truncation); ``"hermite"`` masks a plain Gauss-Hermite
    product rule.
    """
    n_z, n_v = quad
    sv = config.velocity_spread
    drop = config.slits.l1 + config.slits.l2
    zs, zw = gauss_hermite_normal(n_z, config.sigma_z)
    out_z, out_v, out_w = [], [], []
    if method == "hermite":
        vs, vw = gauss_hermite_normal(n_v, sv)
        for z0, wz in zip(zs, zw):
            t2 = classical_z_time(z0, vs, drop, config)
            keep = window.contains(t2)
            out_z.append(np.full(keep.sum(), z0))
            out_v.append(vs[keep])
            out_w.append(wz * vw[keep])
    elif method == "legendre":
        for z0, wz in zip(zs, zw):
            lo, hi = window.velocity_interval(z0, drop, config.g)
            lo = max(lo, -_V_SIGMAS * sv)
            hi = min(hi, _V_SIGMAS * sv)
            if not hi > lo:
                continue
            v, w = gauss_legendre_normal(n_v, lo, hi, sv)
            out_z.append(np.full(n_v, z0))
            out_v.append(v)
            out_w.append(wz * w)
    else:
        raise ValueError(f"unknown method {method!r}")
    z = np.concatenate(out_z) if out_z else np.empty(0)
    v = np.concatenate(out_v) if out_v else np.empty(0)
    w = np.concatenate(out_w) if out_w else np.empty(0)
    total = w.sum()
    if z.size == 0 or not total > 1e-300:
        raise UnsatisfiableWindowError(
            f"window [{window.t_min}, {window.t_max}] s admits no quadrature node")
    return z, v, w / total


def rho_time_window(x, window: TimeWindow, config: ExperimentConfig, quad=(16, 16),
                    method: str = "legendre", k0x=None, meta: dict | None = None,
                    mode: str = "interference"):
    """Density on the plate accumulated over all arrivals inside ``window``.

    Each (z0, v0z) node contributes its own (unnormalized) after-slit density,
    so nodes that reach the slits earlier, and hence pass more often, weigh
    more, exactly as for the atoms themselves.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z0s, v0s, ws = window_nodes(window, config, quad, method)
    drop2 = config.slits.l1 + config.slits.l2
    acc = np.zeros_like(x)
    for z0, v0z, w in zip(z0s, v0s, ws):
        t1 = classical_z_time(z0, v0z, config.slits.l1, config)
        t2 = classical_z_time(z0, v0z, drop2, config)
        acc += w * mode_densities(x, t2, t1, config, k0x=k0x, meta=meta)[mode]
    if meta is not None:
        meta["window_nodes"] = int(z0s.size)
    return acc


def time_window_profile(grid: Grid1D, window: TimeWindow, config: ExperimentConfig,
                        quad=(16, 16), method: str = "legendre",
                        mode: str = "interference") -> DensityProfile:
    meta = {"mode": "time-window", "density": mode,
            "t_min_s": repr(float(window.t_min)), "t_max_s": repr(float(window.t_max)),
            "quad_z0": quad[0], "quad_k0z": quad[1], "window_method": method}
    values = rho_time_window(grid.points, window, config, quad, method, meta=meta, mode=mode)
    return DensityProfile(grid, values, meta)


def _boxcar_weights(resolution: float, spacing: float) -> np.ndarray:
    # overlap of each sample cell with a window of exactly ``resolution`` width
    half = 0.5 * resolution
    j_max = int(math.ceil(half / spacing + 0.5))
    j = np.arange(-j_max, j_max + 1)
    lo = np.maximum(j * spacing - 0.5 * spacing, -half)
    hi = np.minimum(j * spacing + 0.5 * spacing, half)
    return np.clip(hi - lo, 0.0, None) / spacing


def detector_smooth(profile: DensityProfile, resolution: float = DEFAULT_RESOLUTION) -> DensityProfile:
    """Moving boxcar of full width ``resolution``; edge windows are truncated and renormalized.

    Windows narrower than one grid cell leave the profile unchanged. Windows
    between one and four cells wide are rejected as under-resolved.
    """
    h = profile.grid.spacing
    if h < resolution <= 4.0 * h:
        raise ValueError(f"grid spacing {h:g} m too coarse for a {resolution:g} m boxcar")
    w = _boxcar_weights(resolution, h)
    num = np.convolve(profile.values, w, mode="same")
    den = np.convolve(np.ones_like(profile.values), w, mode="same")
    meta = dict(profile.meta)
    meta["resolution_m"] = repr(float(resolution))
    return DensityProfile(profile.grid, num / den, meta)


def smooth_values(values, spacing: float, resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    w = _boxcar_weights(resolution, spacing)
    values = np.asarray(values, dtype=float)
    return np.convolve(values, w, mode="same") / np.convolve(np.ones_like(values), w, mode="same")


def detector_blur(x, resolution: float, rng: np.random.Generator) -> np.ndarray:
    """Impact positions as recorded by a plate of finite resolution (uniform error)."""
    x = np.asarray(x, dtype=float)
    return x + resolution * (rng.random(x.shape) - 0.5)


def fringe_metrics(profile: DensityProfile, min_peaks: int = 5,
                   threshold: float = 0.1) -> FringeMetrics:
    y = np.asarray(profile.values, dtype=float)
    x = profile.x
    if y.size < 5 or not np.all(np.isfinite(y)) or np.any(y < 0):
        raise ValueError("profile must be finite, non-negative and have >= 5 samples")
    top = y.max()
    if not top > 0:
        raise InsufficientStructureError("profile is identically zero")
    inner = y[1:-1]
    is_peak = (inner > y[:-2]) & (inner >= y[2:]) & (inner > threshold * top)
    idx = np.nonzero(is_peak)[0] + 1
    if idx.size < min_peaks:
        raise InsufficientStructureError(f"found {idx.size} fringes, need {min_peaks}")
    h = profile.grid.spacing
    ym, y0, yp = y[idx - 1], y[idx], y[idx + 1]
    curv = ym - 2.0 * y0 + yp
    shift = np.where(curv != 0, 0.5 * (ym - yp) / np.where(curv != 0, curv, 1.0), 0.0)
    peaks = x[idx] + np.clip(shift, -0.5, 0.5) * h
    spacing = float(np.median(np.diff(peaks)))

    # visibility over the three fringes nearest the profile's centre of mass
    centre = np.sum(x * y) / np.sum(y)
    order = np.sort(np.argsort(np.abs(peaks - centre))[:3])
    first, last = idx[order[0]], idx[order[-1]]
    vmax = y[idx[order]].max()
    vmin = y[first:last + 1].min()
    visibility = float((vmax - vmin) / (vmax + vmin))
    return FringeMetrics(spacing, visibility, tuple(float(p) for p in peaks))
