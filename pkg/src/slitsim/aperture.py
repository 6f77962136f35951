"""Wavefunction and density behind the double slit.

psi_A and psi_B are obtained by integrating the free kernel against the
before-slit packet over each slit opening (composite Simpson on uniform
nodes). The density then averages |psi_A + psi_B|^2 over the initial
transverse wave number k0x.

Only a narrow band of k0x ever reaches the slits: the packet centre sits at
v0x t1 and the slits are a few micrometres wide, whereas the thermal spread
moves packets by centimetres. The k0x average is therefore done with
Gauss-Legendre nodes over that band, weighted by the Gaussian prior.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ExperimentConfig, Grid1D, default_shimizu_config
from .quadrature import (gauss_legendre, gauss_legendre_normal, gaussian_chirp_integral,
                         normal_pdf, oscillation_intervals, simpson_rule)
from .wavepacket import classical_z_time, complex_width, psi_transverse_free, sigma0_t

MODES = ("interference", "diffraction-sum", "classical", "slit-A", "slit-B")

# elements per kernel block; bounds memory at ~32 MB of complex128
_BLOCK = 2_000_000
# k0x band half-width in units of sigma0(t1) beyond the outer slit edge
_K_BAND_SIGMAS = 8.0
# Simpson nodes per local phase period demanded by the oscillation guard; 8 is
# the bare minimum, 20 keeps the relative error near 1e-5 in the near field
GUARD_NODES_PER_PERIOD = 20


@dataclass
class SlitAmplitudes:
    psiA: np.ndarray
    psiB: np.ndarray

    @property
    def psi(self):
        return self.psiA + self.psiB


@dataclass
class DensityProfile:
    grid: Grid1D
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("values do not match the grid")

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.x))

    def normalized(self) -> "DensityProfile":
        return DensityProfile(self.grid, self.values / self.integral(), dict(self.meta))

    def to_csv(self, path=None, header: dict | None = None) -> str:
        buf = io.StringIO()
        for key, value in {**self.meta, **(header or {})}.items():
            buf.write(f"# {key} = {value}\n")
        buf.write("x_m,rho_per_m\n")
        for xi, vi in zip(self.x, self.values):
            buf.write(f"{float(xi)!r},{float(vi)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "DensityProfile":
        meta, rows = {}, []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                rows.append(line)
        data = list(csv.reader(rows))
        if data[0] != ["x_m", "rho_per_m"]:
            raise ValueError("not a density profile CSV")
        arr = np.array([[float(a), float(b)] for a, b in data[1:]])
        grid = Grid1D(arr[0, 0], arr[-1, 0], len(arr))
        return cls(grid, arr[:, 1], meta)


# --------------------------------------------------------------------------
# quadrature set-up


def slit_time(k0z: float, z0: float, config: ExperimentConfig) -> float:
    """t1: arrival of the packet centre at the slit plane."""
    v0z = config.hbar * k0z / config.mass if config.hbar else 0.0
    return classical_z_time(z0, v0z, config.slits.l1, config)


def time_after_drop(delta_z: float, k0z: float, z0: float, config: ExperimentConfig):
    """(t1, t) for a point ``delta_z`` below the slit plane."""
    if not delta_z > 0:
        raise ValueError("delta_z must be positive")
    v0z = config.hbar * k0z / config.mass if config.hbar else 0.0
    t1 = classical_z_time(z0, v0z, config.slits.l1, config)
    t = classical_z_time(z0, v0z, config.slits.l1 + delta_z, config)
    return t1, t


def k_band(t1: float, config: ExperimentConfig) -> float:
    """Half-width of the k0x band whose packets overlap the slits at t1."""
    reach = config.slits.outer_edge + _K_BAND_SIGMAS * float(sigma0_t(t1, config))
    band = config.mass * reach / (config.hbar * t1)
    return min(band, _K_BAND_SIGMAS * config.tau)


def k_quadrature(t1: float, config: ExperimentConfig, n: int | None = None):
    """k0x nodes and prior-weighted weights over the contributing band."""
    n = n or config.slits.n_quad_k
    kmax = k_band(t1, config)
    return gauss_legendre_normal(n, -kmax, kmax, config.tau)


def _required_intervals(x, t, t1, ks, config: ExperimentConfig) -> int:
    sl = config.slits
    m, hbar = config.mass, config.hbar
    x = np.atleast_1d(x)
    far = max(abs(float(np.max(x)) + sl.outer_edge), abs(float(np.min(x)) - sl.outer_edge))
    s1 = complex_width(t1, config.sigma0, config)
    chirp = abs((1.0 / (2.0 * config.sigma0 * s1)).imag)
    v0t1 = hbar * np.max(np.abs(ks)) / m * t1
    rate = m * far / (hbar * (t - t1)) + float(np.max(np.abs(ks))) + chirp * (sl.outer_edge + v0t1)
    return oscillation_intervals(sl.width, rate, GUARD_NODES_PER_PERIOD)


def slit_amplitudes(x, t: float, ks, t1: float, config: ExperimentConfig,
                    n_quad: int | None = None, guard: bool = True, meta: dict | None = None):
    """psi_A, psi_B at points ``x`` (shape (Nx, Nk)) for every k0x in ``ks``."""
    if not t > t1:
        raise ValueError("need t > t1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    n = int(n_quad or config.slits.n_quad_slit)
    if guard:
        need = _required_intervals(x, t, t1, ks, config)
        if need > n:
            n = need
    if meta is not None:
        meta["n_quad_slit_used"] = max(n + n % 2, int(meta.get("n_quad_slit_used", 0)))
    m, hbar = config.mass, config.hbar
    dt = t - t1
    pref = math.sqrt(m / (2.0 * math.pi * hbar * dt)) * np.exp(-0.25j * math.pi)
    out = []
    for lo, hi in config.slits.intervals:
        u, w = simpson_rule(lo, hi, n)
        src = psi_transverse_free(u[:, None], t1, ks[None, :], config) * w[:, None]
        res = np.empty((x.size, ks.size), dtype=complex)
        step = max(1, _BLOCK // u.size)
        for i in range(0, x.size, step):
            xb = x[i:i + step]
            d = xb[:, None] - u[None, :]
            kern = np.exp(1j * (m / (2.0 * hbar * dt)) * d * d)
            res[i:i + step] = kern @ src
        out.append(pref * res)
    return out[0], out[1]


def psi_after_slits(x, t: float, k0x: float, t1: float, config: ExperimentConfig,
                    n_quad: int | None = None, guard: bool = True) -> SlitAmplitudes:
    scalar = np.ndim(x) == 0
    a, b = slit_amplitudes(x, t, [k0x], t1, config, n_quad=n_quad, guard=guard)
    a, b = a[:, 0], b[:, 0]
    if scalar:
        return SlitAmplitudes(complex(a[0]), complex(b[0]))
    return SlitAmplitudes(a, b)


def _chirp_coefficients(x, t, k0x, t1, config: ExperimentConfig):
    """(a, c, c0) such that K_x psi(u, t1) = pref * exp(a u^2 + c u + c0)."""
    m, hbar = config.mass, config.hbar
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    k0x = np.asarray(k0x, dtype=float)
    dt = t - t1
    s1 = complex_width(t1, config.sigma0, config)
    center = hbar * k0x / m * t1
    inv = 1.0 / (4.0 * config.sigma0 * s1)
    a = -inv + 1j * m / (2.0 * hbar * dt)
    c = 2.0 * center * inv + 1j * k0x - 1j * m * x / (hbar * dt)
    c0 = -center * center * inv - 1j * k0x * center + 1j * m * x * x / (2.0 * hbar * dt)
    pref = np.sqrt(m / (2.0 * math.pi * hbar * dt)) * np.exp(-0.25j * math.pi) \
        * (2.0 * math.pi) ** -0.25 / np.sqrt(s1)
    return a, c, c0, pref


def psi_after_slits_exact(x, t, k0x, t1, config: ExperimentConfig) -> SlitAmplitudes:
    """Same amplitudes as :func:`psi_after_slits`, integrated in closed form."""
    a, c, c0, pref = _chirp_coefficients(x, t, k0x, t1, config)
    (la, ha), (lb, hb) = config.slits.intervals
    return SlitAmplitudes(pref * gaussian_chirp_integral(a, c, c0, la, ha),
                          pref * gaussian_chirp_integral(a, c, c0, lb, hb))


# --------------------------------------------------------------------------
# densities


def _classical_density(x, t, t1, config: ExperimentConfig, k0x=None):
    """Ballistic (hbar = 0) density: straight flight, blocked outside the slits."""
    x = np.asarray(x, dtype=float)
    dt = t - t1
    s0 = config.sigma0
    out = np.zeros_like(x)
    if k0x is not None:
        v = config.hbar * k0x / config.mass if config.hbar else 0.0
        for lo, hi in config.slits.intervals:
            at_slit = x - v * dt
            inside = (at_slit > lo) & (at_slit < hi)
            out += np.where(inside, normal_pdf(x - v * t, s0), 0.0)
        return out
    sv = config.velocity_spread
    for lo, hi in config.slits.intervals:
        # velocities that carry x back through this slit
        vlo = (x - hi) / dt
        vhi = (x - lo) / dt
        nodes, w = gauss_legendre(48, 0.0, 1.0)
        v = vlo[:, None] + (vhi - vlo)[:, None] * nodes[None, :]
        f = normal_pdf(v, sv) * normal_pdf(x[:, None] - v * t, s0)
        out += (f * w[None, :]).sum(axis=1) * (vhi - vlo)
    return out


def mode_densities(x, t: float, t1: float, config: ExperimentConfig, k0x=None,
                   n_quad: int | None = None, n_k: int | None = None, meta: dict | None = None):
    """All quantum densities at (x, t): interference, diffraction-sum, slit-A, slit-B.

    With ``k0x=None`` the densities are averaged over the k0x prior; with a
    number they are evaluated for that single wave number.
    """
    if k0x is None:
        ks, kw = k_quadrature(t1, config, n_k)
    else:
        ks, kw = np.array([float(k0x)]), np.array([1.0])
    if meta is not None:
        meta["n_quad_k"] = int(ks.size)
    a, b = slit_amplitudes(x, t, ks, t1, config, n_quad=n_quad, meta=meta)
    da = (np.abs(a) ** 2) @ kw
    db = (np.abs(b) ** 2) @ kw
    return {
        "interference": (np.abs(a + b) ** 2) @ kw,
        "diffraction-sum": da + db,
        "slit-A": da,
        "slit-B": db,
    }


def rho_after(x, t: float, k0z: float, z0: float, config: ExperimentConfig, k0x=None,
              n_quad: int | None = None, meta: dict | None = None):
    """k0x-averaged interference density behind the slits."""
    t1 = slit_time(k0z, z0, config)
    if not t > t1:
        raise ValueError("t must be later than the slit crossing")
    scalar = np.ndim(x) == 0
    out = mode_densities(np.atleast_1d(x), t, t1, config, k0x=k0x, n_quad=n_quad,
                         meta=meta)["interference"]
    return float(out[0]) if scalar else out


def density_profile(grid: Grid1D | None, delta_z: float, k0z: float = 0.0, z0: float = 0.0,
                    mode: str = "interference", config: ExperimentConfig | None = None,
                    k0x=None, n_quad: int | None = None) -> DensityProfile:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    config = config or default_shimizu_config()
    t1, t = time_after_drop(delta_z, k0z, z0, config)
    meta = {"mode": mode, "t_s": repr(float(t)), "t1_s": repr(float(t1)), "delta_z_m": repr(float(delta_z)),
            "k0z_per_m": repr(float(k0z)), "z0_m": repr(float(z0)),
            "k0x_per_m": "averaged" if k0x is None else repr(float(k0x))}
    grid = grid or auto_grid(delta_z, config)
    x = grid.points
    if mode == "classical" or config.is_classical:
        values = _classical_density(x, t, t1, config, k0x=k0x)
        meta["mode"] = "classical"
    else:
        values = mode_densities(x, t, t1, config, k0x=k0x, n_quad=n_quad, meta=meta)[mode]
    return DensityProfile(grid, values, meta)


def auto_grid(delta_z: float, config: ExperimentConfig, n_max: int = 4001,
              k_averaged: bool = True) -> Grid1D:
    """Symmetric grid wide enough for the pattern at ``delta_z`` and fine enough for its fringes."""
    t1, t = time_after_drop(delta_z, 0.0, 0.0, config)
    dt = t - t1
    sl = config.slits
    m, hbar = config.mass, config.hbar
    h = 2.0 * math.pi * hbar
    envelope = h * dt / (m * sl.width)
    ripple = math.sqrt(hbar * dt / m)
    drift = 0.0
    if k_averaged:
        drift = hbar * k_band(t1, config) / m * dt
    half = sl.outer_edge + 3.0 * envelope + 10.0 * ripple + drift
    fringe = h * dt / (m * sl.separation)
    step = min(fringe / 20.0, ripple / 4.0)
    n = min(n_max, int(math.ceil(2.0 * half / step)) + 1)
    n += 1 - n % 2
    return Grid1D(-half, half, n)


def l1_distance(p, q, x) -> float:
    """L1 distance between two densities after normalizing each on ``x``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p = p / np.trapezoid(p, x)
    q = q / np.trapezoid(q, x)
    return float(np.trapezoid(np.abs(p - q), x))


def coherence_gap(grid: Grid1D | None, delta_z: float, config: ExperimentConfig) -> float:
    """L1 distance between normalized interference and diffraction-sum profiles."""
    grid = grid or auto_grid(delta_z, config)
    t1, t = time_after_drop(delta_z, 0.0, 0.0, config)
    dens = mode_densities(grid.points, t, t1, config)
    return l1_distance(dens["interference"], dens["diffraction-sum"], grid.points)
