"""de Broglie-Bohm trajectories through the double slit.

The guidance velocity includes the spin term for a constant vertical spin
s = (0, 0, hbar/2):

    v = (hbar / (m rho)) [Im(psi* grad psi) + Re(psi* grad psi) x s/|s|]

Before the slits the paths are known in closed form (a scaled rotation of
the initial offset around the packet centre). After the slits x and y are
integrated with classical RK4 on a geometric step ladder, while z
follows the classical free fall.

Ensembles are processed as numpy arrays; every trajectory carries its own
clock and step size, and the step sequence of an atom depends only on its
own state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aperture import _chirp_coefficients
from .detector import window_nodes
from .errors import NumericGuardError, StatisticalBudgetError
from .model import ExperimentConfig, InitialConditions
from .quadrature import gaussian_chirp_integral, simpson_rule
from .wavepacket import classical_z_time, sigma0_t

SLIT_LABELS = ("blocked", "A", "B")
DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class SpinVector:
    s: tuple[float, float, float]

    @classmethod
    def vertical(cls, config: ExperimentConfig) -> "SpinVector":
        return cls((0.0, 0.0, 0.5 * config.hbar))

    @property
    def unit(self) -> np.ndarray:
        s = np.asarray(self.s, dtype=float)
        return s / np.linalg.norm(s)


@dataclass(frozen=True)
class TrajectoryState:
    position: tuple[float, float, float]
    t: float
    initial: InitialConditions


@dataclass(frozen=True)
class ImpactRecord:
    x: float
    y: float
    t_arrival: float
    slit: str


@dataclass
class StepControl:
    """Step policy behind the slits.

    The wave behind an aperture evolves self-similarly in t - t1, so the
    nominal step is ``rel_step * (t - t1)`` clamped to [dt_min, dt_max]. A step
    whose velocity changes by more than ``max_kick / dt`` between its first
    and last stage is retried with half the size. Below ``dt_floor`` the
    trajectory is flagged.
    """

    rel_step: float = 0.01
    dt_min: float = 1e-8
    dt_max: float = 1e-4
    max_kick: float = 1e-7
    dt_floor: float = 1e-10
    t_start: float = 1e-9
    edge_phase_cutoff: float = 50.0

    def halved(self) -> "StepControl":
        return StepControl(self.rel_step / 2, self.dt_min / 2, self.dt_max / 2, self.max_kick / 2,
                           self.dt_floor, self.t_start, self.edge_phase_cutoff)


# --------------------------------------------------------------------------
# guidance velocity


def bohm_velocity(psi, grad, config: ExperimentConfig, spin: SpinVector | None = None,
                  density_floor: float = 0.0):
    """Guidance velocity from psi and its gradient (last axis of ``grad`` has length 3).

    ``spin=None`` gives the spin-free velocity grad(S)/m.
    """
    psi = np.asarray(psi, dtype=complex)
    grad = np.asarray(grad, dtype=complex)
    rho = np.abs(psi) ** 2
    if np.any(rho <= density_floor):
        raise NumericGuardError("density below floor: trajectory too close to a node")
    j = np.conj(psi)[..., None] * grad
    flow = j.imag
    if spin is not None:
        flow = flow + np.cross(j.real, spin.unit)
    return config.hbar / (config.mass * rho[..., None]) * flow


# --------------------------------------------------------------------------
# before the slits


def _rotation_angle(t, config):
    # integral of the spin-term angular rate hbar / (2 m sigma0(t)^2)
    return np.arctan(config.hbar * np.asarray(t, dtype=float) / (2.0 * config.mass * config.sigma0 ** 2))


def _before_xy(x0, y0, vx, vy, t, config: ExperimentConfig, spin: bool = True):
    scale = sigma0_t(t, config) / config.sigma0
    if spin:
        ang = _rotation_angle(t, config)
        ca, sa = np.cos(ang), np.sin(ang)
        dx = x0 * ca - y0 * sa
        dy = x0 * sa + y0 * ca
    else:
        dx, dy = x0, y0
    return vx * t + scale * dx, vy * t + scale * dy


def _vertical(z0, vz, t, config: ExperimentConfig):
    # z is treated classically throughout
    return z0 + vz * t + 0.5 * config.g * t * t


def trajectory_before(ic: InitialConditions, t: float, config: ExperimentConfig,
                      spin: bool = True) -> TrajectoryState:
    x0, y0, z0 = ic.position
    vx, vy, vz = ic.velocity
    t1 = classical_z_time(z0, vz, config.slits.l1, config)
    if not 0 <= t <= t1 * (1 + 1e-12):
        raise ValueError("trajectory_before is only valid for 0 <= t <= t1")
    x, y = _before_xy(x0, y0, vx, vy, t, config, spin)
    z = _vertical(z0, vz, t, config)
    return TrajectoryState((float(x), float(y), float(z)), float(t), ic)


def slit_index(x_at_slit, config: ExperimentConfig):
    """0 for blocked, 1 for slit A, 2 for slit B."""
    (la, ha), (lb, hb) = config.slits.intervals
    x = np.asarray(x_at_slit)
    return np.where((x > la) & (x < ha), 1, np.where((x > lb) & (x < hb), 2, 0))


def passes_slit_arrays(pos, vel, config: ExperimentConfig, spin: bool = True):
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    t1 = classical_z_time(pos[:, 2], vel[:, 2], config.slits.l1, config)
    x1, _ = _before_xy(pos[:, 0], pos[:, 1], vel[:, 0], vel[:, 1], t1, config, spin)
    return slit_index(x1, config)


def passes_slit(ic: InitialConditions, config: ExperimentConfig, spin: bool = True) -> str:
    idx = passes_slit_arrays(np.array([ic.position]), np.array([ic.velocity]), config, spin)
    return SLIT_LABELS[int(idx[0])]


def velocity_filter_threshold(config: ExperimentConfig) -> float:
    """Largest |v0x| that can still reach a slit from |y0| <= 2 sigma0."""
    t1 = classical_z_time(0.0, 0.0, config.slits.l1, config)
    return (config.slits.outer_edge + 2.0 * float(sigma0_t(t1, config))) / t1


# --------------------------------------------------------------------------
# after the slits


def _open_intervals(config: ExperimentConfig, open_slits: str):
    if not open_slits or set(open_slits) - set("AB"):
        raise ValueError(f"open_slits must be a non-empty subset of 'AB', got {open_slits!r}")
    return [iv for label, iv in zip("AB", config.slits.intervals) if label in open_slits]


def _slit_mask(label, open_slits: str):
    """Slit index with closed openings mapped to blocked."""
    keep = [SLIT_LABELS.index(s) for s in open_slits]
    return np.where(np.isin(label, keep), label, 0)


def _after_field(x, t, t1, k0x, config: ExperimentConfig, method: str = "exact",
                 n_quad: int | None = None, edge_phase_cutoff: float | None = None,
                 open_slits: str = "AB"):
    """Spin-free v_x, d(log rho_x)/dx and relative density behind the slits.

    With ``edge_phase_cutoff`` set, and only for x inside an opening (where
    the geometric wave dominates), the boundary term of an edge is dropped
    while its Fresnel phase m (x - e)^2 / (2 hbar (t - t1)) exceeds the
    cutoff. Such an edge only adds a fast, zero-mean velocity ripple whose
    displacement is a fraction of a nanometre. In the shadow the field is
    made of edge waves alone and nothing is dropped.

    ``open_slits`` selects the openings that transmit ("A", "B" or "AB").
    """
    x = np.asarray(x, dtype=float)
    a, c, _, _ = _chirp_coefficients(x, t, k0x, t1, config)
    m, hbar = config.mass, config.hbar
    dt = np.asarray(t, dtype=float) - np.asarray(t1, dtype=float)
    kin = m / (2.0 * hbar * dt)
    a_inc = a - 1j * kin
    c_inc = c + 2j * kin * x
    intervals = _open_intervals(config, open_slits)
    # rescale f so that max |f| over the openings is one
    ra, rc = a.real, c.real
    vertex = -rc / (2.0 * ra)
    cands = [u for lo, hi in intervals for u in (lo, hi, np.clip(vertex, lo, hi))]
    shift = np.max([ra * u * u + rc * u for u in cands], axis=0)
    if method == "exact":
        H = sum(gaussian_chirp_integral(a, c, -shift, lo, hi) for lo, hi in intervals)
    elif method == "simpson":
        n = n_quad or config.slits.n_quad_slit
        H = 0
        for lo, hi in intervals:
            u, w = simpson_rule(lo, hi, n)
            f = np.exp(a[..., None] * u * u + c[..., None] * u - shift[..., None])
            H = H + f @ w
    else:
        raise ValueError(f"unknown method {method!r}")

    def f(u):
        return np.exp(a * u * u + c * u - shift)

    C = 0
    inside = np.zeros(x.shape, dtype=bool)
    for lo, hi in intervals:
        inside |= (x > lo) & (x < hi)
    for e, sign in [(edge, sg) for lo, hi in intervals for edge, sg in ((hi, 1.0), (lo, -1.0))]:
        term = sign * f(e)
        if edge_phase_cutoff is not None:
            term = np.where(~inside | (kin * (x - e) ** 2 < edge_phase_cutoff), term, 0.0)
        C = C + term
    num = (2.0 * a_inc * x + c_inc - C / H) / (2.0 * a)
    vx = num.real / dt
    dlogrho = -(2.0 * m / (hbar * dt)) * num.imag
    rel_density = np.abs(H) ** 2 / (2.0 * config.slits.width) ** 2
    return vx, dlogrho, rel_density


def velocity_after_x(x, t, t1, config: ExperimentConfig, k0x: float = 0.0,
                     method: str = "exact", density_floor: float = DENSITY_FLOOR,
                     open_slits: str = "AB"):
    """Spin-free horizontal guidance velocity behind the slits."""
    if np.any(np.asarray(t) <= np.asarray(t1)):
        raise ValueError("need t > t1")
    vx, _, rel = _after_field(x, t, t1, k0x, config, method=method, open_slits=open_slits)
    if np.any(rel < density_floor):
        raise NumericGuardError("|H| below floor: too close to a node")
    return float(vx) if np.ndim(vx) == 0 else vx


def _y_free_velocity(y, t, vy, config):
    s0t2 = sigma0_t(t, config) ** 2
    m, hbar, s0 = config.mass, config.hbar, config.sigma0
    Y = y - vy * t
    v = vy + Y * hbar * hbar * t / (4.0 * m * m * s0 * s0 * s0t2)
    dlog = -Y / s0t2
    return v, dlog


@dataclass
class EnsembleResult:
    x: np.ndarray
    y: np.ndarray
    t_arrival: np.ndarray
    x_slit: np.ndarray
    slit: np.ndarray
    flagged: np.ndarray
    steps: np.ndarray
    paths: list | None = None
    meta: dict = field(default_factory=dict)


def _field(x, y, t, p, config, spin, cutoff, open_slits):
    vxs, dlx, rel = _after_field(x, t, p["t1"], p["k0x"], config, edge_phase_cutoff=cutoff,
                                 open_slits=open_slits)
    vys, dly = _y_free_velocity(y, t, p["vy"], config)
    if spin:
        half = 0.5 * config.hbar / config.mass
        return vxs + half * dly, vys - half * dlx, rel
    return vxs, vys, rel


def integrate_after(x1, y1, t1, t2, vx0, vy0, config: ExperimentConfig, spin: bool = True,
                    control: StepControl | None = None, record_every: int = 0,
                    open_slits: str = "AB"):
    """RK4 from the slit plane (t1) down to the detector (t2), vectorized.

    Returns an :class:`EnsembleResult` holding x, y at t2.
    """
    ctl = control or StepControl()
    n = len(x1)
    k0x = config.mass * np.asarray(vx0, dtype=float) / config.hbar
    x = np.array(x1, dtype=float)
    y = np.array(y1, dtype=float)
    t1 = np.broadcast_to(np.asarray(t1, dtype=float), (n,))
    t2 = np.broadcast_to(np.asarray(t2, dtype=float), (n,))
    t = t1 + ctl.t_start
    par_all = {"t1": t1, "k0x": k0x, "vy": np.asarray(vy0, dtype=float)}
    dt = np.clip(ctl.rel_step * ctl.t_start, ctl.dt_min, ctl.dt_max) * np.ones(n)
    steps = np.zeros(n, dtype=np.int64)
    rejected = np.zeros(n, dtype=np.int64)
    flagged = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    paths = [[(float(t[i]), float(x[i]), float(y[i]))] for i in range(n)] if record_every else None

    while active.any():
        idx = np.nonzero(active)[0]
        p = {k: v[idx] for k, v in par_all.items()}
        xi, yi, ti = x[idx], y[idx], t[idx]
        h = np.minimum(dt[idx], t2[idx] - ti)
        args = (p, config, spin, ctl.edge_phase_cutoff, open_slits)
        k1x, k1y, r1 = _field(xi, yi, ti, *args)
        k2x, k2y, r2 = _field(xi + 0.5 * h * k1x, yi + 0.5 * h * k1y, ti + 0.5 * h, *args)
        k3x, k3y, r3 = _field(xi + 0.5 * h * k2x, yi + 0.5 * h * k2y, ti + 0.5 * h, *args)
        k4x, k4y, r4 = _field(xi + h * k3x, yi + h * k3y, ti + h, *args)
        rel = np.minimum(np.minimum(r1, r2), np.minimum(r3, r4))
        kick = np.hypot(k4x - k1x, k4y - k1y) * h
        with np.errstate(invalid="ignore"):
            bad = ~(rel >= DENSITY_FLOOR) | ~(kick <= ctl.max_kick)
        good = ~bad

        # near a node or too violent: retry with half the step, give up below the floor
        if bad.any():
            bi = idx[bad]
            dt[bi] = 0.5 * h[bad]
            rejected[bi] += 1
            dead = dt[bi] < ctl.dt_floor
            flagged[bi[dead]] = True
            active[bi[dead]] = False

        gi = idx[good]
        hg = h[good]
        x[gi] = xi[good] + hg / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)[good]
        y[gi] = yi[good] + hg / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)[good]
        t[gi] = ti[good] + hg
        steps[gi] += 1
        dt[gi] = np.clip(ctl.rel_step * (t[gi] - t1[gi]), ctl.dt_min, ctl.dt_max)
        done = t[gi] >= t2[gi] - 1e-15
        t[gi[done]] = t2[gi[done]]
        active[gi[done]] = False
        if paths is not None:
            for j in gi[(steps[gi] % record_every == 0) | done]:
                paths[j].append((float(t[j]), float(x[j]), float(y[j])))

    return EnsembleResult(x=x, y=y, t_arrival=t2.copy(), x_slit=np.asarray(x1, dtype=float),
                          slit=_slit_mask(slit_index(x1, config), open_slits), flagged=flagged, steps=steps, paths=paths,
                          meta={"rel_step": ctl.rel_step, "dt_min": ctl.dt_min, "dt_max": ctl.dt_max,
                                "max_kick_m": ctl.max_kick, "rejected_steps": int(rejected.sum()),
                                "flagged": int(flagged.sum())})


def integrate_ensemble(pos, vel, config: ExperimentConfig, spin: bool = True,
                       control: StepControl | None = None, record_every: int = 0,
                       open_slits: str = "AB") -> EnsembleResult:
    """Closed-form flight to the slits, then RK4 to the detector, for many atoms.

    Atoms that do not pass are returned with slit index 0 and NaN positions.
    """
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    sl = config.slits
    t1 = classical_z_time(pos[:, 2], vel[:, 2], sl.l1, config)
    t2 = classical_z_time(pos[:, 2], vel[:, 2], sl.l1 + sl.l2, config)
    x1, y1 = _before_xy(pos[:, 0], pos[:, 1], vel[:, 0], vel[:, 1], t1, config, spin)
    label = _slit_mask(slit_index(x1, config), open_slits)
    through = label > 0
    n = len(pos)
    out = EnsembleResult(x=np.full(n, np.nan), y=np.full(n, np.nan), t_arrival=t2,
                         x_slit=x1, slit=label, flagged=np.zeros(n, dtype=bool),
                         steps=np.zeros(n, dtype=np.int64),
                         paths=[None] * n if record_every else None)
    if through.any():
        res = integrate_after(x1[through], y1[through], t1[through], t2[through],
                              vel[through, 0], vel[through, 1], config, spin, control,
                              record_every, open_slits)
        out.x[through] = res.x
        out.y[through] = res.y
        out.flagged[through] = res.flagged
        out.steps[through] = res.steps
        out.meta = res.meta
        if record_every:
            for j, path in zip(np.nonzero(through)[0], res.paths):
                out.paths[j] = path
    return out


def integrate_trajectory(ic: InitialConditions, config: ExperimentConfig, spin: bool = True,
                         control: StepControl | None = None, n_before: int = 50,
                         record_every: int = 1):
    """Full path of one atom and its impact record."""
    res = integrate_ensemble(np.array([ic.position]), np.array([ic.velocity]), config, spin,
                             control, record_every=record_every)
    label = SLIT_LABELS[int(res.slit[0])]
    if label == "blocked":
        raise ValueError("initial conditions do not pass the slits")
    if res.flagged[0]:
        raise NumericGuardError("trajectory flagged: step fell below the floor near a node")
    z0, vz = ic.position[2], ic.velocity[2]
    t1 = classical_z_time(z0, vz, config.slits.l1, config)
    states = [trajectory_before(ic, tb, config, spin) for tb in np.linspace(0.0, t1, n_before)]
    for tt, xx, yy in res.paths[0]:
        states.append(TrajectoryState((xx, yy, float(_vertical(z0, vz, tt, config))), tt, ic))
    impact = ImpactRecord(float(res.x[0]), float(res.y[0]), float(res.t_arrival[0]), label)
    return states, impact


# --------------------------------------------------------------------------
# source sampling


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox counter-based generator for substream ``stream`` of ``seed``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(stream)))


# stream ids
_SOURCE, _COND_BASE = 0, 1 << 32


def source_arrays(n: int, seed: int, config: ExperimentConfig, stream: int = _SOURCE):
    """Positions ~ N(0, (s0, s0, sz)) and velocities ~ N(0, v) per axis."""
    if n < 1:
        raise ValueError("n must be >= 1")
    # one row of six normals per atom, so a longer run extends a shorter one
    draw = generator(seed, stream).standard_normal((n, 6))
    spread = np.array([config.sigma0, config.sigma0, config.sigma_z])
    return draw[:, :3] * spread, draw[:, 3:] * config.velocity_spread


def sample_source(n: int, seed: int, config: ExperimentConfig) -> list[InitialConditions]:
    pos, vel = source_arrays(n, seed, config)
    return [InitialConditions(tuple(p), tuple(v)) for p, v in zip(pos.tolist(), vel.tolist())]


def sample_passing(n: int, seed: int, config: ExperimentConfig, spin: bool = True,
                   window=None, transverse_velocity: bool = True, chunk: int = 65536,
                   max_chunks: int = 100000, open_slits: str = "AB"):
    """Source atoms conditioned on crossing a slit (and, optionally, on arrival time).

    Rejection sampling with a box envelope for v0x: given the other
    coordinates, the v0x values that hit an open slit form one interval of
    length b / t1 per opening, so v0x is drawn uniformly there and accepted with
    probability exp(-v0x^2 / (2 sigma_v^2)) * t1_ref / t1. The second factor
    makes early arrivals, which see a wider v0x band, proportionally more
    likely; t1_ref is the arrival time of an 8-sigma fast atom. With ``transverse_velocity=False``
    v0x = v0y = 0 and the positions alone are rejected (classical-limit
    runs with k0x = 0).
    """
    if window is not None:
        window_nodes(window, config)  # fails fast when no arrival can fall in the window
    sl = config.slits
    sv = config.velocity_spread
    intervals = _open_intervals(config, open_slits)
    starts = np.array([lo for lo, _ in intervals])
    t1_ref = classical_z_time(8.0 * config.sigma_z, 8.0 * sv, sl.l1, config)
    out_p, out_v, got = [], [], 0
    for c in range(max_chunks):
        rng = generator(seed, _COND_BASE + c)
        x0 = rng.standard_normal(chunk) * config.sigma0
        y0 = rng.standard_normal(chunk) * config.sigma0
        z0 = rng.standard_normal(chunk) * config.sigma_z
        vz = rng.standard_normal(chunk) * sv
        vy = rng.standard_normal(chunk) * sv if transverse_velocity else np.zeros(chunk)
        pick = rng.random(chunk)
        accept_u = rng.random(chunk)
        t1 = classical_z_time(z0, vz, sl.l1, config)
        ok = np.ones(chunk, dtype=bool)
        if window is not None:
            t2 = classical_z_time(z0, vz, sl.l1 + sl.l2, config)
            ok &= window.contains(t2)
        r, _ = _before_xy(x0, y0, 0.0, 0.0, t1, config, spin)
        if transverse_velocity:
            # x(t1) = vx t1 + r must land in [lo, hi] of the chosen slit
            which, u = np.divmod(pick * len(starts), 1.0)
            vx = (starts[which.astype(int)] + u * sl.width - r) / t1
            ok &= accept_u < np.exp(-0.5 * (vx / sv) ** 2) * np.minimum(t1_ref / t1, 1.0)
        else:
            vx = np.zeros(chunk)
            ok &= _slit_mask(slit_index(r, config), open_slits) > 0
        idx = np.nonzero(ok)[0]
        out_p.append(np.column_stack([x0[idx], y0[idx], z0[idx]]))
        out_v.append(np.column_stack([vx[idx], vy[idx], vz[idx]]))
        got += idx.size
        if got >= n:
            break
    else:
        raise StatisticalBudgetError(f"only {got} of {n} passing atoms after {max_chunks} chunks")
    pos = np.concatenate(out_p)[:n]
    vel = np.concatenate(out_v)[:n]
    return pos, vel


def simulate_impacts(n: int, seed: int, config: ExperimentConfig, spin: bool = True,
                     window=None, control: StepControl | None = None,
                     max_flagged_fraction: float = 0.01, open_slits: str = "AB"):
    """Impacts of ``n`` atoms that went through the slits.

    Returns (impacts, meta). Flagged trajectories are dropped and counted.
    """
    pos, vel = sample_passing(n, seed, config, spin=spin, window=window, open_slits=open_slits)
    res = integrate_ensemble(pos, vel, config, spin=spin, control=control, open_slits=open_slits)
    keep = ~res.flagged
    n_flag = int(res.flagged.sum())
    if n_flag > max_flagged_fraction * n:
        raise StatisticalBudgetError(f"{n_flag} of {n} trajectories flagged near nodes")
    impacts = [ImpactRecord(float(x), float(y), float(t), SLIT_LABELS[int(s)])
               for x, y, t, s in zip(res.x[keep], res.y[keep], res.t_arrival[keep], res.slit[keep])]
    meta = dict(res.meta)
    meta.update({"n_requested": n, "n_flagged": n_flag, "seed": seed, "open_slits": open_slits,
                 "mean_steps": float(res.steps.mean()), "max_steps": int(res.steps.max())})
    return impacts, meta


# --------------------------------------------------------------------------
# classical (hbar = 0) reference


def classical_trajectory(ic: InitialConditions, config: ExperimentConfig, n_points: int = 100):
    """Ballistic flight with gravity, stopped by the slit plate unless inside an opening."""
    x0, y0, z0 = ic.position
    vx, vy, vz = ic.velocity
    sl = config.slits
    t1 = classical_z_time(z0, vz, sl.l1, config)
    t2 = classical_z_time(z0, vz, sl.l1 + sl.l2, config)
    label = SLIT_LABELS[int(slit_index(x0 + vx * t1, config))]
    t_end = t1 if label == "blocked" else t2
    states = []
    for tt in np.linspace(0.0, t_end, n_points):
        pos = (x0 + vx * tt, y0 + vy * tt, z0 + vz * tt + 0.5 * config.g * tt * tt)
        states.append(TrajectoryState(tuple(float(p) for p in pos), float(tt), ic))
    if label == "blocked":
        return states, ImpactRecord(float(x0 + vx * t1), float(y0 + vy * t1), float(t1), label)
    return states, ImpactRecord(float(x0 + vx * t2), float(y0 + vy * t2), float(t2), label)


# --------------------------------------------------------------------------
# CSV


def impacts_to_csv(impacts, path=None, header: dict | None = None) -> str:
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append("x_m,y_m,t_s,slit")
    lines += [f"{float(r.x)!r},{float(r.y)!r},{float(r.t_arrival)!r},{r.slit}" for r in impacts]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def trajectories_to_csv(bundle, path=None, header: dict | None = None) -> str:
    """``bundle`` is a list of state lists, one per trajectory."""
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append("traj_id,t_s,x_m,y_m,z_m")
    for i, states in enumerate(bundle):
        for s in states:
            x, y, z = s.position
            lines.append(f"{i},{float(s.t)!r},{float(x)!r},{float(y)!r},{float(z)!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
