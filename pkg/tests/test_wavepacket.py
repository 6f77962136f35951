import math

import numpy as np
import pytest
from scipy.special import ndtri

from slitsim import bohm
from slitsim.model import InitialConditions
from slitsim.quadrature import gauss_hermite_normal
from slitsim.wavepacket import (classical_z_time, complex_width, eps0_t, initial_psi, psi_transverse_free,
                                psi_vertical, rho_transverse_before, sigma0_t, spread_state)


def test_initial_psi_at_origin(cfg):
    v = initial_psi(np.zeros(3), (0.0, 0.0, 0.0), cfg)
    expected = (2 * math.pi * cfg.sigma0 ** 2) ** -0.5 * (2 * math.pi * cfg.sigma_z ** 2) ** -0.25
    assert v.real == pytest.approx(expected, rel=1e-14) and abs(v.imag) < 1e-12 * expected


def test_initial_psi_normalized(cfg):
    def axis(s):
        x, w = gauss_hermite_normal(40, s / math.sqrt(2))  # |psi|^2 is N(0, s)
        return x, w
    total = 1.0
    for s, k in ((cfg.sigma0, 0), (cfg.sigma0, 1), (cfg.sigma_z, 2)):
        u = np.linspace(-8 * s, 8 * s, 4001)
        p = np.zeros((u.size, 3))
        p[:, k] = u
        dens = np.abs(initial_psi(p, (0.0, 0.0, 0.0), cfg)) ** 2
        other = np.abs(initial_psi(np.zeros(3), (0.0, 0.0, 0.0), cfg)) ** 2
        norm_other = (2 * math.pi * s * s) ** -0.5
        total *= np.trapezoid(dens / other * norm_other, u)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_initial_psi_phase(cfg):
    ic = InitialConditions.from_wave_vector((0, 0, 0), (2e5, 0, 0), cfg)
    x = 3e-6
    v = initial_psi(np.array([x, 0.0, 0.0]), ic, cfg)
    assert np.angle(v) == pytest.approx(math.remainder(2e5 * x, 2 * math.pi), abs=1e-12)


def test_packet_centre_density(cfg):
    k0, t = 5e4, 0.08
    v0 = cfg.hbar * k0 / cfg.mass
    d = abs(psi_transverse_free(v0 * t, t, k0, cfg)) ** 2
    assert d == pytest.approx((2 * math.pi * sigma0_t(t, cfg) ** 2) ** -0.5, rel=1e-13)


def test_packet_t0_and_norm(cfg, times):
    u = np.linspace(-5e-5, 5e-5, 11)
    ref = initial_psi(np.column_stack([u, 0 * u, 0 * u]), (1e4, 0, 0), cfg)
    ref = ref / ((2 * math.pi * cfg.sigma0 ** 2) ** -0.25 * (2 * math.pi * cfg.sigma_z ** 2) ** -0.25)
    assert np.allclose(psi_transverse_free(u, 0.0, 1e4, cfg), ref, rtol=1e-13)
    t1 = 0.124
    e = float(eps0_t(t1, cfg))
    u = np.linspace(-8 * e, 8 * e, 400001)
    norm = np.trapezoid(np.abs(psi_transverse_free(u, t1, 0.0, cfg)) ** 2, u)
    assert norm == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        psi_transverse_free(0.0, -1.0, 0.0, cfg)


def test_spread_widths(cfg):
    t = np.linspace(0, 0.2, 201)
    s, e = sigma0_t(t, cfg), eps0_t(t, cfg)
    assert np.all(e >= s) and np.all(s >= cfg.sigma0)
    assert np.all(np.diff(s) >= 0) and np.all(np.diff(e) >= 0)
    assert np.allclose(s, np.abs(complex_width(t, cfg.sigma0, cfg)), rtol=1e-14)
    assert np.allclose(e ** 2, s ** 2 + (cfg.hbar * t * cfg.source.sigma_k / cfg.mass) ** 2, rtol=1e-12)
    st = spread_state(0.124, cfg)
    assert st.sigma0t == pytest.approx(2.2e-5, abs=1e-7)
    assert st.eps0t == pytest.approx(0.0727, rel=2e-3)


def test_rho_before_closed_forms(cfg):
    t = 0.1
    e = float(eps0_t(t, cfg))
    assert rho_transverse_before(0.0, t, cfg) == pytest.approx((2 * math.pi * e * e) ** -0.5, rel=1e-14)
    u = np.linspace(-3e-5, 3e-5, 7)
    s = cfg.sigma0
    assert np.allclose(rho_transverse_before(u, 0.0, cfg),
                       np.exp(-u * u / (2 * s * s)) / math.sqrt(2 * math.pi * s * s), rtol=1e-13)


def test_rho_before_matches_monte_carlo(cfg):
    # only k0 within ~1e-4 tau of u m / (hbar t) contribute, so plain sampling
    # leaves a few hundred useful draws; stratify the uniforms instead
    rng = bohm.generator(11, 0)
    n = 1_000_000
    k = ndtri((np.arange(n) + rng.random(n)) / n) * cfg.tau
    t = 0.124
    e = float(eps0_t(t, cfg))
    for u in np.array([-1.0, -0.4, 0.0, 0.3, 1.2]) * e:
        mc = np.mean(np.abs(psi_transverse_free(u, t, k, cfg)) ** 2)
        assert mc == pytest.approx(float(rho_transverse_before(u, t, cfg)), rel=1e-2)


def test_psi_vertical(cfg):
    t, k0z = 0.196, 2e6
    v0 = cfg.hbar * k0z / cfg.mass
    centre = v0 * t + 0.5 * cfg.g * t * t
    z = centre + np.linspace(-8, 8, 400001) * cfg.sigma_z
    dens = np.abs(psi_vertical(z, t, k0z, cfg)) ** 2
    assert abs(z[np.argmax(dens)] - centre) < 1e-9
    assert np.trapezoid(dens, z) == pytest.approx(1.0, abs=1e-8)
    sz = abs(complex_width(0.2, cfg.sigma_z, cfg))
    assert sz - cfg.sigma_z < 1e-5 * cfg.sigma_z


def test_psi_vertical_phase_gradient(cfg):
    # local wave number m (v0 + g t) / hbar: classical vertical velocity
    t, k0z = 0.1, 1e6
    v0 = cfg.hbar * k0z / cfg.mass
    z0 = v0 * t + 0.5 * cfg.g * t * t
    h = 1e-9
    d = np.angle(psi_vertical(z0 + h, t, k0z, cfg) / psi_vertical(z0 - h, t, k0z, cfg)) / (2 * h)
    assert d == pytest.approx(cfg.mass * (v0 + cfg.g * t) / cfg.hbar, rel=1e-6)


def test_classical_z_time(cfg):
    t1 = classical_z_time(0, 0, cfg.slits.l1, cfg)
    t2 = classical_z_time(0, 0, cfg.slits.l1 + cfg.slits.l2, cfg)
    assert t1 == pytest.approx(0.1245, abs=1e-4)
    assert t2 == pytest.approx(0.1963, abs=1e-4)
    assert cfg.g * t2 == pytest.approx(1.93, abs=0.01)
    z0, v = 1e-4, 0.3
    t = classical_z_time(z0, v, 0.05, cfg)
    assert z0 + v * t + 0.5 * cfg.g * t * t == pytest.approx(0.05, rel=1e-12)
    arr = classical_z_time(np.zeros(3), np.array([-0.1, 0.0, 0.1]), 0.05, cfg)
    assert arr.shape == (3,) and np.all(np.diff(arr) < 0)
    with pytest.raises(ValueError):
        classical_z_time(0.1, 0.0, 0.05, cfg)


def test_velocity_filter_fraction_order_of_magnitude(cfg):
    # fraction admitted by |v0x| <= threshold and |y0| <= 2 sigma0
    pos, vel = bohm.source_arrays(1_000_000, 5, cfg)
    vbar = bohm.velocity_filter_threshold(cfg)
    frac = np.mean((np.abs(vel[:, 0]) <= vbar) & (np.abs(pos[:, 1]) <= 2 * cfg.sigma0))
    assert 1e-3 / 3 <= frac <= 3e-3
