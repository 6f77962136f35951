import math

import numpy as np
import pytest

from slitsim.kernels import free_kernel, gravity_kernel, kernel_3d
from slitsim.model import PhysicalConstants, default_shimizu_config
from slitsim.quadrature import gaussian_chirp_integral
from slitsim.wavepacket import initial_psi, psi_transverse_free

from conftest import rel_err


def test_free_kernel_prefactor(cfg):
    k = free_kernel(0.0, 1.0, 0.0, 0.0, cfg)
    assert abs(k) == pytest.approx(7.109e3, rel=2e-4)
    assert np.angle(k) == pytest.approx(-math.pi / 4, abs=1e-14)


def test_free_kernel_symmetry_and_modulus(cfg):
    rng = np.random.default_rng(1)
    xb, xa = rng.normal(0, 1e-5, 50), rng.normal(0, 1e-5, 50)
    k1 = free_kernel(xb, 0.3, xa, 0.1, cfg)
    k2 = free_kernel(xa, 0.3, xb, 0.1, cfg)
    assert np.allclose(k1, k2, rtol=1e-13)
    assert np.allclose(np.abs(k1), math.sqrt(cfg.mass / (2 * math.pi * cfg.hbar * 0.2)), rtol=1e-13)


def test_kernel_rejects_backwards_time(cfg):
    with pytest.raises(ValueError):
        free_kernel(0, 0.1, 0, 0.1, cfg)
    with pytest.raises(ValueError):
        gravity_kernel(0, 0.0, 0, 0.1, cfg)


def test_gravity_kernel(cfg):
    rng = np.random.default_rng(2)
    zb, za = rng.normal(0, 1e-3, 20), rng.normal(0, 1e-3, 20)
    gk = gravity_kernel(zb, 0.2, za, 0.05, cfg)
    assert np.allclose(np.abs(gk), np.abs(free_kernel(zb, 0.2, za, 0.05, cfg)), rtol=1e-13)
    no_g = cfg.__class__(constants=PhysicalConstants(g=1e-300), source=cfg.source, slits=cfg.slits)
    assert np.allclose(gravity_kernel(zb, 0.2, za, 0.05, no_g), free_kernel(zb, 0.2, za, 0.05, no_g),
                       rtol=1e-12)
    dt = 0.1
    ratio = gravity_kernel(0.0, dt, 0.0, 0.0, cfg) / free_kernel(0.0, dt, 0.0, 0.0, cfg)
    expected = -cfg.mass * cfg.g ** 2 * dt ** 3 / (24 * cfg.hbar)
    assert np.angle(ratio) == pytest.approx(math.remainder(expected, 2 * math.pi), abs=1e-6)


def test_kernel_3d(cfg):
    rng = np.random.default_rng(3)
    pb, pa = rng.normal(0, 1e-5, (10, 3)), rng.normal(0, 1e-5, (10, 3))
    k = kernel_3d(pb, 0.3, pa, 0.1, cfg)
    parts = (free_kernel(pb[:, 0], 0.3, pa[:, 0], 0.1, cfg) * free_kernel(pb[:, 1], 0.3, pa[:, 1], 0.1, cfg)
             * gravity_kernel(pb[:, 2], 0.3, pa[:, 2], 0.1, cfg))
    assert np.allclose(k, parts, rtol=1e-14)
    flat = cfg.__class__(constants=PhysicalConstants(g=1e-300), source=cfg.source, slits=cfg.slits)
    assert np.angle(kernel_3d(np.zeros(3), 1.0, np.zeros(3), 0.0, flat)) == pytest.approx(-3 * math.pi / 4)


def _propagate_gaussian(x, t, k0, cfg):
    # integral of K(x, t; u, 0) psi0(u) du in closed form
    m, hbar, s = cfg.mass, cfg.hbar, cfg.sigma0
    a = -1.0 / (4 * s * s) + 1j * m / (2 * hbar * t)
    c = 1j * k0 - 1j * m * x / (hbar * t)
    c0 = 1j * m * x * x / (2 * hbar * t)
    pref = np.sqrt(m / (2 * math.pi * hbar * t)) * np.exp(-0.25j * math.pi) * (2 * math.pi * s * s) ** -0.25
    span = 60 * s
    return pref * gaussian_chirp_integral(a, c, c0, -span, span)


def test_kernel_propagation_reproduces_packet(cfg):
    rng = np.random.default_rng(4)
    t = rng.uniform(1e-3, 0.2, 10)
    x = rng.normal(0, 1, 10) * np.hypot(cfg.sigma0, cfg.hbar * t / (2 * cfg.mass * cfg.sigma0))
    num = _propagate_gaussian(x, t, 0.0, cfg)
    assert rel_err(num, psi_transverse_free(x, t, 0.0, cfg)) < 1e-6


def test_kernel_propagation_moving_packet_up_to_global_phase(cfg):
    # with k0 != 0 the closed form differs from propagation by exp(i hbar k0^2 t / 2m)
    k0, t = 3e4, 0.05
    x = np.linspace(-2e-5, 2e-5, 7) + cfg.hbar * k0 * t / cfg.mass
    num = _propagate_gaussian(x, t, k0, cfg)
    closed = psi_transverse_free(x, t, k0, cfg) * np.exp(0.5j * cfg.hbar * k0 * k0 * t / cfg.mass)
    assert rel_err(num, closed) < 1e-6


def test_numerical_propagation_at_50ms(cfg):
    # brute-force quadrature of K * psi0 on a fine grid
    t = 0.05
    u = np.linspace(-12 * cfg.sigma0, 12 * cfg.sigma0, 200001)
    # transverse factor of the source wavefunction
    psi0 = initial_psi(np.column_stack([u, 0 * u, 0 * u]), (0.0, 0.0, 0.0), cfg)
    psi0 = psi0 / (2 * np.pi * cfg.sigma0 ** 2) ** -0.25 / (2 * np.pi * cfg.sigma_z ** 2) ** -0.25
    x = np.array([-3e-5, 0.0, 1e-5, 4e-5])
    num = np.array([np.trapezoid(free_kernel(xi, t, u, 0.0, cfg) * psi0, u) for xi in x])
    assert rel_err(num, psi_transverse_free(x, t, 0.0, cfg)) < 1e-5


def test_reproducing_property(cfg):
    # K(xb, tb; xa, ta) = integral K(xb, tb; u, tm) K(u, tm; xa, ta) du, checked in closed form
    m, hbar = cfg.mass, cfg.hbar
    ta, tm, tb = 0.0, 0.004, 0.01
    xa, xb = 1e-6, -2e-6
    d1, d2 = tm - ta, tb - tm
    a = 1j * m / (2 * hbar) * (1 / d1 + 1 / d2) - 1e-30
    c = -1j * m / hbar * (xa / d1 + xb / d2)
    c0 = 1j * m / (2 * hbar) * (xa * xa / d1 + xb * xb / d2)
    pref = free_kernel(0, tm, 0, ta, cfg) * free_kernel(0, tb, 0, tm, cfg)
    span = 1.0
    lhs = pref * gaussian_chirp_integral(a, c, c0, -span, span)
    rhs = free_kernel(xb, tb, xa, ta, cfg)
    assert abs(lhs - rhs) / abs(rhs) < 1e-3


def test_default_config_unchanged():
    assert default_shimizu_config() == default_shimizu_config()
