"""Closed-form Gaussian wave packets before the slits.

The transverse packets (x before the slits, y everywhere) share one formula.
The vertical packet is only used to check the classical treatment of z,
z(t) = z0 + v0z t + g t^2 / 2, that the rest of the pipeline relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ExperimentConfig, InitialConditions


@dataclass(frozen=True)
class SpreadState:
    s0: complex
    sigma0t: float
    eps0t: float
    sZ: complex
    sigmaZt: float


def complex_width(t, sigma, config: ExperimentConfig):
    """sigma * (1 + i hbar t / (2 m sigma^2))."""
    return sigma * (1.0 + 1j * config.hbar * np.asarray(t, dtype=float) / (2.0 * config.mass * sigma ** 2))


def sigma0_t(t, config: ExperimentConfig):
    """|s0(t)| = sqrt(sigma0^2 + (hbar t / (2 m sigma0))^2)."""
    s = config.sigma0
    return np.hypot(s, config.hbar * np.asarray(t, dtype=float) / (2.0 * config.mass * s))


def eps0_t(t, config: ExperimentConfig):
    """Width of the k-averaged transverse density."""
    t = np.asarray(t, dtype=float)
    return np.hypot(sigma0_t(t, config), config.velocity_spread * t)


def spread_state(t: float, config: ExperimentConfig) -> SpreadState:
    sz = complex_width(t, config.sigma_z, config)
    return SpreadState(
        s0=complex(complex_width(t, config.sigma0, config)),
        sigma0t=float(sigma0_t(t, config)),
        eps0t=float(eps0_t(t, config)),
        sZ=complex(sz),
        sigmaZt=float(abs(sz)),
    )


def _gauss_amp(u, center, s, sigma, k):
    # (2 pi s^2)^(-1/4) exp(-(u-c)^2 / (4 sigma s) + i k (u-c)), principal branch of s^(-1/2)
    d = u - center
    return (2.0 * np.pi) ** -0.25 / np.sqrt(s) * np.exp(-d * d / (4.0 * sigma * s) + 1j * k * d)


def initial_psi(p, k, config: ExperimentConfig):
    """Source wavefunction at t = 0.

    ``p`` has shape (..., 3); ``k`` is the wave vector or an
    :class:`InitialConditions`.
    """
    if isinstance(k, InitialConditions):
        k = k.wave_vector(config)
    p = np.asarray(p, dtype=float)
    kx, ky, kz = k
    s0, sz = config.sigma0, config.sigma_z
    return (_gauss_amp(p[..., 0], 0.0, s0, s0, kx)
            * _gauss_amp(p[..., 1], 0.0, s0, s0, ky)
            * _gauss_amp(p[..., 2], 0.0, sz, sz, kz))


def psi_transverse_free(u, t, k0, config: ExperimentConfig):
    """Free transverse packet launched from the source with wave number ``k0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    v0 = config.hbar * np.asarray(k0, dtype=float) / config.mass
    s = complex_width(t, config.sigma0, config)
    return _gauss_amp(np.asarray(u, dtype=float), v0 * t, s, config.sigma0, k0)


def dlog_psi_transverse_free(u, t, k0, config: ExperimentConfig):
    """d/du log psi_transverse_free; ``psi * this`` is the gradient."""
    t = np.asarray(t, dtype=float)
    v0 = config.hbar * np.asarray(k0, dtype=float) / config.mass
    s = complex_width(t, config.sigma0, config)
    return -(np.asarray(u, dtype=float) - v0 * t) / (2.0 * config.sigma0 * s) + 1j * np.asarray(k0)


def psi_vertical(z, t, k0z, config: ExperimentConfig):
    """Vertical packet falling under gravity, with the printed global phase."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    m, hbar, g = config.mass, config.hbar, config.g
    z = np.asarray(z, dtype=float)
    v0 = hbar * np.asarray(k0z, dtype=float) / m
    sz = complex_width(t, config.sigma_z, config)
    d = z - v0 * t - 0.5 * g * t * t
    envelope = (2.0 * np.pi) ** -0.25 / np.sqrt(sz) * np.exp(-d * d / (4.0 * config.sigma_z * sz))
    phase = (m / hbar) * ((v0 + g * t) * (z - 0.5 * v0 * t) - m * g * g * t ** 3 / 6.0)
    return envelope * np.exp(1j * phase)


def rho_transverse_before(u, t, config: ExperimentConfig):
    """Transverse density averaged over the Gaussian wave-number spread."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    eps = eps0_t(t, config)
    u = np.asarray(u, dtype=float)
    return np.exp(-u * u / (2.0 * eps * eps)) / (np.sqrt(2.0 * np.pi) * eps)


def classical_z_time(z0, v0z, drop, config: ExperimentConfig):
    """Time at which z0 + v0z t + g t^2 / 2 first reaches ``drop``."""
    g = config.g
    z0 = np.asarray(z0, dtype=float)
    v0z = np.asarray(v0z, dtype=float)
    disc = 2.0 * (drop - z0) / g + (v0z / g) ** 2
    if np.any(drop <= z0) or np.any(disc < 0):
        raise ValueError("no forward crossing: need drop > z0")
    t = np.sqrt(disc) - v0z / g
    return float(t) if t.ndim == 0 else t
