"""Closed-form Feynman kernels for the quadratic Lagrangian.

The transverse directions are free; the vertical direction carries the
linear gravitational potential. Branch convention: sqrt(i) = exp(i pi/4),
so the free-kernel prefactor is sqrt(m / (2 pi hbar dt)) * exp(-i pi/4).
All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .model import ExperimentConfig

_BRANCH = np.exp(-0.25j * np.pi)


def _check_dt(tb, ta):
    dt = np.asarray(tb, dtype=float) - np.asarray(ta, dtype=float)
    if np.any(dt <= 0):
        raise ValueError("kernel needs tb > ta")
    return dt


def free_kernel(xb, tb, xa, ta, config: ExperimentConfig):
    dt = _check_dt(tb, ta)
    m, hbar = config.mass, config.hbar
    dx = np.asarray(xb, dtype=float) - np.asarray(xa, dtype=float)
    pref = np.sqrt(m / (2.0 * np.pi * hbar * dt)) * _BRANCH
    return pref * np.exp(1j * m * dx * dx / (2.0 * hbar * dt))


def gravity_kernel(zb, tb, za, ta, config: ExperimentConfig):
    dt = _check_dt(tb, ta)
    m, hbar, g = config.mass, config.hbar, config.g
    zsum = np.asarray(zb, dtype=float) + np.asarray(za, dtype=float)
    extra = np.exp(1j * m / hbar * (0.5 * g * zsum * dt - g * g * dt ** 3 / 24.0))
    return free_kernel(zb, tb, za, ta, config) * extra


def kernel_3d(pb, tb, pa, ta, config: ExperimentConfig):
    """K_x K_y K_z for points ``pb``, ``pa`` given as (..., 3) arrays."""
    pb = np.asarray(pb, dtype=float)
    pa = np.asarray(pa, dtype=float)
    return (free_kernel(pb[..., 0], tb, pa[..., 0], ta, config)
            * free_kernel(pb[..., 1], tb, pa[..., 1], ta, config)
            * gravity_kernel(pb[..., 2], tb, pa[..., 2], ta, config))
