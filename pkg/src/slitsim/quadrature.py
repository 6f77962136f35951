"""Quadrature rules used by the aperture, detector and scaling modules."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import wofz


def simpson_rule(lo: float, hi: float, n_intervals: int):
    """Composite Simpson nodes and weights; odd interval counts are bumped by one."""
    n = int(n_intervals)
    n += n % 2
    u = np.linspace(lo, hi, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return u, w * (hi - lo) / (3.0 * n)


def gauss_hermite_normal(n: int, sigma: float, mean: float = 0.0):
    """Nodes and probability weights for E[f(X)], X ~ N(mean, sigma^2)."""
    x, w = np.polynomial.hermite.hermgauss(n)
    return mean + math.sqrt(2.0) * sigma * x, w / math.sqrt(math.pi)


def gauss_legendre(n: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def normal_pdf(x, sigma: float, mean: float = 0.0):
    z = (np.asarray(x, dtype=float) - mean) / sigma
    return np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sigma)


def gauss_legendre_normal(n: int, lo: float, hi: float, sigma: float, mean: float = 0.0):
    """Gauss-Legendre nodes on [lo, hi] with weights carrying the N(mean, sigma) density.

    The weights sum to the probability mass of the interval, not to one.
    """
    x, w = gauss_legendre(n, lo, hi)
    return x, w * normal_pdf(x, sigma, mean)


def oscillation_intervals(width: float, max_phase_rate: float, nodes_per_period: int = 8) -> int:
    """Smallest even interval count giving ``nodes_per_period`` nodes per local period."""
    n = math.ceil(nodes_per_period * width * max_phase_rate / (2.0 * math.pi))
    return n + n % 2


def gaussian_chirp_integral(a, c, c0, lo, hi):
    """Exact value of the integral of exp(a u^2 + c u + c0) over [lo, hi].

    ``a`` must have a negative real part (or be purely imaginary with a
    nonzero imaginary part). Evaluated with the Faddeeva function so that
    neither overflow nor erf cancellation occurs: with z = sqrt(-a)(u - u*),
    erfc(z) exp(-a u*^2 + c0) = w(i z) f(u).
    """
    a, c, c0 = np.broadcast_arrays(np.asarray(a, complex), np.asarray(c, complex),
                                   np.asarray(c0, complex))
    q = np.sqrt(-a)
    ustar = -c / (2.0 * a)
    z1 = q * (lo - ustar)
    z2 = q * (hi - ustar)
    f1 = np.exp(a * lo * lo + c * lo + c0)
    f2 = np.exp(a * hi * hi + c * hi + c0)
    pos = (z1.real >= 0)
    neg = (z2.real <= 0)
    out = np.empty(a.shape, dtype=complex)
    # both ends right of the saddle line
    out[pos] = f1[pos] * wofz(1j * z1[pos]) - f2[pos] * wofz(1j * z2[pos])
    out[neg] = f2[neg] * wofz(-1j * z2[neg]) - f1[neg] * wofz(-1j * z1[neg])
    mix = ~(pos | neg)
    if np.any(mix):
        peak = np.exp(-a[mix] * ustar[mix] ** 2 + c0[mix])
        out[mix] = 2.0 * peak - f2[mix] * wofz(1j * z2[mix]) - f1[mix] * wofz(-1j * z1[mix])
    return out * (0.5 * math.sqrt(math.pi) / q)
