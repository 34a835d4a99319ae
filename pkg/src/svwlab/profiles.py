"""Smooth compactly supported profiles used to build initial data."""

from __future__ import annotations

import numpy as np

# Peak location of |phi'| for the standard bump on (1/4, 3/4): the steepest
# descent point sits at (2 + 3^(-1/4))/4.
PHI_STEEPEST_X0 = (2.0 + 3.0 ** -0.25) / 4.0


def smooth_bump(y):
    """exp(-1/(1-(2y)^2)) on |y| < 1/2, zero outside; peak value 1/e."""
    y = np.asarray(y, dtype=float)
    w = 2.0 * y
    inside = np.abs(w) < 1.0
    out = np.zeros_like(y)
    ws = np.where(inside, w, 0.0)
    out[inside] = np.exp(-1.0 / (1.0 - ws * ws))[inside]
    return out if out.ndim else float(out)


def smooth_bump_prime(y):
    """Derivative of smooth_bump."""
    y = np.asarray(y, dtype=float)
    w = 2.0 * y
    inside = np.abs(w) < 1.0
    out = np.zeros_like(y)
    ws = np.where(inside, w, 0.0)
    denom = (1.0 - ws * ws) ** 2
    out[inside] = (np.exp(-1.0 / (1.0 - ws * ws)) * (-4.0 * ws) / denom)[inside]
    return out if out.ndim else float(out)


def unit_bump(y):
    """smooth_bump rescaled to peak value exactly 1."""
    return np.e * smooth_bump(y)


def phi_quarter(z):
    """Bump supported on (1/4, 3/4): exp(-1/(1-(4z-2)^2))."""
    return smooth_bump(2.0 * np.asarray(z, dtype=float) - 1.0)


def phi_quarter_prime(z):
    return 2.0 * smooth_bump_prime(2.0 * np.asarray(z, dtype=float) - 1.0)
