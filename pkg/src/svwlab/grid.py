"""Periodic grid primitives: mollification, integration, interpolation.

All fields are plain 1-D numpy arrays sampled at the nodes x_i = i/n of the
unit torus [0, 1).  Functions here are pure and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus [0, 1) with n cells."""

    n: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise InvalidParameterError(f"grid size must be even and >= 8, got {self.n}")
        object.__setattr__(self, "dx", 1.0 / self.n)
        object.__setattr__(self, "x", np.arange(self.n) / self.n)


def bump_kernel(eps: float, dx: float) -> np.ndarray:
    """Discrete mollifier weights on offsets j*dx, |j*dx| < eps.

    The classical compactly supported bump exp(-1/(1-y^2)) scaled to width
    eps, normalized so the *discrete* weights sum to one (exact discrete mass
    conservation).  For eps <= dx the kernel degenerates to the identity.
    """
    if eps <= 0:
        raise InvalidParameterError(f"mollifier width must be positive, got {eps}")
    m = int(np.ceil(eps / dx)) - 1
    if m < 1:
        return np.array([1.0])
    j = np.arange(-m, m + 1)
    y = j * dx / eps
    w = np.exp(-1.0 / (1.0 - y * y))
    return w / w.sum()


def mollify(values: np.ndarray, eps: float, grid: Grid) -> np.ndarray:
    """Periodic convolution with the discrete bump kernel of width eps."""
    w = bump_kernel(eps, grid.dx)
    m = (len(w) - 1) // 2
    if m == 0:
        return values.copy()
    padded = np.zeros(grid.n)
    padded[0] = w[m]
    padded[1 : m + 1] = w[m + 1 :]
    padded[-m:] = w[:m]
    return np.fft.irfft(np.fft.rfft(values) * np.fft.rfft(padded), n=grid.n)


def periodic_integral(values: np.ndarray) -> float:
    """Rectangle rule over the torus; exact for pure harmonics."""
    return float(np.mean(values))


def antiderivative_from_zero(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Cumulative trapezoid sum F with F(x_0) = 0.

    Node-centered (second order), and for zero-mean periodic integrands the
    wrap-around telescopes to the plain node sum, so periodicity is exact.
    """
    out = np.empty(grid.n)
    out[0] = 0.0
    np.cumsum(0.5 * (values[:-1] + values[1:]), out=out[1:])
    out[1:] *= grid.dx
    return out


def centered_diff(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order centered difference on the torus."""
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * grid.dx)


def hermite_slopes(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Monotonicity-limited node slopes for periodic cubic interpolation.

    Base estimate is the fourth-order five-point derivative; slopes are then
    clamped into the monotone box [0, 3 min(|d-|, |d+|)] (zero across secant
    sign changes), so the interpolant never leaves the hull of its stencil.
    Accepts a (n,) field or a stack of them with shape (..., n).
    """
    n, dx = grid.n, grid.dx
    pad = np.concatenate((values[..., -2:], values, values[..., :2]), axis=-1)
    fm2, fm1 = pad[..., 0:n], pad[..., 1:n + 1]
    f0 = pad[..., 2:n + 2]
    fp1, fp2 = pad[..., 3:n + 3], pad[..., 4:n + 4]
    raw = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * dx)
    d_right = (fp1 - f0) / dx
    d_left = (f0 - fm1) / dx
    sign = np.sign(d_right)
    monotone = (d_left * d_right > 0.0) & (raw * sign > 0.0)
    cap = 3.0 * np.minimum(np.abs(d_left), np.abs(d_right))
    return np.where(monotone, sign * np.minimum(np.abs(raw), cap), 0.0)


def hermite_basis(pos: np.ndarray, grid: Grid):
    """Cell indices and Hermite basis weights for a batch of positions.

    Precomputing this once lets several fields be evaluated at the same
    foot points with four gathers each.
    """
    n, dx = grid.n, grid.dx
    s = pos * n
    i0 = np.floor(s).astype(np.int64)
    t = s - i0
    i0 %= n
    i1 = i0 + 1
    i1[i1 == n] = 0
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = (t3 - 2.0 * t2 + t) * dx
    h01 = 3.0 * t2 - 2.0 * t3
    h11 = (t3 - t2) * dx
    return i0, i1, h00, h10, h01, h11


def hermite_apply(values: np.ndarray, slopes: np.ndarray, basis) -> np.ndarray:
    """Evaluate field(s) on a precomputed basis; values may be (n,) or a
    stack (..., n), gathered along the last axis."""
    i0, i1, h00, h10, h01, h11 = basis
    return (values[..., i0] * h00 + slopes[..., i0] * h10
            + values[..., i1] * h01 + slopes[..., i1] * h11)


def hermite_eval(values: np.ndarray, slopes: np.ndarray, pos: np.ndarray,
                 grid: Grid) -> np.ndarray:
    """Evaluate the periodic monotone cubic at arbitrary positions."""
    return hermite_apply(values, slopes, hermite_basis(pos, grid))


def linear_eval(values: np.ndarray, pos: np.ndarray, grid: Grid) -> np.ndarray:
    """Periodic linear interpolation (fallback scheme)."""
    n = grid.n
    s = np.mod(pos, 1.0) * n
    i0 = s.astype(np.int64)
    t = s - i0
    i0 = np.mod(i0, n)
    i1 = i0 + 1
    i1[i1 == n] = 0
    return values[i0] * (1.0 - t) + values[i1] * t


def interpolate(values: np.ndarray, pos, grid: Grid, kind: str = "cubic"):
    """Interpolate a periodic field at positions `pos` (wrapped mod 1)."""
    pos = np.atleast_1d(np.asarray(pos, dtype=float))
    if kind == "cubic":
        out = hermite_eval(values, hermite_slopes(values, grid), pos, grid)
    elif kind == "linear":
        out = linear_eval(values, pos, grid)
    else:
        raise InvalidParameterError(f"unknown interpolation kind {kind!r}")
    return out if out.size > 1 else float(out[0])
