"""Wave speed c(u) and the scalar maps derived from it.

The speed law must satisfy 0 < c1 <= c(u) <= c2 and 0 <= c'(u) <= c3; the
quadratic source coefficient is c'(u)/(4 c(u)) and the primitive
C(r) = int_0^r c is strictly increasing with slope in [c1, c2], hence
globally invertible.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError, IterationFailureError

_NEWTON_TOL = 1e-12
_NEWTON_MAXIT = 60


def quadratic_cutoff(xi, eps: float):
    """Quadratic penalty (xi - 1/eps)^2 active above the threshold 1/eps."""
    if eps <= 0:
        raise InvalidParameterError(f"cutoff threshold needs eps > 0, got {eps}")
    w = np.maximum(np.asarray(xi, dtype=float) - 1.0 / eps, 0.0)
    out = w * w
    return out if out.ndim else float(out)


def _log_cosh(r):
    # overflow-safe: ln cosh r = |r| + ln((1 + exp(-2|r|))/2)
    a = np.abs(r)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


class WaveSpeed:
    """Speed law c(u) with derivative, source coefficient, primitive, inverse.

    Instances are immutable after construction and safe to share across
    ensemble workers.
    """

    def __init__(self, kind: str, c_base: float = 2.0, c_amp: float = 1.0,
                 table=None):
        self.kind = kind
        self.c_base = float(c_base)
        self.c_amp = float(c_amp)
        self._pchip = None
        self._pchip_deriv = None
        self._pchip_anti = None
        if kind == "tanh":
            if c_amp < 0 or c_base - c_amp <= 0:
                raise InvalidParameterError(
                    f"tanh speed needs 0 <= c_amp < c_base, got {c_base}, {c_amp}")
            self.c1 = self.c_base - self.c_amp
            self.c2 = self.c_base + self.c_amp
            self.c3 = self.c_amp if self.c_amp > 0 else 1.0
        elif kind == "constant":
            if c_base <= 0:
                raise InvalidParameterError(f"constant speed must be positive, got {c_base}")
            self.c_amp = 0.0
            self.c1 = self.c2 = self.c_base
            self.c3 = 1.0
        elif kind == "table":
            from scipy.interpolate import PchipInterpolator
            u_samples, c_samples = table
            u_samples = np.asarray(u_samples, dtype=float)
            c_samples = np.asarray(c_samples, dtype=float)
            if np.any(np.diff(u_samples) <= 0) or np.any(np.diff(c_samples) < 0):
                raise InvalidParameterError("table speed samples must be increasing in u "
                                            "and nondecreasing in c")
            if c_samples[0] <= 0:
                raise InvalidParameterError("table speed must be positive")
            self._pchip = PchipInterpolator(u_samples, c_samples, extrapolate=False)
            self._pchip_deriv = self._pchip.derivative()
            self._pchip_anti = self._pchip.antiderivative()
            self._u_lo, self._u_hi = float(u_samples[0]), float(u_samples[-1])
            self.c1 = float(c_samples[0])
            self.c2 = float(c_samples[-1])
            self.c3 = float(np.max(self._pchip_deriv(
                np.linspace(self._u_lo, self._u_hi, 4 * len(u_samples)))))
            self.c3 = max(self.c3, 1e-30)
        else:
            raise InvalidParameterError(f"unknown speed kind {kind!r}")

    # -- pointwise maps ----------------------------------------------------

    def value(self, u):
        """c(u), clamped to [c1, c2] by construction."""
        if self.kind == "tanh":
            return self.c_base + self.c_amp * np.tanh(u)
        if self.kind == "constant":
            return np.full_like(np.asarray(u, dtype=float), self.c_base) \
                if np.ndim(u) else self.c_base
        uc = np.clip(u, self._u_lo, self._u_hi)
        return self._pchip(uc)

    def derivative(self, u):
        """c'(u) >= 0."""
        if self.kind == "tanh":
            sech = 1.0 / np.cosh(u)
            return self.c_amp * sech * sech
        if self.kind == "constant":
            return np.zeros_like(np.asarray(u, dtype=float)) if np.ndim(u) else 0.0
        inside = (np.asarray(u) >= self._u_lo) & (np.asarray(u) <= self._u_hi)
        uc = np.clip(u, self._u_lo, self._u_hi)
        d = np.maximum(self._pchip_deriv(uc), 0.0)
        return np.where(inside, d, 0.0)

    def source_coeff(self, u):
        """c'(u) / (4 c(u)), the coefficient of the quadratic source terms."""
        return self.derivative(u) / (4.0 * self.value(u))

    # -- primitive and its inverse ------------------------------------------

    def primitive(self, r):
        """C(r) = int_0^r c(s) ds; strictly increasing with slope in [c1, c2]."""
        if self.kind == "tanh":
            out = self.c_base * np.asarray(r, dtype=float) + self.c_amp * _log_cosh(r)
            return out if np.ndim(r) else float(out)
        if self.kind == "constant":
            return self.c_base * r
        r_arr = np.asarray(r, dtype=float)
        lo, hi = self._u_lo, self._u_hi
        rc = np.clip(r_arr, lo, hi)
        base = self._pchip_anti(rc) - self._pchip_anti(0.0)
        base = base + np.where(r_arr > hi, (r_arr - hi) * self.c2, 0.0)
        base = base + np.where(r_arr < lo, (r_arr - lo) * self.c1, 0.0)
        return base if np.ndim(r) else float(base)

    def primitive_inverse(self, y, guess=None):
        """Solve C(r) = y by safeguarded Newton with a bisection fallback.

        Tolerance is 1e-12 relative; raises IterationFailureError on
        non-convergence, which signals a malformed model.
        """
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        lo = np.minimum(y_arr / self.c1, y_arr / self.c2)
        hi = np.maximum(y_arr / self.c1, y_arr / self.c2)
        r = np.asarray(guess, dtype=float).copy() if guess is not None \
            else 0.5 * (lo + hi)
        r = np.clip(np.atleast_1d(r), lo, hi)
        tol = _NEWTON_TOL * np.maximum(1.0, np.abs(y_arr))
        for _ in range(_NEWTON_MAXIT):
            res = self.primitive(r) - y_arr
            if np.all(np.abs(res) <= tol):
                break
            # keep the bracket tight around the root
            hi = np.where(res > 0, np.minimum(hi, r), hi)
            lo = np.where(res < 0, np.maximum(lo, r), lo)
            step = res / np.maximum(self.value(r), self.c1)
            r_new = r - step
            outside = (r_new < lo) | (r_new > hi)
            r = np.where(outside, 0.5 * (lo + hi), r_new)
        else:
            raise IterationFailureError("primitive inverse did not converge; "
                                        "check the speed model bounds")
        return r if np.ndim(y) else float(r[0])


def tanh_speed(c_base: float = 2.0, c_amp: float = 1.0) -> WaveSpeed:
    """Default smooth speed law c(u) = c_base + c_amp tanh(u)."""
    return WaveSpeed("tanh", c_base, c_amp)


def constant_speed(c: float = 2.0) -> WaveSpeed:
    return WaveSpeed("constant", c)


def table_speed(u_samples, c_samples) -> WaveSpeed:
    """Monotone piecewise-cubic speed law through user samples."""
    return WaveSpeed("table", table=(u_samples, c_samples))
