"""Finite-mode spectral forcing, its mollified version, and Gaussian increments.

The forcing is a truncated Fourier family: for pair index k = 1..K the two
modes are A k^(-p) sqrt(2) cos(2 pi k x) and A k^(-p) sqrt(2) sin(2 pi k x).
The decay exponent p >= 3 keeps the tail contribution to the squared
W^{1,inf} budget below 1e-3 of the head, which is what the smoothness
hypotheses on the forcing require with margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .grid import Grid, mollify, periodic_integral


@dataclass(frozen=True)
class ModeIncrements:
    """One step's Brownian increments, each N(0, dt)."""

    dbeta: np.ndarray
    dt: float


@dataclass(frozen=True)
class NoiseModel:
    """Immutable mode family; shareable across concurrent paths.

    sigma holds the raw grid-sampled modes (2K rows), sigma_smooth the
    mollified ones; q and q_smooth are the pointwise variance fields
    sum_k sigma_k(x)^2 and q0 the squared W^{1,inf} budget.
    """

    grid: Grid
    pairs: int
    amplitude: float
    decay: float
    eps: float
    gamma: np.ndarray
    sigma: np.ndarray
    sigma_smooth: np.ndarray
    q: np.ndarray
    q_smooth: np.ndarray
    q0: float

    def n_modes(self) -> int:
        return 2 * self.pairs

    def q_field(self, smooth: bool) -> np.ndarray:
        return self.q_smooth if smooth else self.q

    def q_l1(self, smooth: bool) -> float:
        """Integral of the variance field over the torus."""
        return periodic_integral(self.q_field(smooth))

    def modes(self, smooth: bool) -> np.ndarray:
        return self.sigma_smooth if smooth else self.sigma

    def sample_increment(self, dt: float, rng: np.random.Generator) -> ModeIncrements:
        if dt <= 0:
            raise InvalidParameterError(f"dt must be positive, got {dt}")
        dbeta = rng.standard_normal(2 * self.pairs) * np.sqrt(dt)
        return ModeIncrements(dbeta=dbeta, dt=dt)

    def assemble(self, increments: ModeIncrements, smooth: bool = True) -> np.ndarray:
        """Field sum_k sigma_k(x) dbeta_k for this step."""
        if self.pairs == 0:
            return np.zeros(self.grid.n)
        return self.modes(smooth).T @ increments.dbeta


def build_modes(grid: Grid, pairs: int, amplitude: float, decay: float,
                eps: float) -> NoiseModel:
    """Construct the truncated mode family with per-pair weights A k^(-p)."""
    if pairs < 0:
        raise InvalidParameterError(f"mode pair count must be >= 0, got {pairs}")
    if amplitude < 0:
        raise InvalidParameterError(f"noise amplitude must be >= 0, got {amplitude}")
    if pairs > 0 and decay < 3:
        raise InvalidParameterError(f"mode decay must be >= 3, got {decay}")
    k = np.arange(1, pairs + 1)
    gamma = amplitude * k.astype(float) ** (-float(decay)) if pairs else np.zeros(0)
    sigma = np.zeros((2 * pairs, grid.n))
    for i, kk in enumerate(k):
        phase = 2.0 * np.pi * kk * grid.x
        sigma[2 * i] = gamma[i] * np.sqrt(2.0) * np.cos(phase)
        sigma[2 * i + 1] = gamma[i] * np.sqrt(2.0) * np.sin(phase)
    sigma_smooth = np.array([mollify(row, eps, grid) for row in sigma]) \
        if pairs else sigma.copy()
    q = (sigma * sigma).sum(axis=0)
    q_smooth = (sigma_smooth * sigma_smooth).sum(axis=0)
    # squared W^{1,inf} norms: max of sup|sigma| and sup|sigma'|, per mode
    q0 = float(sum(2.0 * g * g * max(1.0, 2.0 * np.pi * kk) ** 2
                   for g, kk in zip(gamma, k)))
    return NoiseModel(grid=grid, pairs=pairs, amplitude=amplitude, decay=decay,
                      eps=eps, gamma=gamma, sigma=sigma, sigma_smooth=sigma_smooth,
                      q=q, q_smooth=q_smooth, q0=q0)
