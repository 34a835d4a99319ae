"""State evolution for the two transported invariants R and S.

R = u_t - c(u) u_x and S = u_t + c(u) u_x ride the characteristics dx/dt =
+c(u) and -c(u) respectively, with quadratic sources c'(u)/(4c(u)) [R^2 - S^2
...] and a shared additive noise field.  The scalar u is reconstructed
non-locally from (R, S) through the primitive of the speed, with the spatial
mean of (S-R)/2 subtracted so u stays periodic.

The stepper is semi-Lagrangian Euler-Maruyama: midpoint foot points, monotone
cubic transport, explicit sources at foot values, nodewise Gaussian kicks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CflViolationError, GridMismatchError, InvalidParameterError
from .grid import (Grid, antiderivative_from_zero, centered_diff,
                   hermite_apply, hermite_basis, hermite_slopes, interpolate,
                   linear_eval, mollify, periodic_integral)
from .noise import NoiseModel
from .speed import WaveSpeed, quadratic_cutoff


@dataclass(frozen=True)
class StepMode:
    """Scheme variant: quadratic cutoff above 1/eps on or off, and whether the
    periodicity correction (the mean of (S-R)/2) enters the source terms."""

    cutoff_eps: Optional[float] = None
    correction: bool = True

    def __post_init__(self):
        if self.cutoff_eps is not None:
            if self.cutoff_eps <= 0:
                raise InvalidParameterError(f"cutoff eps must be > 0, got {self.cutoff_eps}")
            if not self.correction:
                raise InvalidParameterError("the regularized scheme requires the "
                                            "periodicity correction to be on")

    @property
    def regularized(self) -> bool:
        return self.cutoff_eps is not None


@dataclass
class State:
    """Invariant pair at one time, plus the boundary trace accumulator that
    anchors the reconstruction of u.

    Treat instances as immutable snapshots: the stepper returns fresh states,
    and the reconstruction caches u against the fields it saw.
    """

    grid: Grid
    R: np.ndarray
    S: np.ndarray
    t: float = 0.0
    boundary_accum: float = 0.0
    exploded: bool = False
    threshold: float = np.inf
    interp: str = "cubic"
    u_cache: Optional[np.ndarray] = field(default=None, repr=False)
    u_guess: Optional[np.ndarray] = field(default=None, repr=False)

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.R)), np.max(np.abs(self.S))))


def default_threshold(R0: np.ndarray, S0: np.ndarray) -> float:
    return 1e3 * (1.0 + max(np.max(np.abs(R0)), np.max(np.abs(S0))))


def init_state(u0: np.ndarray, v0: np.ndarray, speed: WaveSpeed, mode: StepMode,
               grid: Grid, threshold: Optional[float] = None,
               interp: str = "cubic") -> State:
    """Initial invariants from (u0, v0) by centered differences; in the
    regularized mode both are mollified at the scheme width."""
    if len(u0) != grid.n or len(v0) != grid.n:
        raise GridMismatchError("u0/v0 length does not match the grid")
    cu = speed.value(u0)
    gradu = centered_diff(u0, grid)
    R0 = v0 - cu * gradu
    S0 = v0 + cu * gradu
    if mode.regularized:
        R0 = mollify(R0, mode.cutoff_eps, grid)
        S0 = mollify(S0, mode.cutoff_eps, grid)
    if threshold is None:
        threshold = default_threshold(R0, S0)
    return State(grid=grid, R=R0, S=S0, t=0.0, boundary_accum=float(u0[0]),
                 threshold=threshold, interp=interp,
                 u_guess=np.asarray(u0, dtype=float))


def state_from_invariants(R0: np.ndarray, S0: np.ndarray, u_anchor: float,
                          grid: Grid, mode: StepMode,
                          threshold: Optional[float] = None,
                          interp: str = "cubic") -> State:
    """Start directly from (R0, S0) with u(0, 0) = u_anchor."""
    if len(R0) != grid.n or len(S0) != grid.n:
        raise GridMismatchError("R0/S0 length does not match the grid")
    R0 = np.asarray(R0, dtype=float).copy()
    S0 = np.asarray(S0, dtype=float).copy()
    if mode.regularized:
        R0 = mollify(R0, mode.cutoff_eps, grid)
        S0 = mollify(S0, mode.cutoff_eps, grid)
    if threshold is None:
        threshold = default_threshold(R0, S0)
    return State(grid=grid, R=R0, S=S0, t=0.0, boundary_accum=float(u_anchor),
                 threshold=threshold, interp=interp)


def correction_term(state: State) -> float:
    """Spatial mean of (S - R)/2; identically zero for the exact system with
    periodic initial data, and the periodicity correction otherwise."""
    return periodic_integral(0.5 * (state.S - state.R))


def reconstruct_u(state: State, speed: WaveSpeed,
                  theta: Optional[float] = None) -> np.ndarray:
    """u from (R, S) and the boundary accumulator.

    The correction makes the x-integrand zero mean, so the reconstruction
    wraps around periodically to rounding accuracy.
    """
    if state.u_cache is not None:
        return state.u_cache
    if theta is None:
        theta = correction_term(state)
    integrand = 0.5 * (state.S - state.R) - theta
    F = antiderivative_from_zero(integrand, state.grid)
    y = speed.primitive(state.boundary_accum) + F
    u = speed.primitive_inverse(y, guess=state.u_guess)
    state.u_cache = u
    return u


def derived_fields(state: State, speed: WaveSpeed, mode: StepMode):
    """(u, u_x, u_t) at the current time.

    u_x comes from the reconstruction identity c(u) u_x = (S-R)/2 - theta;
    u_t is (R+S)/2 plus the non-local term fed by the cutoff imbalance and
    the correction.
    """
    grid = state.grid
    u = reconstruct_u(state, speed)
    theta = correction_term(state)
    cu = speed.value(u)
    u_x = (0.5 * (state.S - state.R) - theta) / cu
    w = speed.source_coeff(u)
    if mode.regularized:
        zeta = w * (0.5 * (quadratic_cutoff(state.R, mode.cutoff_eps)
                           - quadratic_cutoff(state.S, mode.cutoff_eps))
                    + (state.R + state.S) * theta)
    elif mode.correction:
        zeta = w * (state.R + state.S) * theta
    else:
        zeta = np.zeros(grid.n)
    zeta_bar = periodic_integral(zeta)
    xi = antiderivative_from_zero(zeta - zeta_bar, grid) / cu
    u_t = 0.5 * (state.R + state.S) + xi
    return u, u_x, u_t


def step(state: State, speed: WaveSpeed, noise: NoiseModel, dt: float,
         mode: StepMode, rng: np.random.Generator):
    """One semi-Lagrangian Euler-Maruyama step; returns (state, increments).

    Exploded states pass through unchanged (the flag latches).  The time step
    must satisfy dt <= dx / (2 c2) so foot points stay within one cell.
    """
    grid = state.grid
    if dt > grid.dx / (2.0 * speed.c2) * (1.0 + 1e-9):
        raise CflViolationError(
            f"dt={dt:g} exceeds the accuracy bound dx/(2 c2)={grid.dx / (2 * speed.c2):g}")
    increments = noise.sample_increment(dt, rng)
    if state.exploded:
        return state, increments

    R, S, x = state.R, state.S, grid.x
    theta = correction_term(state)
    u = reconstruct_u(state, speed, theta)
    cu = speed.value(u)
    w = speed.source_coeff(u)
    cubic = state.interp == "cubic"

    if cubic:
        cu_slopes = hermite_slopes(cu, grid)
        half_minus = hermite_apply(cu, cu_slopes, hermite_basis(x - 0.5 * dt * cu, grid))
        half_plus = hermite_apply(cu, cu_slopes, hermite_basis(x + 0.5 * dt * cu, grid))
    else:
        half_minus = linear_eval(cu, x - 0.5 * dt * cu, grid)
        half_plus = linear_eval(cu, x + 0.5 * dt * cu, grid)
    foot_R = x - dt * half_minus
    foot_S = x + dt * half_plus

    if cubic:
        both = np.stack((R, S))
        both_slopes = hermite_slopes(both, grid)
        at_R = hermite_apply(both, both_slopes, hermite_basis(foot_R, grid))
        at_S = hermite_apply(both, both_slopes, hermite_basis(foot_S, grid))
        R_star, S_at_R = at_R[0], at_R[1]
        R_at_S, S_star = at_S[0], at_S[1]
    else:
        R_star = linear_eval(R, foot_R, grid)
        S_at_R = linear_eval(S, foot_R, grid)
        S_star = linear_eval(S, foot_S, grid)
        R_at_S = linear_eval(R, foot_S, grid)

    src_R = R_star * R_star - S_at_R * S_at_R
    src_S = S_star * S_star - R_at_S * R_at_S
    if mode.regularized:
        src_R = src_R - quadratic_cutoff(R_star, mode.cutoff_eps)
        src_S = src_S - quadratic_cutoff(S_star, mode.cutoff_eps)
    if mode.correction:
        src_R = src_R + 2.0 * R_star * theta
        src_S = src_S - 2.0 * S_star * theta

    kick = noise.assemble(increments, smooth=mode.regularized)
    R_new = R_star + dt * w * src_R + kick
    S_new = S_star + dt * w * src_S + kick

    accum = state.boundary_accum + dt * 0.5 * (R[0] + S[0])
    new = State(grid=grid, R=R_new, S=S_new, t=state.t + dt,
                boundary_accum=accum, threshold=state.threshold,
                interp=state.interp, u_guess=u)
    sup = new.sup_norm()
    if not np.isfinite(sup) or sup > state.threshold:
        new.exploded = True
    return new, increments


def detect_explosion(state: State, threshold: float) -> Optional[float]:
    """Time of the current state if its sup norm exceeds the threshold
    (or it carries non-finite values), else None."""
    if threshold <= 0:
        raise InvalidParameterError(f"explosion threshold must be > 0, got {threshold}")
    finite = np.isfinite(state.R).all() and np.isfinite(state.S).all()
    if not finite or state.sup_norm() > threshold:
        return state.t
    return None


@dataclass
class CharTracer:
    """Probe advected along one family of characteristics, sampling the
    invariants and u at its current position."""

    sign: int
    x: float
    times: list = field(default_factory=list)
    r_samples: list = field(default_factory=list)
    s_samples: list = field(default_factory=list)
    u_samples: list = field(default_factory=list)

    def record(self, state: State, speed: WaveSpeed):
        u = reconstruct_u(state, speed)
        self.times.append(state.t)
        self.r_samples.append(interpolate(state.R, self.x, state.grid, state.interp))
        self.s_samples.append(interpolate(state.S, self.x, state.grid, state.interp))
        self.u_samples.append(interpolate(u, self.x, state.grid, state.interp))


def advance_tracer(tracer: CharTracer, state_before: State, state_after: State,
                   speed: WaveSpeed, dt: float) -> CharTracer:
    """Move the tracer by the midpoint rule along sign * c(u) and sample."""
    grid = state_before.grid
    cu_before = speed.value(reconstruct_u(state_before, speed))
    if state_after.exploded:
        cu_after = cu_before
    else:
        cu_after = speed.value(reconstruct_u(state_after, speed))
    sgn = float(tracer.sign)
    c_here = interpolate(cu_before, tracer.x, grid, state_before.interp)
    x_half = tracer.x + sgn * 0.5 * dt * c_here
    c_half = interpolate(0.5 * (cu_before + cu_after), x_half, grid,
                         state_before.interp)
    tracer.x = float(np.mod(tracer.x + sgn * dt * c_half, 1.0))
    if not state_after.exploded:
        tracer.record(state_after, speed)
    return tracer
