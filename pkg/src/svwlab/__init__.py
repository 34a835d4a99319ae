"""Numerical laboratory for the 1D stochastic variational wave equation."""

from .config import RunConfig
from .diagnostics import (EnergyLedger, Snapshot, Window, WindowMoments,
                          cross_resolution_delta, energy, lp_weighted,
                          make_ledger, oleinik_stats, truncated_square,
                          truncated_square_prime, update_ledger, window_moments)
from .dynamics import (CharTracer, State, StepMode, advance_tracer,
                       correction_term, derived_fields, detect_explosion,
                       init_state, reconstruct_u, state_from_invariants, step)
from .grid import (Grid, antiderivative_from_zero, centered_diff, interpolate,
                   mollify, periodic_integral)
from .noise import ModeIncrements, NoiseModel, build_modes
from .rng import path_stream
from .speed import (WaveSpeed, constant_speed, quadratic_cutoff, table_speed,
                    tanh_speed)

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "EnergyLedger", "Snapshot", "Window", "WindowMoments",
    "cross_resolution_delta", "energy", "lp_weighted", "make_ledger",
    "oleinik_stats", "truncated_square", "truncated_square_prime",
    "update_ledger", "window_moments", "CharTracer", "State", "StepMode",
    "advance_tracer", "correction_term", "derived_fields", "detect_explosion",
    "init_state", "reconstruct_u", "state_from_invariants", "step", "Grid",
    "antiderivative_from_zero", "centered_diff", "interpolate", "mollify",
    "periodic_integral", "ModeIncrements", "NoiseModel", "build_modes",
    "path_stream", "WaveSpeed", "constant_speed", "quadratic_cutoff",
    "table_speed", "tanh_speed",
]
