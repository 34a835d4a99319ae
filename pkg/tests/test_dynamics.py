import numpy as np
import pytest

from svwlab import (CharTracer, Grid, State, StepMode, advance_tracer,
                    build_modes, constant_speed, correction_term,
                    derived_fields, detect_explosion, init_state, interpolate,
                    path_stream, periodic_integral, reconstruct_u,
                    state_from_invariants, step, tanh_speed)
from svwlab.errors import (CflViolationError, GridMismatchError,
                           InvalidParameterError)
from svwlab.grid import centered_diff
from svwlab.profiles import unit_bump


def cfl_dt(grid, speed, cfl=0.5):
    return cfl * grid.dx / speed.c2


def run_steps(state, speed, noise, dt, mode, rng, n_steps):
    for _ in range(n_steps):
        state, _ = step(state, speed, noise, dt, mode, rng)
        if state.exploded:
            break
    return state


# -- initial data -------------------------------------------------------------

def test_init_constant_data(grid256, tanh, mode_off):
    u0 = np.full(grid256.n, 0.4)
    v0 = np.full(grid256.n, -0.7)
    st = init_state(u0, v0, tanh, mode_off, grid256)
    assert np.max(np.abs(st.R + 0.7)) < 1e-14
    assert np.max(np.abs(st.S + 0.7)) < 1e-14
    assert st.boundary_accum == pytest.approx(0.4)


def test_init_zero_gradient_speed_independent(grid256, tanh, mode_off):
    v0 = np.sin(2 * np.pi * grid256.x)
    st = init_state(np.zeros(grid256.n), v0, tanh, mode_off, grid256)
    assert np.max(np.abs(st.R - v0)) < 1e-14
    assert np.max(np.abs(st.S - v0)) < 1e-14


def test_init_matches_analytic_gradient(tanh, mode_off):
    errs = {}
    for n in (128, 256):
        g = Grid(n)
        u0 = 0.1 * np.sin(2 * np.pi * g.x)
        st = init_state(u0, np.zeros(n), tanh, mode_off, g)
        exact = -0.2 * np.pi * np.cos(2 * np.pi * g.x) * tanh.value(u0)
        errs[n] = np.max(np.abs(st.R - exact))
        assert np.max(np.abs(st.S + st.R - 2 * 0.0)) < 1e-13  # S = -R for v0 = 0
    assert errs[128] / errs[256] > 3.5  # O(dx^2)


def test_init_regularized_mollifies(grid256, tanh):
    u0 = 0.1 * np.sin(2 * np.pi * grid256.x)
    v0 = np.zeros(grid256.n)
    raw = init_state(u0, v0, tanh, StepMode(None), grid256)
    reg = init_state(u0, v0, tanh, StepMode(0.1), grid256)
    assert reg.R.max() < raw.R.max()
    assert abs(periodic_integral(reg.R) - periodic_integral(raw.R)) < 1e-13


def test_init_grid_mismatch(grid256, tanh, mode_off):
    with pytest.raises(GridMismatchError):
        init_state(np.zeros(128), np.zeros(grid256.n), tanh, mode_off, grid256)


def test_mode_validation():
    StepMode(0.1, True)
    with pytest.raises(InvalidParameterError):
        StepMode(0.1, False)
    with pytest.raises(InvalidParameterError):
        StepMode(-0.1, True)


# -- correction term and reconstruction ---------------------------------------

def test_correction_examples(grid256):
    st = State(grid=grid256, R=-np.ones(grid256.n), S=np.ones(grid256.n))
    assert correction_term(st) == pytest.approx(1.0)
    v = np.sin(2 * np.pi * grid256.x)
    assert correction_term(State(grid=grid256, R=v, S=v.copy())) == 0.0
    st = State(grid=grid256, R=np.cos(2 * np.pi * grid256.x),
               S=np.full(grid256.n, 0.5))
    assert correction_term(st) == pytest.approx(0.25, abs=1e-14)


def test_reconstruct_constant_state(grid256, tanh):
    v = np.full(grid256.n, 0.8)
    st = State(grid=grid256, R=v.copy(), S=v.copy(), boundary_accum=1.3)
    u = reconstruct_u(st, tanh)
    assert np.max(np.abs(u - 1.3)) < 1e-12


def test_reconstruct_linear_growth(grid256, tanh, mode_off, silent_noise):
    st = init_state(np.full(grid256.n, 0.2), np.full(grid256.n, 0.5), tanh,
                    mode_off, grid256)
    dt = cfl_dt(grid256, tanh)
    rng = path_stream(0, 0)
    n_steps = 200
    st = run_steps(st, tanh, silent_noise, dt, mode_off, rng, n_steps)
    u = reconstruct_u(st, tanh)
    assert np.max(np.abs(u - (0.2 + 0.5 * st.t))) < 1e-11


def test_reconstruct_identity(tanh):
    """c(u) u_x recovers (S-R)/2 - theta to O(dx^2) on smooth states."""
    errs = {}
    for n in (128, 256):
        g = Grid(n)
        R = 0.8 * np.sin(2 * np.pi * g.x) + 0.3
        S = 0.5 * np.cos(2 * np.pi * g.x) - 0.1 * np.sin(4 * np.pi * g.x)
        st = State(grid=g, R=R, S=S, boundary_accum=0.1)
        u = reconstruct_u(st, tanh)
        theta = correction_term(st)
        lhs = tanh.value(u) * centered_diff(u, g)
        rhs = 0.5 * (S - R) - theta
        errs[n] = np.max(np.abs(lhs - rhs))
    assert errs[256] < 1e-3
    assert errs[128] / errs[256] > 3.5


def test_reconstruct_periodic_wrap(grid256, tanh):
    rng = np.random.default_rng(5)
    R = rng.normal(size=grid256.n)
    S = rng.normal(size=grid256.n)
    st = State(grid=grid256, R=R, S=S, boundary_accum=0.3)
    theta = correction_term(st)
    integrand = 0.5 * (S - R) - theta
    wrap = integrand.sum() * grid256.dx
    assert abs(wrap) < 1e-12  # zero mean forced by the correction
    u = reconstruct_u(st, tanh)
    assert np.all(np.isfinite(u))


# -- derived fields ------------------------------------------------------------

def test_derived_fields_balanced_state(grid256, tanh, mode_off):
    v = np.sin(2 * np.pi * grid256.x)
    st = State(grid=grid256, R=v.copy(), S=v.copy(), boundary_accum=0.0)
    u, u_x, u_t = derived_fields(st, tanh, mode_off)
    assert np.max(np.abs(u_t - v)) < 1e-12  # Xi vanishes, u_t = (R+S)/2
    st2 = State(grid=grid256, R=v.copy(), S=v.copy(), boundary_accum=0.0)
    _, _, u_t2 = derived_fields(st2, tanh, StepMode(0.5))
    assert np.max(np.abs(u_t2 - v)) < 1e-12  # below the cutoff threshold


def test_derived_fields_quadrature_oracle(tanh):
    """The non-local u_t term matches a dense-grid evaluation to O(dx^2)."""
    mode = StepMode(0.1)

    def fields(g):
        R = 12.0 + 8.0 * np.sin(2 * np.pi * g.x)   # exceeds 1/eps = 10
        S = 3.0 * np.cos(4 * np.pi * g.x)
        return State(grid=g, R=R, S=S, boundary_accum=0.2)

    dense = Grid(4096)
    _, _, ut_dense = derived_fields(fields(dense), tanh, mode)
    errs = {}
    for n in (128, 256):
        g = Grid(n)
        st = fields(g)
        _, _, u_t = derived_fields(st, tanh, mode)
        xi = u_t - 0.5 * (st.R + st.S)
        xi_dense = ut_dense - 0.5 * (fields(dense).R + fields(dense).S)
        errs[n] = np.max(np.abs(xi - xi_dense[:: dense.n // n]))
        assert np.max(np.abs(xi)) > 1e-3  # the term is genuinely active
    assert errs[128] / errs[256] > 3.0


# -- stepping ------------------------------------------------------------------

def test_step_constant_state_invariant(grid256, tanh, silent_noise):
    for mode in (StepMode(None), StepMode(0.5)):
        v = np.full(grid256.n, 0.9)
        st = State(grid=grid256, R=v.copy(), S=v.copy(), boundary_accum=0.1,
                   threshold=1e3)
        dt = cfl_dt(grid256, tanh)
        rng = path_stream(1, 0)
        st2 = run_steps(st, tanh, silent_noise, dt, mode, rng, 50)
        assert np.max(np.abs(st2.R - 0.9)) < 1e-12
        assert np.max(np.abs(st2.S - 0.9)) < 1e-12
        assert st2.boundary_accum == pytest.approx(0.1 + 0.9 * st2.t, abs=1e-12)


def test_step_cfl_guard(grid256, tanh, mode_off, silent_noise):
    st = init_state(np.zeros(grid256.n), np.zeros(grid256.n), tanh, mode_off,
                    grid256)
    with pytest.raises(CflViolationError):
        step(st, tanh, silent_noise, grid256.dx, mode_off, path_stream(0, 0))


def test_step_pure_transport(mode_off):
    sp = constant_speed(2.0)
    g = Grid(128)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    st = init_state(0.1 * np.sin(2 * np.pi * g.x), np.zeros(g.n), sp, mode_off, g)
    R0 = st.R.copy()
    dt = cfl_dt(g, sp)
    T = 0.25
    rng = path_stream(0, 0)
    st = run_steps(st, sp, nz, dt, mode_off, rng, round(T / dt))
    exact = interpolate(R0, g.x - 2.0 * T, g)
    err = np.sqrt(periodic_integral((st.R - exact) ** 2)
                  / periodic_integral(exact ** 2))
    assert err < 5e-3


def test_step_additive_noise_variance(mode_off):
    """Pooled (path, x) variance of R(T) is Var[R0] + q T under pure transport."""
    sp = constant_speed(2.0)
    g = Grid(64)
    nz = build_modes(g, 2, 0.4, 3.0, 0.1)
    q = float(nz.q[0])
    T = 0.25
    dt = cfl_dt(g, sp)
    n_steps = round(T / dt)
    terminal = []
    for p in range(400):
        st = init_state(0.05 * np.sin(2 * np.pi * g.x),
                        0.3 * np.sin(2 * np.pi * g.x), sp, mode_off, g)
        rng = path_stream(99, p)
        st = run_steps(st, sp, nz, dt, mode_off, rng, n_steps)
        terminal.append(st.R)
    pooled = np.concatenate(terminal)
    base = init_state(0.05 * np.sin(2 * np.pi * g.x),
                      0.3 * np.sin(2 * np.pi * g.x), sp, mode_off, g).R
    target = float(np.var(base)) + q * T
    assert abs(pooled.var() - target) / target < 0.10


# -- tracers -------------------------------------------------------------------

def test_tracer_constant_speed(mode_off):
    sp = constant_speed(2.0)
    g = Grid(128)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    st = init_state(np.zeros(g.n), np.zeros(g.n), sp, mode_off, g)
    tracer = CharTracer(sign=1, x=0.1)
    dt = cfl_dt(g, sp)
    rng = path_stream(0, 0)
    n_steps = round(0.2 / dt)
    for _ in range(n_steps):
        new, _ = step(st, sp, nz, dt, mode_off, rng)
        advance_tracer(tracer, st, new, sp, dt)
        st = new
    assert tracer.x == pytest.approx(0.1 + 2.0 * n_steps * dt, abs=1e-10)
    assert len(tracer.times) == n_steps  # one sample per advance


def test_tracer_wraps(mode_off):
    sp = constant_speed(2.0)
    g = Grid(128)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    st = init_state(np.zeros(g.n), np.zeros(g.n), sp, mode_off, g)
    tracer = CharTracer(sign=1, x=0.9)
    dt = cfl_dt(g, sp)
    rng = path_stream(0, 0)
    n_steps = round(0.1 / dt)
    for _ in range(n_steps):
        new, _ = step(st, sp, nz, dt, mode_off, rng)
        advance_tracer(tracer, st, new, sp, dt)
        st = new
    expected = (0.9 + 2.0 * n_steps * dt) % 1.0
    assert expected < 0.2  # genuinely wrapped
    assert tracer.x == pytest.approx(expected, abs=1e-10)


def test_tracer_forward_inverse(tanh, mode_off):
    """Bisecting over start points recovers the original foot of the flow."""
    g = Grid(256)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    T, x_target = 0.2, 0.3

    def endpoint(x_start):
        st = init_state(0.2 * np.sin(2 * np.pi * g.x), np.zeros(g.n), tanh,
                        mode_off, g)
        tracer = CharTracer(sign=1, x=x_start)
        dt = cfl_dt(g, tanh)
        rng = path_stream(0, 0)
        for _ in range(round(T / dt)):
            new, _ = step(st, tanh, nz, dt, mode_off, rng)
            advance_tracer(tracer, st, new, tanh, dt)
            st = new
        return tracer.x

    target_end = endpoint(x_target)
    lo, hi = x_target - 0.05, x_target + 0.05
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if endpoint(mid) < target_end:
            lo = mid
        else:
            hi = mid
    assert 0.5 * (lo + hi) == pytest.approx(x_target, abs=1e-4)


# -- explosion detection --------------------------------------------------------

def test_no_explosion_small_data(tanh, mode_off):
    g = Grid(256)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    st = init_state(0.01 * np.sin(2 * np.pi * g.x),
                    0.05 * np.sin(2 * np.pi * g.x), tanh, mode_off, g,
                    threshold=50.0)
    sup0 = st.sup_norm()
    dt = cfl_dt(g, tanh)
    rng = path_stream(0, 0)
    st = run_steps(st, tanh, nz, dt, mode_off, rng, round(1.0 / dt))
    assert not st.exploded
    assert detect_explosion(st, 50.0) is None
    assert st.sup_norm() <= 2.0 * sup0


def test_explosion_latch(grid256, tanh, mode_off, silent_noise):
    st = State(grid=grid256, R=np.ones(grid256.n), S=np.ones(grid256.n),
               exploded=True, t=0.7)
    new, _ = step(st, tanh, silent_noise, cfl_dt(grid256, tanh), mode_off,
                  path_stream(0, 0))
    assert new is st
    assert detect_explosion(st, 0.5) == pytest.approx(0.7)
    with pytest.raises(InvalidParameterError):
        detect_explosion(st, 0.0)


def test_riccati_blowup_detection(tanh, mode_off):
    from svwlab.presets import riccati_blowup_time

    g = Grid(512)
    threshold = 160.0
    x = g.x
    bump = unit_bump((x - 0.5) / 0.3)
    R0 = 40.0 * (bump - bump.mean()) / (1.0 - bump.mean())
    st = state_from_invariants(R0, np.zeros(g.n), 0.0, g, mode_off,
                               threshold=threshold)
    u0 = reconstruct_u(st, tanh)
    w0 = tanh.source_coeff(u0[int(np.argmax(st.R))])
    oracle = riccati_blowup_time(w0, float(st.R.max()), big=threshold)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    dt = cfl_dt(g, tanh)
    rng = path_stream(0, 0)
    detected = None
    for _ in range(round(0.4 / dt)):
        st, _ = step(st, tanh, nz, dt, mode_off, rng)
        if st.exploded:
            detected = st.t
            break
    assert detected is not None
    assert abs(detected - oracle) / oracle < 0.30


def test_step_linear_interpolation(mode_off):
    sp = constant_speed(2.0)
    g = Grid(256)
    nz = build_modes(g, 0, 0.0, 3.0, 0.1)
    st = init_state(0.1 * np.sin(2 * np.pi * g.x), np.zeros(g.n), sp, mode_off,
                    g, interp="linear")
    R0 = st.R.copy()
    dt = cfl_dt(g, sp)
    T = 0.25
    rng = path_stream(0, 0)
    st = run_steps(st, sp, nz, dt, mode_off, rng, round(T / dt))
    exact = interpolate(R0, g.x - 2.0 * T, g)
    err = np.sqrt(periodic_integral((st.R - exact) ** 2)
                  / periodic_integral(exact ** 2))
    assert err < 0.05  # first-order scheme, much looser than cubic


def test_transport_error_form(mode_off):
    """Transport error splits into an interpolation part ~ dx^3/dt * t and a
    foot-point part ~ dt^2 * t: halving dt at fixed dx must not help, while
    halving dx at fixed dt cuts the error by ~8x."""
    sp = constant_speed(2.0)
    T = 0.25

    def run(n, dt):
        g = Grid(n)
        nz = build_modes(g, 0, 0.0, 3.0, 0.1)
        st = init_state(0.1 * np.sin(2 * np.pi * g.x), np.zeros(g.n), sp,
                        mode_off, g)
        R0 = st.R.copy()
        rng = path_stream(0, 0)
        steps = round(T / dt)
        st = run_steps(st, sp, nz, dt, mode_off, rng, steps)
        exact = interpolate(R0, g.x - 2.0 * steps * dt, g)
        return np.sqrt(periodic_integral((st.R - exact) ** 2))

    dt0 = 0.5 * (1.0 / 256) / sp.c2
    base = run(128, dt0)            # coarse grid, small dt: interpolation-bound
    smaller_dt = run(128, dt0 / 2)  # more steps, more interpolation error
    finer_dx = run(256, dt0)        # same dt, finer grid
    assert smaller_dt > base        # dx^3/dt scaling: shrinking dt hurts
    assert base / finer_dx > 5.0    # ~dx^3 gain at fixed dt
