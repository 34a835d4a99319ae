"""Experiment presets: blow-up sweep and eps-convergence study.

Both emit machine-readable CSV/JSON plus a one-page plain-text report, all
stamped with the config hash and master seed.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .diagnostics import cross_resolution_delta
from .dynamics import init_state
from .errors import InvalidParameterError
from .grid import Grid, periodic_integral
from .profiles import PHI_STEEPEST_X0, phi_quarter, phi_quarter_prime
from .runner import RunOptions, run_single, write_meta
from .speed import WaveSpeed


def riccati_blowup_time(coeff: float, r0: float, big: float = 1e12,
                        n_coarse: int = 16384) -> Optional[float]:
    """Time for r' = coeff r^2 (coeff frozen) to cross `big`, by RK4 plus
    bisection on the crossing step.

    Along the rising characteristic the scalar u barely moves (its drift is
    fed by the opposite invariant, which stays small), so the quadratic
    coefficient is frozen at its initial value.  With `big` set to the
    detection threshold of a run this is the matched oracle for the
    threshold-crossing time; with the default it is the divergence time.
    """
    if coeff <= 0 or r0 <= 0:
        return None

    def rhs(r):
        return coeff * r * r

    def rk4_step(r, h):
        k1 = rhs(r)
        k2 = rhs(r + 0.5 * h * k1)
        k3 = rhs(r + 0.5 * h * k2)
        k4 = rhs(r + h * k3)
        return r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    horizon = 4.0 / (coeff * r0)
    h = horizon / n_coarse
    t, r = 0.0, r0
    t_prev, r_prev = t, r
    for _ in range(4 * n_coarse):
        t_prev, r_prev = t, r
        r = rk4_step(r, h)
        t += h
        if not np.isfinite(r) or r > big:
            break
    else:
        return None
    # bisection on the step that crossed `big`
    lo_t, lo_r = t_prev, r_prev
    hi_t = t
    for _ in range(80):
        mid = 0.5 * (lo_t + hi_t)
        r_mid = rk4_step(lo_r, mid - lo_t)
        if np.isfinite(r_mid) and r_mid <= big:
            lo_t, lo_r = mid, r_mid
        else:
            hi_t = mid
        if hi_t - lo_t < 1e-14 * horizon:
            break
    return 0.5 * (lo_t + hi_t)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial fraction."""
    if trials <= 0:
        raise InvalidParameterError("wilson interval needs trials >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _next_pow2(x: float) -> int:
    return 1 << max(3, math.ceil(math.log2(max(8.0, x))))


def _thin_tracer(tracer, x_start, keep: int = 200):
    if tracer is None:
        return None
    stride = max(1, len(tracer.times) // keep)
    sel = slice(None, None, stride)
    return {"x_start": x_start, "sign": 1,
            "t": tracer.times[sel], "R": tracer.r_samples[sel],
            "S": tracer.s_samples[sel], "u": tracer.u_samples[sel]}


# -- blow-up sweep -------------------------------------------------------------


def blowup_initial_data(grid: Grid, eps: float, alpha: float, nu: float,
                        gamma: float, u_star: float):
    """Steep compactly supported data: u0 = u* + eps^a phi(x / eps^(a+nu+g)),
    v0 = 0, with phi the bump supported on (1/4, 3/4)."""
    ell = eps ** (alpha + nu + gamma)
    u0 = u_star + eps ** alpha * phi_quarter(grid.x / ell)
    v0 = np.zeros(grid.n)
    return u0, v0, ell


def _blowup_run_config(config: RunConfig, eps: float, alpha: float, nu: float,
                       gamma: float, n_grid: int, amplitude: Optional[float] = None,
                       paths: int = 1) -> RunConfig:
    overrides = {
        "grid": {"n": n_grid},
        "run": {"t_end": eps ** gamma, "mode": "regular", "output_stride": 10 ** 9},
        # the sweep builds (u0, v0) directly; the config's init section is inert here
        "init": {"kind": "constant", "u0": 0.0, "v0": 0.0},
        "paths": paths,
    }
    if amplitude is not None:
        overrides["noise"] = {"amplitude": amplitude}
    return config.updated(**overrides)


def _run_blowup_path(config: RunConfig, grid: Grid, speed: WaveSpeed,
                     u0, v0, path_index: int, threshold: float,
                     tracer_x: Optional[float] = None):
    """One path of the sweep with direct (u0, v0) data; returns the blow-up
    time (None if the deadline passed quietly) and the tracer if requested."""
    from .dynamics import CharTracer, advance_tracer
    from .dynamics import step as _step
    from .rng import path_stream

    mode = config.build_mode()
    noise = config.build_noise(grid)
    state = init_state(u0, v0, speed, mode, grid, threshold,
                       config.raw["scheme"]["interpolation"])
    dt = config.time_step()
    n_steps = config.n_steps()
    rng = path_stream(config.seed, path_index)
    tracer = None
    if tracer_x is not None:
        tracer = CharTracer(sign=1, x=float(tracer_x))
        tracer.record(state, speed)
    for _ in range(n_steps):
        new, _inc = _step(state, speed, noise, dt, mode, rng)
        if tracer is not None:
            advance_tracer(tracer, state, new, speed, dt)
        state = new
        if state.exploded:
            return state.t, tracer
    return None, tracer


def _blowup_worker(args):
    raw, eps, alpha, nu, gamma, u_star, threshold, path_index = args
    config = RunConfig.from_dict(raw)
    grid = config.build_grid()
    speed = config.build_speed()
    u0, v0, _ = blowup_initial_data(grid, eps, alpha, nu, gamma, u_star)
    t_blow, _ = _run_blowup_path(config, grid, speed, u0, v0, path_index, threshold)
    return path_index, t_blow


def preset_blowup(config: RunConfig, eps_list: Sequence[float], alpha: float,
                  nu: float, gamma: float, u_star: float,
                  paths: Optional[int] = None, x0: float = PHI_STEEPEST_X0,
                  max_n: int = 2048, out_dir=None) -> dict:
    """Sweep the data steepness and record the fraction of paths whose
    sup norm crosses the threshold before the deadline eps^gamma.

    The grid is refined per eps toward resolving the steep flank of the
    data, capped at max_n; below roughly eps^(alpha+nu+gamma) ~ 10/max_n
    the flank is narrower than a cell and the crossing statistics degrade
    (see the report emitted alongside the table).
    """
    if not alpha > 1:
        raise InvalidParameterError(f"alpha must be > 1, got {alpha}")
    if not 0 < nu < alpha - 1:
        raise InvalidParameterError(f"nu must be in (0, alpha-1), got {nu}")
    if not gamma > 1.0 / 3.0:
        raise InvalidParameterError(f"gamma must be > 1/3, got {gamma}")
    speed_probe = config.build_speed()
    if speed_probe.derivative(u_star) <= 0:
        raise InvalidParameterError(f"c'(u*) must be positive at u*={u_star}")
    paths = paths if paths is not None else config.paths

    rows = []
    for eps in eps_list:
        ell = eps ** (alpha + nu + gamma)
        deadline = eps ** gamma
        n_grid = min(max_n, _next_pow2(max(config.raw["grid"]["n"], 12.0 / ell)))
        run_cfg = _blowup_run_config(config, eps, alpha, nu, gamma, n_grid)
        grid = run_cfg.build_grid()
        speed = run_cfg.build_speed()
        u0, v0, _ = blowup_initial_data(grid, eps, alpha, nu, gamma, u_star)

        # threshold: configured value, else the default from the sampled data
        mode = run_cfg.build_mode()
        probe_state = init_state(u0, v0, speed, mode, grid)
        configured = run_cfg.raw["run"]["explosion_threshold"]
        threshold = float(configured) if configured is not None else probe_state.threshold

        r0_grid = float(np.max(probe_state.R))
        u_at_peak = float(u0[int(np.argmax(probe_state.R))])
        oracle = riccati_blowup_time(speed.source_coeff(u_at_peak), r0_grid)
        r0_x0 = float(-speed.value(u_star + eps ** alpha * phi_quarter(x0))
                      * eps ** (-nu - gamma) * phi_quarter_prime(x0))

        # zero-noise member with the characteristic tracer from x_eps
        det_cfg = _blowup_run_config(config, eps, alpha, nu, gamma, n_grid,
                                     amplitude=0.0)
        det_time, tracer = _run_blowup_path(det_cfg, grid, speed, u0, v0, 0,
                                            threshold, tracer_x=ell * x0)

        jobs = [(json.loads(run_cfg.canonical_json()), eps, alpha, nu, gamma,
                 u_star, threshold, p) for p in range(paths)]
        if config.workers > 1 and paths > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(_blowup_worker, jobs, chunksize=4))
        else:
            results = [_blowup_worker(job) for job in jobs]
        results.sort(key=lambda r: r[0])
        times = [t for _, t in results]
        hits = sum(1 for t in times if t is not None and t <= deadline)
        lo, hi = wilson_interval(hits, paths)
        rows.append({
            "eps": eps, "n": n_grid, "deadline": deadline, "paths": paths,
            "threshold": threshold, "blowup_count": hits,
            "fraction": hits / paths, "wilson_low": lo, "wilson_high": hi,
            "r0_grid_max": r0_grid, "r0_at_x0": r0_x0,
            # cells across the half-max width of the steep flank of the data
            "flank_cells": 0.1175 * ell * n_grid,
            "riccati_oracle": oracle, "det_blowup_time": det_time,
            "blowup_times": times,
            "tracer": _thin_tracer(tracer, ell * x0),
        })

    table = {
        "kind": "blowup",
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "alpha": alpha, "nu": nu, "gamma": gamma, "u_star": u_star, "x0": x0,
        "rows": rows,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_meta(config, out, extra={"kind": "blowup"})
        with open(out / "blowup.json", "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
        _write_blowup_csv(rows, out / "blowup.csv")
        _write_blowup_report(table, out / "report.txt")
    return table


def _write_blowup_csv(rows, path):
    cols = ("eps", "n", "deadline", "paths", "threshold", "blowup_count",
            "fraction", "wilson_low", "wilson_high", "r0_grid_max",
            "riccati_oracle", "det_blowup_time")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            vals = []
            for c in cols:
                v = row[c]
                vals.append("" if v is None else
                            (str(v) if isinstance(v, int) else f"{v:.17g}"))
            fh.write(",".join(vals) + "\n")


def _write_blowup_report(table, path):
    lines = [
        "Blow-up sweep",
        f"config {table['config_hash']}  seed {table['seed']}",
        f"alpha={table['alpha']} nu={table['nu']} gamma={table['gamma']} "
        f"u*={table['u_star']} x0={table['x0']:.6f}",
        "",
        f"{'eps':>8} {'n':>6} {'deadline':>10} {'fraction':>9} "
        f"{'wilson':>17} {'det time':>10} {'oracle':>10}",
    ]
    for row in table["rows"]:
        det = f"{row['det_blowup_time']:.4f}" if row["det_blowup_time"] else "none"
        orc = f"{row['riccati_oracle']:.4f}" if row["riccati_oracle"] else "none"
        lines.append(
            f"{row['eps']:>8.4g} {row['n']:>6d} {row['deadline']:>10.4f} "
            f"{row['fraction']:>9.3f} [{row['wilson_low']:.3f}, {row['wilson_high']:.3f}] "
            f"{det:>10} {orc:>10}")
    lines.append("")
    lines.append("fraction = share of paths whose sup norm crossed the threshold "
                 "before the deadline eps^gamma; the interval is a 95% Wilson score.")
    under = [row for row in table["rows"] if row["flank_cells"] < 4.0]
    if under:
        lines.append("warning: steep flank under-resolved (< 4 cells) at eps = "
                     + ", ".join(f"{row['eps']:g}" for row in under)
                     + "; crossing statistics are resolution-limited there.")
    Path(path).write_text("\n".join(lines) + "\n")


# -- eps-convergence study -----------------------------------------------------


def _convergence_worker(args):
    raw, eps, path_index = args
    config = RunConfig.from_dict(raw)
    opts = RunOptions(record_series=False, track_ledger=True,
                      collect_snapshots=False, track_theta=True)
    result = run_single(config, path_index, opts)
    return {
        "path": path_index,
        "eps": eps,
        "sup_theta": result.sup_theta,
        "D_T": result.ledger.D,
        "R_T": result.final_state.R,
        "S_T": result.final_state.S,
        "exploded": result.final_state.exploded,
    }


def preset_convergence(config: RunConfig, eps_list: Sequence[float],
                       kappa_list: Sequence[float] = (1.0, 4.0),
                       out_dir=None) -> dict:
    """For each eps: correction sup-norm statistics, accumulated cutoff
    dissipation, and distances at T to a reference run at the smallest eps on
    shared increments.  Emits a log-log table with the fitted scaling slope.
    """
    eps_list = list(eps_list)
    if sorted(eps_list, reverse=True) != eps_list:
        raise InvalidParameterError("eps list must be decreasing")
    eps_ref = eps_list[-1]
    paths = config.paths

    per_eps = {}
    for eps in eps_list:
        run_cfg = config.updated(run={"mode": "regularized", "epsilon": eps},
                                 noise={"epsilon": None})
        jobs = [(json.loads(run_cfg.canonical_json()), eps, p) for p in range(paths)]
        if config.workers > 1 and paths > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                outs = list(pool.map(_convergence_worker, jobs, chunksize=1))
        else:
            outs = [_convergence_worker(job) for job in jobs]
        outs.sort(key=lambda o: o["path"])
        per_eps[eps] = outs

    grid = config.build_grid()
    ref = per_eps[eps_ref]
    rows = []
    for eps in eps_list:
        outs = per_eps[eps]
        sup_thetas = np.array([o["sup_theta"] for o in outs])
        d_vals = np.array([o["D_T"] for o in outs])
        l2_r, l2_s, deltas, deltas_check, deltas_kappa = [], [], [], [], []
        for o, o_ref in zip(outs, ref):
            dr = o["R_T"] - o_ref["R_T"]
            ds = o["S_T"] - o_ref["S_T"]
            l2_r.append(math.sqrt(periodic_integral(dr * dr)))
            l2_s.append(math.sqrt(periodic_integral(ds * ds)))
            cross = cross_resolution_delta(o["R_T"], o_ref["R_T"], kappa_list)
            deltas.append(cross["delta"])
            deltas_kappa.append(cross["delta_kappa"])
            deltas_check.append(cross_resolution_delta(o["S_T"], o_ref["S_T"])["delta"])
        n = len(outs)
        rows.append({
            "eps": eps,
            "paths": n,
            "sup_theta_mean": float(np.mean(sup_thetas)),
            "sup_theta_se": float(np.std(sup_thetas, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "sup_theta_per_path": sup_thetas.tolist(),
            "D_T_mean": float(np.mean(d_vals)),
            "l2_dist_R": float(np.mean(l2_r)),
            "l2_dist_S": float(np.mean(l2_s)),
            "cross_delta": float(np.mean(deltas)),
            "cross_delta_check": float(np.mean(deltas_check)),
            "cross_delta_kappa": {str(k): float(np.mean([d[k] for d in deltas_kappa]))
                                  for k in kappa_list},
            "exploded_paths": sum(1 for o in outs if o["exploded"]),
        })

    # log-log slope of E[sup_t |Theta|] against eps
    xs = np.log([row["eps"] for row in rows])
    ys = np.log([max(row["sup_theta_mean"], 1e-300) for row in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    fit = slope * xs + intercept
    dof = max(1, len(xs) - 2)
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    slope_se = math.sqrt(float(np.sum((ys - fit) ** 2)) / dof / sxx) if sxx > 0 else 0.0

    table = {
        "kind": "converge",
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "eps_ref": eps_ref,
        "kappa_list": list(kappa_list),
        "rows": rows,
        "theta_slope": float(slope),
        "theta_slope_se": float(slope_se),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_meta(config, out, extra={"kind": "converge"})
        with open(out / "converge.json", "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
        _write_converge_csv(table, out / "converge.csv")
        _write_converge_report(table, out / "report.txt")
    return table


def _write_converge_csv(table, path):
    cols = ("eps", "paths", "sup_theta_mean", "sup_theta_se", "D_T_mean",
            "l2_dist_R", "l2_dist_S", "cross_delta")
    with open(path, "w") as fh:
        header = list(cols) + [f"cross_delta_kappa_{k}" for k in table["kappa_list"]]
        fh.write(",".join(header) + "\n")
        for row in table["rows"]:
            vals = [str(row["paths"]) if c == "paths" else f"{row[c]:.17g}"
                    for c in cols]
            vals += [f"{row['cross_delta_kappa'][str(k)]:.17g}"
                     for k in table["kappa_list"]]
            fh.write(",".join(vals) + "\n")


def _write_converge_report(table, path):
    lines = [
        "Mollifier/cutoff width convergence study",
        f"config {table['config_hash']}  seed {table['seed']}",
        f"reference eps = {table['eps_ref']}",
        "",
        f"{'eps':>8} {'E[sup|Theta|]':>14} {'se':>10} {'D(T)':>12} "
        f"{'L2(R-Rref)':>12} {'crossDelta':>12}",
    ]
    for row in table["rows"]:
        lines.append(f"{row['eps']:>8.4g} {row['sup_theta_mean']:>14.6g} "
                     f"{row['sup_theta_se']:>10.3g} {row['D_T_mean']:>12.6g} "
                     f"{row['l2_dist_R']:>12.6g} {row['cross_delta']:>12.6g}")
    lines.append("")
    lines.append(f"log-log slope of E[sup|Theta|] vs eps: "
                 f"{table['theta_slope']:.3f} (se {table['theta_slope_se']:.3f})")
    Path(path).write_text("\n".join(lines) + "\n")
