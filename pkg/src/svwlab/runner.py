"""Single-run and ensemble drivers with CSV/JSON persistence.

Per-path time series go to `series_pathNNNN.csv` with the fixed column set
path,t,E,D,M,residual,maxR,minR,maxS,minS,supNegR,supNegS,theta,lip_u; run
metadata goes to `meta.json` and ensemble aggregates to `summary.json`.
Every output directory carries the config hash and master seed so figures
can embed them.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig
from .diagnostics import (EnergyLedger, Snapshot, energy, lp_weighted,
                          make_ledger, oleinik_stats, update_ledger)
from .dynamics import (CharTracer, State, advance_tracer, correction_term,
                       reconstruct_u, step)
from .rng import path_stream

CSV_COLUMNS = ("path", "t", "E", "D", "M", "residual", "maxR", "minR",
               "maxS", "minS", "supNegR", "supNegS", "theta", "lip_u")

SCHEMA_VERSION = "svw-series-v1"


@dataclass
class RunOptions:
    record_series: bool = True
    track_ledger: bool = True
    collect_snapshots: bool = False
    lp_alpha: Optional[float] = None
    track_theta: bool = True
    tracer_x: Optional[float] = None
    tracer_sign: int = 1
    # pooled windowed moments over the ensemble, evaluated after the join
    moment_windows: tuple = ()
    moment_kappas: tuple = (0.0, 1.0, 4.0)


@dataclass
class RunResult:
    path_index: int
    rows: list
    ledger: Optional[EnergyLedger]
    final_state: State
    blowup_time: Optional[float]
    sup_theta: float
    lp_integral: Optional[float]
    snapshots: list = field(default_factory=list)
    tracer: Optional[CharTracer] = None

    def terminal_energy(self) -> float:
        return energy(self.final_state)


def _series_row(path_index: int, state: State, ledger: Optional[EnergyLedger],
                speed) -> list:
    sup_neg_r, sup_neg_s = oleinik_stats(state)
    theta = correction_term(state)
    u = reconstruct_u(state, speed)
    u_x = (0.5 * (state.S - state.R) - theta) / speed.value(u)
    e = energy(state)
    if ledger is not None:
        d, m, res = ledger.D, ledger.M, ledger.residual
    else:
        d = m = res = 0.0
    return [path_index, state.t, e, d, m, res,
            float(np.max(state.R)), float(np.min(state.R)),
            float(np.max(state.S)), float(np.min(state.S)),
            sup_neg_r, sup_neg_s, theta, float(np.max(np.abs(u_x)))]


def run_single(config: RunConfig, path_index: int = 0,
               options: Optional[RunOptions] = None) -> RunResult:
    """Evolve one path from t=0 to t_end and gather its diagnostics."""
    options = options or RunOptions()
    grid = config.build_grid()
    speed = config.build_speed()
    mode = config.build_mode()
    noise = config.build_noise(grid)
    state = config.build_initial_state(grid, speed, mode)
    dt = config.time_step()
    n_steps = config.n_steps()
    stride = config.output_stride()
    rng = path_stream(config.seed, path_index)

    ledger = make_ledger(state, noise, mode) if options.track_ledger else None
    tracer = None
    if options.tracer_x is not None:
        tracer = CharTracer(sign=options.tracer_sign, x=float(options.tracer_x))
        tracer.record(state, speed)

    rows = []
    snapshots = []
    sup_theta = abs(correction_term(state)) if options.track_theta else 0.0
    lp_int = 0.0 if options.lp_alpha is not None else None
    blowup_time = None

    if options.record_series:
        rows.append(_series_row(path_index, state, ledger, speed))
    if options.collect_snapshots:
        snapshots.append(Snapshot(path_index, state.t, state.R.copy(), state.S.copy()))

    for k in range(1, n_steps + 1):
        if options.lp_alpha is not None:
            lp_int += dt * lp_weighted(state, speed, options.lp_alpha)
        new, increments = step(state, speed, noise, dt, mode, rng)
        if ledger is not None:
            update_ledger(ledger, state, new, speed, noise, increments, dt, mode)
        if tracer is not None:
            advance_tracer(tracer, state, new, speed, dt)
        state = new
        if state.exploded:
            blowup_time = state.t
            break
        if options.track_theta:
            sup_theta = max(sup_theta, abs(correction_term(state)))
        at_stride = (k % stride == 0) or (k == n_steps)
        if at_stride:
            if ledger is not None:
                ledger.snapshot(state.t)
            if options.record_series:
                rows.append(_series_row(path_index, state, ledger, speed))
            if options.collect_snapshots:
                snapshots.append(Snapshot(path_index, state.t,
                                          state.R.copy(), state.S.copy()))
    return RunResult(path_index=path_index, rows=rows, ledger=ledger,
                     final_state=state, blowup_time=blowup_time,
                     sup_theta=sup_theta, lp_integral=lp_int,
                     snapshots=snapshots, tracer=tracer)


# -- persistence --------------------------------------------------------------


def _format_row(row) -> str:
    out = [str(row[0])]
    out += [f"{float(v):.17g}" for v in row[1:]]
    return ",".join(out)


def write_series_csv(rows, out_path):
    with open(out_path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(_format_row(row) + "\n")


def write_meta(config: RunConfig, out_dir, extra: Optional[dict] = None):
    grid = config.build_grid()
    noise = config.build_noise(grid)
    mode = config.build_mode()
    meta = {
        "schema": SCHEMA_VERSION,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "config": json.loads(config.canonical_json()),
        "dt": config.time_step(),
        "n_steps": config.n_steps(),
        "q_l1_2": 2.0 * noise.q_l1(smooth=mode.regularized),
    }
    if extra:
        meta.update(extra)
    path = Path(out_dir) / "meta.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return meta


def run_and_write_single(config: RunConfig, out_dir,
                         options: Optional[RunOptions] = None) -> RunResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_single(config, 0, options)
    speed = config.build_speed()
    grid = config.build_grid()
    mode = config.build_mode()
    state0 = config.build_initial_state(grid, speed, mode)
    write_meta(config, out_dir, extra={
        "kind": "single",
        "E0": energy(state0),
        "blowup_time": result.blowup_time,
    })
    write_series_csv(result.rows, out_dir / "series_path0000.csv")
    return result


# -- ensembles ----------------------------------------------------------------


@dataclass
class EnsembleSummary:
    config_hash: str
    seed: int
    paths: int
    per_path: list
    aggregate: dict

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "config_hash": self.config_hash,
                "seed": self.seed, "paths": self.paths,
                "per_path": self.per_path, "aggregate": self.aggregate}


def _run_path_worker(args):
    raw, path_index, options = args
    config = RunConfig.from_dict(raw)
    result = run_single(config, path_index, options)
    record = {
        "path": path_index,
        "E_T": result.terminal_energy(),
        "max_abs_residual": result.ledger.max_abs_residual() if result.ledger else 0.0,
        "blowup_time": result.blowup_time,
        "sup_theta": result.sup_theta,
        "lp_integral": result.lp_integral,
    }
    return record, result.rows, result.snapshots


def _quantiles(values) -> dict:
    if not values:
        return {}
    arr = np.asarray(values, dtype=float)
    qs = np.quantile(arr, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"q05": qs[0], "q25": qs[1], "q50": qs[2], "q75": qs[3], "q95": qs[4]}


def run_ensemble(config: RunConfig, out_dir=None,
                 options: Optional[RunOptions] = None) -> EnsembleSummary:
    """Run all paths on private streams; the summary is independent of the
    worker count because aggregation happens over path-sorted records."""
    options = options or RunOptions()
    if options.moment_windows and not options.collect_snapshots:
        options = RunOptions(**{**options.__dict__, "collect_snapshots": True})
    jobs = [(json.loads(config.canonical_json()), p, options)
            for p in range(config.paths)]
    if config.workers > 1 and config.paths > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_path_worker, jobs, chunksize=1))
    else:
        outcomes = [_run_path_worker(job) for job in jobs]

    records = [rec for rec, _, _ in outcomes]
    records.sort(key=lambda r: r["path"])
    terminal = [r["E_T"] for r in records]
    residuals = [r["max_abs_residual"] for r in records]
    blowups = [r["blowup_time"] for r in records if r["blowup_time"] is not None]
    grid = config.build_grid()
    noise = config.build_noise(grid)
    mode = config.build_mode()
    speed = config.build_speed()
    state0 = config.build_initial_state(grid, speed, mode)
    e0 = energy(state0)
    q_l1_2 = 2.0 * noise.q_l1(smooth=mode.regularized)
    n = len(terminal)
    aggregate = {
        "E0": e0,
        "q_l1_2": q_l1_2,
        "expected_E_T": e0 + q_l1_2 * config.t_end,
        "mean_E_T": float(np.mean(terminal)),
        "var_E_T": float(np.var(terminal, ddof=1)) if n > 1 else 0.0,
        "se_E_T": float(np.std(terminal, ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        "quantiles_E_T": _quantiles(terminal),
        "max_abs_residual": float(np.max(residuals)) if residuals else 0.0,
        "blowup_count": len(blowups),
        "blowup_fraction": len(blowups) / n,
        "mean_blowup_time": float(np.mean(blowups)) if blowups else None,
    }
    summary = EnsembleSummary(config_hash=config.config_hash(), seed=config.seed,
                              paths=config.paths, per_path=records,
                              aggregate=aggregate)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_meta(config, out, extra={"kind": "ensemble", "E0": e0})
        if options.record_series:
            for rec, rows, _ in sorted(outcomes, key=lambda o: o[0]["path"]):
                write_series_csv(rows, out / f"series_path{rec['path']:04d}.csv")
        with open(out / "summary.json", "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        if options.moment_windows:
            from .diagnostics import window_moments
            snapshots = [snap for _, _, snaps in outcomes for snap in snaps]
            moments = [window_moments(snapshots, win, grid,
                                      kappa_list=options.moment_kappas).as_record()
                       for win in options.moment_windows]
            with open(out / "window_moments.json", "w") as fh:
                json.dump({"config_hash": config.config_hash(),
                           "seed": config.seed, "records": moments},
                          fh, indent=2, sort_keys=True)
    return summary
