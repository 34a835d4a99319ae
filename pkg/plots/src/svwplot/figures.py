"""Standard figure set rendered from svw output directories.

This package consumes only the public file contracts (series CSVs,
meta.json, summary.json, blowup.json, converge.json); it performs no
computation beyond plotting transforms and never modifies its inputs.
"""

from __future__ import annotations

import csv
import glob
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("EnergyBalance", "BlowupSweep", "OleinikFit", "ThetaScaling",
                "DefectDecay")

SERIES_COLUMNS = ("path", "t", "E", "D", "M", "residual", "maxR", "minR",
                  "maxS", "minS", "supNegR", "supNegS", "theta", "lip_u")


class SchemaError(Exception):
    """Input files missing, malformed, or not matching the run schemas."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    in_dir: str
    out_path: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {FIGURE_KINDS}")


# -- input loading --------------------------------------------------------------


def load_meta(in_dir) -> dict:
    path = Path(in_dir) / "meta.json"
    if not path.exists():
        raise SchemaError(f"missing meta.json in {in_dir}")
    meta = json.loads(path.read_text())
    for key in ("config_hash", "seed"):
        if key not in meta:
            raise SchemaError(f"meta.json lacks required key {key!r}")
    return meta


def load_series(path) -> dict:
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SERIES_COLUMNS:
            raise SchemaError(f"{path}: series columns {reader.fieldnames} do not "
                              f"match the schema {SERIES_COLUMNS}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: empty series")
    return {name: np.array([float(r[name]) for r in rows])
            for name in SERIES_COLUMNS}


def load_all_series(in_dir) -> list:
    paths = sorted(glob.glob(os.path.join(str(in_dir), "series_path*.csv")))
    if not paths:
        raise SchemaError(f"no series_path*.csv files in {in_dir}")
    return [load_series(p) for p in paths]


def load_table(in_dir, name, kind) -> dict:
    path = Path(in_dir) / name
    if not path.exists():
        raise SchemaError(f"missing {name} in {in_dir}")
    table = json.loads(path.read_text())
    if table.get("kind") != kind or "rows" not in table:
        raise SchemaError(f"{name} is not a {kind!r} table")
    return table


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _stamp(fig, meta):
    fig.text(0.99, 0.01, f"config {meta['config_hash']}  seed {meta['seed']}",
             ha="right", va="bottom", fontsize=6, color="0.4")


def _finish(fig, spec, meta, extra=None):
    _stamp(fig, meta)
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    record = {"kind": spec.kind, "out_path": str(spec.out_path),
              "config_hash": meta["config_hash"], "seed": meta["seed"]}
    if extra:
        record.update(extra)
    return record


# -- figure kinds -----------------------------------------------------------------


def energy_balance(spec: FigureSpec, meta: dict) -> dict:
    series = load_all_series(spec.in_dir)[0]
    if "q_l1_2" not in meta or "E0" not in meta:
        raise SchemaError("meta.json lacks the energy keys q_l1_2/E0")
    t = series["t"]
    expected = meta["E0"] + meta["q_l1_2"] * t
    balance = series["E"] - series["M"] + series["D"]
    band = float(np.max(np.abs(series["residual"])))

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, series["E"], label="E(t)", lw=1.2)
    ax.plot(t, expected, "--", label="E(0) + 2||q|| t", lw=1.0)
    ax.plot(t, balance, label="E - M + D", lw=1.0)
    ax.fill_between(t, expected - band, expected + band, alpha=0.2,
                    label=f"residual band (max {band:.2e})")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.set_title("Pathwise energy balance")
    return _finish(fig, spec, meta, {"max_abs_residual": band})


def blowup_sweep(spec: FigureSpec, meta: dict) -> dict:
    table = load_table(spec.in_dir, "blowup.json", "blowup")
    rows = table["rows"]
    eps = np.array([row["eps"] for row in rows])
    frac = np.array([row["fraction"] for row in rows])
    whiskers = []
    for row in rows:
        lo, hi = wilson_interval(int(row["blowup_count"]), int(row["paths"]))
        whiskers.append((lo, hi))
    lo = np.array([w[0] for w in whiskers])
    hi = np.array([w[1] for w in whiskers])

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.errorbar(eps, frac, yerr=[frac - lo, hi - frac], fmt="o", capsize=4,
                label="crossing fraction (95% Wilson)")
    ref = np.linspace(min(eps.min(), 0.05), eps.max(), 100)
    ax.plot(ref, 1.0 - ref, "--", color="0.5", label="1 - eps reference")
    ax.set_xlabel("eps")
    ax.set_ylabel("fraction with blow-up before eps^gamma")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    ax.set_title("Blow-up sweep")
    return _finish(fig, spec, meta, {
        "whiskers": {f"{e:g}": [l, h] for e, l, h in zip(eps, lo, hi)}})


def oleinik_fit(spec: FigureSpec, meta: dict) -> dict:
    all_series = load_all_series(spec.in_dir)
    t = all_series[0]["t"]
    neg_r = np.mean([s["supNegR"] for s in all_series], axis=0)
    neg_s = np.mean([s["supNegS"] for s in all_series], axis=0)
    mask = t >= 0.05
    if mask.sum() < 3:
        raise SchemaError("series too short for the t >= 0.05 fit window")
    A = np.vstack([np.ones(mask.sum()), 1.0 / t[mask]]).T
    fits = {}
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, y, color in (("supNegR", neg_r, "C0"), ("supNegS", neg_s, "C1")):
        coef, *_ = np.linalg.lstsq(A, y[mask], rcond=None)
        resid = float(np.linalg.norm(y[mask] - A @ coef) / np.linalg.norm(y[mask]))
        fits[name] = {"a": float(coef[0]), "b": float(coef[1]), "resid": resid}
        ax.plot(t, y, color=color, lw=1.0, label=f"{name} (ensemble mean)")
        ax.plot(t[mask], coef[0] + coef[1] / t[mask], "--", color=color, lw=1.0,
                label=f"{coef[0]:.2f} + {coef[1]:.2f}/t (resid {resid:.1%})")
    ax.set_xlabel("t")
    ax.set_ylabel("sup of negative part")
    ax.legend(fontsize=8)
    ax.set_title("One-sided decay")
    return _finish(fig, spec, meta, {"fits": fits})


def theta_scaling(spec: FigureSpec, meta: dict) -> dict:
    table = load_table(spec.in_dir, "converge.json", "converge")
    rows = table["rows"]
    eps = np.array([row["eps"] for row in rows])
    sup = np.array([row["sup_theta_mean"] for row in rows])
    se = np.array([row.get("sup_theta_se", 0.0) for row in rows])
    slope = table.get("theta_slope")
    if slope is None:
        raise SchemaError("converge.json lacks theta_slope")

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.errorbar(eps, sup, yerr=se, fmt="o-", capsize=4)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("E[sup_t |correction|]")
    ax.set_title("Correction scaling")
    ax.text(0.05, 0.9, f"log-log slope {slope:.3f}"
            + (f" (se {table.get('theta_slope_se', 0.0):.3f})"),
            transform=ax.transAxes)
    return _finish(fig, spec, meta, {"slope": float(slope)})


def defect_decay(spec: FigureSpec, meta: dict) -> dict:
    table = load_table(spec.in_dir, "converge.json", "converge")
    rows = table["rows"]
    eps = np.array([row["eps"] for row in rows])
    delta = np.array([row["cross_delta"] for row in rows])
    if "cross_delta_check" not in rows[0]:
        raise SchemaError("converge.json rows lack cross_delta_check")
    delta_check = np.array([row["cross_delta_check"] for row in rows])

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(eps, delta, "o-", label="defect (R)")
    ax.plot(eps, delta_check, "s-", label="defect (S)")
    for kappa in table.get("kappa_list", []):
        dk = np.array([row["cross_delta_kappa"][str(kappa)] for row in rows])
        ax.plot(eps, dk, "^--", label=f"truncated, kappa={kappa:g}")
    ax.set_xlabel("eps")
    ax.set_ylabel("cross-resolution defect at T")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    ax.set_title("Defect decay under refinement")
    return _finish(fig, spec, meta, {"delta": delta.tolist()})


_RENDERERS = {
    "EnergyBalance": energy_balance,
    "BlowupSweep": blowup_sweep,
    "OleinikFit": oleinik_fit,
    "ThetaScaling": theta_scaling,
    "DefectDecay": defect_decay,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns a record with the embedded metadata."""
    if not Path(spec.in_dir).is_dir():
        raise SchemaError(f"input directory {spec.in_dir} does not exist")
    meta = load_meta(spec.in_dir)
    out_parent = Path(spec.out_path).parent
    if str(out_parent):
        out_parent.mkdir(parents=True, exist_ok=True)
    return _RENDERERS[spec.kind](spec, meta)
