"""Run configuration: strict JSON ingestion and object construction.

Unknown keys are hard errors; silent typos in experiment configs are the
main reproducibility hazard.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
import numpy as np

from .dynamics import State, StepMode, init_state, state_from_invariants
from .errors import ConfigError
from .grid import Grid
from .noise import NoiseModel, build_modes
from .profiles import unit_bump
from .speed import WaveSpeed, constant_speed, table_speed, tanh_speed

_SECTIONS = {
    "grid": {"n"},
    "model": {"kind", "c_base", "c_amp", "table_path"},
    "noise": {"pairs", "amplitude", "decay", "seed", "epsilon"},
    "run": {"t_end", "dt", "cfl", "mode", "epsilon", "explosion_threshold",
            "output_stride"},
    "init": {"kind", "u0", "v0", "u_base", "u_amp", "u_mode", "u_phase",
             "v_base", "v_amp", "v_mode", "v_phase", "u_star", "amp", "width",
             "center", "r_peak", "zero_mean", "s_base", "path"},
    "scheme": {"interpolation"},
}
_TOP_KEYS = set(_SECTIONS) | {"paths", "workers", "out_dir"}

_DEFAULTS = {
    "grid": {"n": 256},
    "model": {"kind": "tanh", "c_base": 2.0, "c_amp": 1.0, "table_path": None},
    "noise": {"pairs": 8, "amplitude": 0.25, "decay": 3.0, "seed": 12345,
              "epsilon": None},
    "run": {"t_end": 1.0, "dt": None, "cfl": 0.5, "mode": "regularized",
            "epsilon": 0.1, "explosion_threshold": None, "output_stride": None},
    "init": {"kind": "fourier", "u_base": 0.0, "u_amp": 0.1, "u_mode": 1,
             "u_phase": 0.0, "v_base": 0.0, "v_amp": 0.0, "v_mode": 1,
             "v_phase": 0.0},
    "scheme": {"interpolation": "cubic"},
}


def _check_keys(section: str, given: dict):
    allowed = _SECTIONS[section]
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key!r}; allowed: {sorted(allowed)}")


@dataclass
class RunConfig:
    """Validated configuration; `raw` is the canonical merged dict."""

    raw: dict = field(repr=False)

    def __post_init__(self):
        self._validate()

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in data:
            if key not in _TOP_KEYS:
                raise ConfigError(f"unknown top-level key {key!r}; allowed: {sorted(_TOP_KEYS)}")
        merged: dict = {}
        for section, defaults in _DEFAULTS.items():
            given = data.get(section, {})
            if not isinstance(given, dict):
                raise ConfigError(f"section {section!r} must be an object")
            _check_keys(section, given)
            merged[section] = {**defaults, **given}
        merged["paths"] = int(data.get("paths", 1))
        merged["workers"] = int(data.get("workers", 1))
        merged["out_dir"] = data.get("out_dir")
        return cls(raw=merged)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
        return cls.from_dict(data)

    def updated(self, **overrides) -> "RunConfig":
        """New config with section dictionaries shallow-merged."""
        data = json.loads(self.canonical_json())
        for key, val in overrides.items():
            if isinstance(val, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **val}
            else:
                data[key] = val
        return RunConfig.from_dict(data)

    # -- validation -----------------------------------------------------------

    def _validate(self):
        g, r, nz, init = (self.raw["grid"], self.raw["run"], self.raw["noise"],
                          self.raw["init"])
        if int(g["n"]) < 8 or int(g["n"]) % 2:
            raise ConfigError(f"grid.n must be even and >= 8, got {g['n']}")
        if self.raw["model"]["kind"] not in ("tanh", "constant", "table"):
            raise ConfigError(f"model.kind must be tanh|constant|table, got {self.raw['model']['kind']!r}")
        if nz["pairs"] and float(nz["decay"]) < 3:
            raise ConfigError(f"noise.decay must be >= 3, got {nz['decay']}")
        if float(nz["amplitude"]) < 0:
            raise ConfigError("noise.amplitude must be >= 0")
        if r["mode"] not in ("regularized", "regular"):
            raise ConfigError(f"run.mode must be regularized|regular, got {r['mode']!r}")
        if float(r["t_end"]) <= 0:
            raise ConfigError("run.t_end must be positive")
        if r["dt"] is None and (r["cfl"] is None or not 0 < float(r["cfl"]) <= 0.5):
            raise ConfigError("run.cfl must be in (0, 0.5] when run.dt is unset")
        eps_run, eps_noise = r["epsilon"], nz["epsilon"]
        if eps_noise is not None and abs(float(eps_noise) - float(eps_run)) > 1e-15:
            raise ConfigError("noise.epsilon and run.epsilon disagree; "
                              "the mollifier and cutoff share one width")
        if float(eps_run) <= 0:
            raise ConfigError("run.epsilon must be positive")
        if init["kind"] not in ("constant", "fourier", "bump", "invariants", "file"):
            raise ConfigError(f"unknown init.kind {init['kind']!r}")
        if self.raw["scheme"]["interpolation"] not in ("cubic", "linear"):
            raise ConfigError("scheme.interpolation must be cubic|linear")
        if self.raw["paths"] < 1:
            raise ConfigError("paths must be >= 1")
        # cross-field: dt bound against the speed model
        self.time_step()

    # -- derived accessors ----------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.raw["noise"]["seed"])

    @property
    def paths(self) -> int:
        return int(self.raw["paths"])

    @property
    def workers(self) -> int:
        return int(self.raw["workers"])

    @property
    def epsilon(self) -> float:
        return float(self.raw["run"]["epsilon"])

    @property
    def t_end(self) -> float:
        return float(self.raw["run"]["t_end"])

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def build_grid(self) -> Grid:
        return Grid(int(self.raw["grid"]["n"]))

    def build_speed(self) -> WaveSpeed:
        m = self.raw["model"]
        if m["kind"] == "tanh":
            return tanh_speed(float(m["c_base"]), float(m["c_amp"]))
        if m["kind"] == "constant":
            return constant_speed(float(m["c_base"]))
        if not m["table_path"]:
            raise ConfigError("model.kind=table requires model.table_path")
        with open(m["table_path"]) as fh:
            table = json.load(fh)
        return table_speed(table["u"], table["c"])

    def build_mode(self) -> StepMode:
        if self.raw["run"]["mode"] == "regularized":
            return StepMode(cutoff_eps=self.epsilon, correction=True)
        return StepMode(cutoff_eps=None, correction=True)

    def build_noise(self, grid: Grid) -> NoiseModel:
        nz = self.raw["noise"]
        return build_modes(grid, int(nz["pairs"]), float(nz["amplitude"]),
                           float(nz["decay"]), self.epsilon)

    def time_step(self) -> float:
        """dt honoring run.dt/run.cfl, snapped so N dt = t_end exactly."""
        r = self.raw["run"]
        grid_n = int(self.raw["grid"]["n"])
        dx = 1.0 / grid_n
        speed = self.build_speed()
        bound = dx / (2.0 * speed.c2)
        target = float(r["dt"]) if r["dt"] is not None else float(r["cfl"]) * dx / speed.c2
        if target > bound * (1.0 + 1e-9):
            raise ConfigError(f"run.dt={target:g} exceeds the accuracy bound "
                              f"dx/(2 c2)={bound:g}; refusing to clamp silently")
        if target <= 0:
            raise ConfigError("time step must be positive")
        n_steps = max(1, math.ceil(float(r["t_end"]) / target - 1e-12))
        return float(r["t_end"]) / n_steps

    def n_steps(self) -> int:
        return round(self.t_end / self.time_step())

    def output_stride(self) -> int:
        stride = self.raw["run"]["output_stride"]
        if stride is not None:
            if int(stride) < 1:
                raise ConfigError("run.output_stride must be >= 1")
            return int(stride)
        return max(1, self.n_steps() // 256)

    def build_initial_state(self, grid: Grid, speed: WaveSpeed,
                            mode: StepMode) -> State:
        init = self.raw["init"]
        kind = init["kind"]
        threshold = self.raw["run"]["explosion_threshold"]
        threshold = float(threshold) if threshold is not None else None
        interp = self.raw["scheme"]["interpolation"]
        x = grid.x
        if kind == "constant":
            u0 = np.full(grid.n, float(init.get("u0", 0.0)))
            v0 = np.full(grid.n, float(init.get("v0", 0.0)))
        elif kind == "fourier":
            u0 = (float(init["u_base"]) + float(init["u_amp"])
                  * np.sin(2.0 * np.pi * int(init["u_mode"]) * x + float(init["u_phase"])))
            v0 = (float(init["v_base"]) + float(init["v_amp"])
                  * np.sin(2.0 * np.pi * int(init["v_mode"]) * x + float(init["v_phase"])))
        elif kind == "bump":
            u0 = (float(init.get("u_star", 0.0)) + float(init.get("amp", 1.0))
                  * unit_bump((x - float(init.get("center", 0.5)))
                                / float(init.get("width", 0.25))))
            v0 = np.full(grid.n, float(init.get("v0", 0.0)))
        elif kind == "invariants":
            bump = unit_bump((x - float(init.get("center", 0.5)))
                             / float(init.get("width", 0.25)))
            r_peak = float(init.get("r_peak", 1.0))
            if init.get("zero_mean"):
                # shift so the spatial mean vanishes while the peak stays r_peak
                mean = float(np.mean(bump))
                R0 = r_peak * (bump - mean) / (1.0 - mean)
            else:
                R0 = r_peak * bump
            S0 = np.full(grid.n, float(init.get("s_base", 0.0)))
            return state_from_invariants(R0, S0, float(init.get("u_star", 0.0)),
                                         grid, mode, threshold, interp)
        elif kind == "file":
            if not init.get("path"):
                raise ConfigError("init.kind=file requires init.path")
            with np.load(init["path"]) as data:
                u0 = np.asarray(data["u0"], dtype=float)
                v0 = np.asarray(data["v0"], dtype=float)
        else:  # pragma: no cover - kinds validated earlier
            raise ConfigError(f"unknown init.kind {kind!r}")
        return init_state(u0, v0, speed, mode, grid, threshold, interp)
