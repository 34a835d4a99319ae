"""Command-line interface.

    svw run      --config cfg.json --out DIR [--seed N]
    svw ensemble --config cfg.json --paths N --out DIR [--seed N] [--workers W]
    svw blowup   --config cfg.json --eps 0.4,0.2,0.1 --alpha 1.5 --nu 0.25
                 --gamma 0.4 --ustar 0.0 --out DIR
    svw converge --config cfg.json --eps 0.2,0.1,0.05,0.025 --out DIR

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig
from .errors import ConfigError, SvwError


def _parse_eps(text: str):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--eps expects comma-separated floats, got {text!r}")
    if not values:
        raise ConfigError("--eps list is empty")
    return values


def _load_config(args) -> RunConfig:
    config = RunConfig.from_json(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["noise"] = {"seed": args.seed}
    if getattr(args, "paths", None) is not None:
        overrides["paths"] = args.paths
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    return config.updated(**overrides) if overrides else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svw",
                                     description="stochastic variational wave lab")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--workers", type=int, default=None)

    p_run = sub.add_parser("run", help="single path, full time series")
    common(p_run)

    p_ens = sub.add_parser("ensemble", help="independent paths with summary")
    common(p_ens)
    p_ens.add_argument("--paths", type=int, default=None)

    p_blow = sub.add_parser("blowup", help="steep-data blow-up sweep")
    common(p_blow)
    p_blow.add_argument("--paths", type=int, default=None)
    p_blow.add_argument("--eps", required=True)
    p_blow.add_argument("--alpha", type=float, default=1.5)
    p_blow.add_argument("--nu", type=float, default=0.25)
    p_blow.add_argument("--gamma", type=float, default=0.4)
    p_blow.add_argument("--ustar", type=float, default=0.0)
    p_blow.add_argument("--maxn", type=int, default=2048,
                        help="grid refinement cap for steep data")

    p_conv = sub.add_parser("converge", help="mollifier width convergence study")
    common(p_conv)
    p_conv.add_argument("--eps", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "run":
            from .runner import run_and_write_single
            result = run_and_write_single(config, args.out)
            blow = (f", blow-up at t={result.blowup_time:.6g}"
                    if result.blowup_time is not None else "")
            print(f"run complete: {len(result.rows)} rows -> {args.out}{blow}")
        elif args.command == "ensemble":
            from .runner import run_ensemble
            summary = run_ensemble(config, args.out)
            agg = summary.aggregate
            print(f"ensemble complete: {summary.paths} paths, "
                  f"mean E(T)={agg['mean_E_T']:.6g} "
                  f"(expected {agg['expected_E_T']:.6g}) -> {args.out}")
        elif args.command == "blowup":
            from .presets import preset_blowup
            table = preset_blowup(config, _parse_eps(args.eps), args.alpha,
                                  args.nu, args.gamma, args.ustar,
                                  paths=args.paths, max_n=args.maxn,
                                  out_dir=args.out)
            for row in table["rows"]:
                print(f"eps={row['eps']:g}: fraction={row['fraction']:.3f} "
                      f"[{row['wilson_low']:.3f}, {row['wilson_high']:.3f}]")
        elif args.command == "converge":
            from .presets import preset_convergence
            table = preset_convergence(config, _parse_eps(args.eps),
                                       out_dir=args.out)
            print(f"theta slope: {table['theta_slope']:.3f} "
                  f"(se {table['theta_slope_se']:.3f})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SvwError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
