"""Command-line entry point.

Subcommands: screen, mode, crosstalk, capacity, fig4, fig5, validate.
Exit codes: 0 success, 2 validation failure, 3 configuration error,
4 numerical-convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .channel import QuadratureError
from .experiments import (
    ConfigError,
    load_config,
    resolve_config,
    run_experiment,
)
from .validation import VALIDATION_DEFAULTS, run_validation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4


def _parse_strengths(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 4 or parts[3] not in ("log", "lin"):
        raise ConfigError(
            f"--strengths must look like lo:hi:count:log|lin, got {text!r}"
        )
    return {
        "lo": float(parts[0]),
        "hi": float(parts[1]),
        "count": int(parts[2]),
        "log": parts[3] == "log",
    }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="oamturb",
        description="Vortex-mode crosstalk and channel capacity under "
        "Kolmogorov thin-phase turbulence",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("screen", help="generate one phase screen (PNG + CSV)")
    s.add_argument("--d-over-r0", type=float, required=True)
    s.add_argument("--resolution", type=int, default=512)
    s.add_argument("--seed", type=int, default=12345)
    s.add_argument("--subharmonics", type=int, default=3)
    s.add_argument("--out", required=True)

    m = sub.add_parser("mode", help="render a mode (intensity/phase PNG, CSV)")
    m.add_argument("--kind", choices=["oam", "ang"], required=True)
    m.add_argument("--index", type=int, required=True)
    m.add_argument("--dimension", type=int, default=11,
                   help="superposition dimension for ANG modes")
    m.add_argument("--resolution", type=int, default=512)
    m.add_argument("--csv", action="store_true", help="also write the samples CSV")
    m.add_argument("--out", required=True)

    c = sub.add_parser("crosstalk", help="compute one crosstalk matrix")
    c.add_argument("--method", choices=["analytic", "mc"], default="analytic")
    c.add_argument("--n", type=int, default=11)
    c.add_argument("--spacing", type=int, default=1)
    c.add_argument("--d-over-r0", type=float, required=True)
    c.add_argument("--screens", type=int, default=200)
    c.add_argument("--seed", type=int, default=12345)
    c.add_argument("--sorter", default="ideal")
    c.add_argument("--normalize", choices=["postselect", "erasure"],
                   default="postselect")
    c.add_argument("--resolution", type=int, default=512)
    c.add_argument("--subharmonics", type=int, default=3)
    c.add_argument("--out", required=True)

    k = sub.add_parser("capacity", help="capacity curve for one mode set")
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--spacing", type=int, default=1)
    k.add_argument("--method", choices=["analytic", "mc"], default="analytic")
    k.add_argument("--sorter", default="sinc")
    k.add_argument("--normalize", choices=["postselect", "erasure"],
                   default="postselect")
    k.add_argument("--strengths", default="0.1:30:30:log")
    k.add_argument("--screens", type=int, default=20)
    k.add_argument("--seed", type=int, default=12345)
    k.add_argument("--workers", type=int, default=1)
    k.add_argument("--out", required=True)

    for name, help_text in (
        ("fig4", "capacity vs turbulence for N in {3,5,7,9,11}"),
        ("fig5", "mode-spacing study at N=3 (MS in {1,2,4})"),
    ):
        f = sub.add_parser(name, help=help_text)
        f.add_argument("--config", help="JSON experiment config file")
        f.add_argument("--method", choices=["analytic", "mc"])
        f.add_argument("--sorter")
        f.add_argument("--normalize", choices=["postselect", "erasure"])
        f.add_argument("--strengths")
        f.add_argument("--screens", type=int)
        f.add_argument("--subharmonics", type=int)
        f.add_argument("--workers", type=int)
        f.add_argument("--seed", type=int)
        f.add_argument("--out", required=True)

    v = sub.add_parser("validate", help="run the statistical self-check suite")
    v.add_argument("--screens", type=int, default=VALIDATION_DEFAULTS["screens"])
    v.add_argument("--d-over-r0", type=float,
                   default=VALIDATION_DEFAULTS["d_over_r0"])
    v.add_argument("--resolution", type=int,
                   default=VALIDATION_DEFAULTS["resolution"])
    v.add_argument("--subharmonics", type=int,
                   default=VALIDATION_DEFAULTS["subharmonics"])
    v.add_argument("--seed", type=int, default=12345)
    v.add_argument("--out", required=True)
    return p


def _fig_config(args, experiment: str) -> dict:
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if raw.get("experiment", experiment) != experiment:
            raise ConfigError(
                f"config file is for {raw.get('experiment')!r}, expected {experiment!r}"
            )
        raw["experiment"] = experiment
    else:
        raw = {"experiment": experiment}
    params = raw.setdefault("parameters", {})
    if args.method:
        params["method"] = args.method
    if args.sorter:
        params["sorter"] = args.sorter
    if args.normalize:
        params["normalization"] = args.normalize
    if args.strengths:
        params["strengths"] = _parse_strengths(args.strengths)
    if args.screens is not None:
        params["screens"] = args.screens
    if args.subharmonics is not None:
        params["subharmonics"] = args.subharmonics
    if args.workers is not None:
        params["workers"] = args.workers
    if args.seed is not None:
        raw["seed"] = args.seed
    raw["output_dir"] = args.out
    return resolve_config(raw)


def _dispatch(args) -> int:
    if args.command == "screen":
        config = resolve_config(
            {
                "experiment": "screen_gallery",
                "seed": args.seed,
                "output_dir": args.out,
                "parameters": {
                    "strengths": [args.d_over_r0],
                    "subharmonics": args.subharmonics,
                    "grid": {"resolution": args.resolution},
                },
            }
        )
        run_experiment(config)
        return EXIT_OK

    if args.command == "mode":
        params = {
            "oam": [args.index] if args.kind == "oam" else [],
            "ang": [args.index] if args.kind == "ang" else [],
            "ang_dimension": args.dimension,
            "write_csv": args.csv,
            "grid": {"resolution": args.resolution},
        }
        config = resolve_config(
            {
                "experiment": "mode_gallery",
                "output_dir": args.out,
                "parameters": params,
            }
        )
        run_experiment(config)
        return EXIT_OK

    if args.command == "crosstalk":
        config = resolve_config(
            {
                "experiment": "crosstalk_table",
                "seed": args.seed,
                "output_dir": args.out,
                "parameters": {
                    "dimension": args.n,
                    "spacing": args.spacing,
                    "strength": args.d_over_r0,
                    "method": args.method,
                    "screens": args.screens,
                    "sorter": args.sorter,
                    "normalization": args.normalize,
                    "subharmonics": args.subharmonics,
                    "grid": {"resolution": args.resolution},
                },
            }
        )
        run_experiment(config)
        return EXIT_OK

    if args.command == "capacity":
        config = resolve_config(
            {
                "experiment": "fig4_sweep",
                "seed": args.seed,
                "output_dir": args.out,
                "parameters": {
                    "dimensions": [args.n],
                    "spacing": args.spacing,
                    "method": args.method,
                    "sorter": args.sorter,
                    "normalization": args.normalize,
                    "strengths": _parse_strengths(args.strengths),
                    "screens": args.screens,
                    "workers": args.workers,
                },
            }
        )
        run_experiment(config)
        return EXIT_OK

    if args.command in ("fig4", "fig5"):
        experiment = "fig4_sweep" if args.command == "fig4" else "fig5_spacing"
        config = _fig_config(args, experiment)
        run_experiment(config)
        return EXIT_OK

    if args.command == "validate":
        params = {
            "screens": args.screens,
            "d_over_r0": args.d_over_r0,
            "resolution": args.resolution,
            "subharmonics": args.subharmonics,
        }
        report, ok = run_validation(params, args.seed, args.out)
        for name, check in report["checks"].items():
            print(f"{name}: {'pass' if check['pass'] else 'FAIL'}")
        return EXIT_OK if ok else EXIT_VALIDATION

    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical convergence failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
