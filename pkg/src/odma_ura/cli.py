"""Command-line entry point: ``python -m odma_ura run-pupe|run-ser|run-factor``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, SystemConfig, load_config
from .harness import AXES, RUNNERS, ExperimentSpec, parse_sweep

COMMANDS = {"run-pupe": "pupe", "run-ser": "ser", "run-factor": "factor"}
DEFAULT_SWEEP = {"pupe": "ebn0=-6", "ser": "snr=0", "factor": "snr=inf"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odma_ura", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, mode in COMMANDS.items():
        p = sub.add_parser(name, help=f"{mode} experiment; sweep axes: {', '.join(AXES[mode])}")
        p.add_argument("--config", help="flat JSON config (defaults if omitted)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--sweep", default=DEFAULT_SWEEP[mode], help="axis=v1,v2,...")
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--out", required=True, help="CSV output path")
        p.add_argument("--workers", type=int, default=1)
        if mode in ("ser", "factor"):
            p.add_argument("--users", type=int, default=25, help="active users per scene")
            p.add_argument("--snr", type=float, default=0.0 if mode == "ser" else float("inf"))
        if mode == "factor":
            p.add_argument("--distinct-pilots", action="store_true", help="no pilot collisions")
        if mode == "pupe":
            p.add_argument("--rounds-out", help="per-round SIC diagnostics CSV")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    mode = COMMANDS[args.command]
    try:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        base = load_config(args.config) if args.config else SystemConfig().validate()
        axis, values = parse_sweep(args.sweep)
        spec = ExperimentSpec(
            mode=mode,
            axis=axis,
            values=values,
            trials=args.trials,
            base=base,
            seed=args.seed,
            workers=max(1, args.workers),
            detector_users=getattr(args, "users", 25),
            snr_db=getattr(args, "snr", 0.0),
            distinct_pilots=getattr(args, "distinct_pilots", False),
        )
        if mode == "pupe":
            RUNNERS[mode](spec, args.out, rounds_out=args.rounds_out)
        else:
            RUNNERS[mode](spec, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0
