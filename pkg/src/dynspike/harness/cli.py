"""Command-line entry point.

Subcommands drive encodings, spectra, training runs, sweeps, RL, binding,
theory tables, metric reports, and fits. Exit codes: 0 ok, 1 config
error, 2 runtime failure, 3 acceptance check failed (with --check).
"""

from __future__ import annotations

import argparse
import sys

from .. import backends
from .config import ConfigError, load_config
from . import runs

_CHECKABLE = {"sweep", "binding", "theory", "ais", "rl", "attractors"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynspike",
        description="Dynamical-encoding SNN workbench",
    )
    parser.add_argument("--version", action="store_true", help="print version and exit")
    sub = parser.add_subparsers(dest="command")
    commands = {
        "encode": "encode a dataset and write the tensor cache",
        "lyapunov": "Lyapunov spectra for systems / delta grid",
        "ais": "active information storage per system / delta",
        "train": "train a single model and save a checkpoint",
        "sweep": "delta sweep: dynamics probes + SNN/MLP training",
        "attractors": "attractor comparison over (t_max, N) grid",
        "rl": "cart-pole REINFORCE across encoding modes",
        "binding": "feature-binding task across encoding modes",
        "theory": "effective-variance / firing-rate theory table",
        "report": "activity metrics report for a checkpoint",
        "fit": "fit sigmoid/power-law/pearson to a CSV",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name in _CHECKABLE:
            p.add_argument(
                "--check", action="store_true",
                help="validate acceptance-style expectations (exit 3 on failure)",
            )
    return parser


def _dispatch(args) -> int:
    cmd = args.command
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = load_config(cmd, args.config, overrides)
    if args.seed is not None and "dataset" in cfg:
        cfg["dataset"]["seed"] = args.seed
    check = getattr(args, "check", False)
    if cmd == "sweep":
        rows = runs.run_sweep(cfg, args.out, jobs=args.jobs, check=check)
        _print_rows(rows)
    elif cmd == "attractors":
        rows = runs.run_attractors(cfg, args.out, jobs=args.jobs, check=check)
        _print_rows(rows)
    elif cmd == "train":
        record = runs.run_train(cfg, args.out)
        print(f"accuracy {record['accuracy']:.4f} -> {record['checkpoint']}")
    elif cmd == "rl":
        rows = runs.run_rl(cfg, args.out, jobs=args.jobs, check=check)
        _print_rows(rows)
    elif cmd == "binding":
        rows = runs.run_binding(cfg, args.out, jobs=args.jobs, check=check)
        _print_rows(rows)
    elif cmd == "theory":
        rows = runs.run_theory(cfg, args.out, check=check)
        _print_rows(rows[: min(len(rows), 12)])
    elif cmd == "report":
        payload = runs.run_report(cfg, args.out)
        print(f"probe accuracy {payload['probe_accuracy']:.4f}")
        print(f"firing rates {['%.3f' % r for r in payload['firing_rate']]}")
    elif cmd == "lyapunov":
        rows = runs.run_lyapunov(cfg, args.out)
        _print_rows(rows)
    elif cmd == "ais":
        rows = runs.run_ais(cfg, args.out, check=check)
        _print_rows(rows)
    elif cmd == "encode":
        info = runs.run_encode(cfg, args.out)
        print(f"wrote {info['cache']} shape {tuple(info['shape'])}")
    elif cmd == "fit":
        payload = runs.run_fit(cfg, args.out)
        print(payload)
    else:
        raise ConfigError(f"unknown command {cmd!r}")
    return 0


def _print_rows(rows):
    for row in rows:
        print("  ".join(f"{k}={_short(v)}" for k, v in row.items()))


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        from .. import __version__

        print(f"dynspike {__version__} (backend: {backends.backend_name()})")
        return 0
    if not args.command:
        parser.print_help()
        return 1
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except runs.CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # runtime failure contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
