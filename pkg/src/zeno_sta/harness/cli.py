"""Command line: ``zeno-sta {strobe,sme,cap,cd,identities,sweep} --config FILE``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..errors import ConfigInvalid, ZenoError
from .config import PROTOCOLS, SEED_MAX, load_config
from .export import export
from .protocols import run
from .sweep import sweep

EXIT_CONFIG = 2
EXIT_PROTOCOL = 3


def _threads_default() -> int:
    raw = os.getenv("ZENO_STA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zeno-sta", description="Zeno dragging scenarios and sweeps")
    sub = p.add_subparsers(dest="command", required=True)
    for name in PROTOCOLS + ("sweep",):
        sp = sub.add_parser(name, help=f"run the {name} scenario" if name != "sweep" else "parameter sweep")
        sp.add_argument("--config", required=True, help="JSON scenario file (or inline JSON object)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output file for result rows")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--threads", type=int, default=_threads_default(),
                        help="worker threads (default: env ZENO_STA_THREADS or 1)")
        if name == "sweep":
            sp.add_argument("--axis", choices=("dt", "kappa", "M"), default=None)
            sp.add_argument("--values", type=float, nargs="+", default=None)
            sp.add_argument("--metric", default=None)
    return p


def _error(kind: str, message: str, **extra) -> str:
    return json.dumps({"error": kind, "message": message, **extra}, sort_keys=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command != "sweep" and cfg.protocol != args.command:
            raise ConfigInvalid("protocol", f"config protocol {cfg.protocol!r} does not match "
                                            f"subcommand {args.command!r}")
        if args.seed is not None:
            if not 0 <= args.seed <= SEED_MAX:
                raise ConfigInvalid("seed", "seed must be an unsigned 64-bit integer")
            cfg = cfg.replace(seed=args.seed)
        if args.threads < 1:
            raise ConfigInvalid("threads", "--threads must be >= 1")
        fmt = args.format or cfg.out_format
        out = args.out or cfg.out_path

        if args.command == "sweep":
            res = sweep(cfg, args.axis, args.values, args.metric, threads=args.threads)
            rows, fields, summary = res.rows, ["axis", "value", "metric", "metric_value"], res.summary()
        else:
            res = run(cfg, threads=args.threads)
            rows, fields, summary = res.rows, res.fields, res.summary
        if out:
            export(rows, fmt, out, fields)
            summary = {**summary, "output": str(Path(out))}
        print(json.dumps(summary, sort_keys=True))
        return 0
    except ConfigInvalid as exc:
        print(_error("ConfigInvalid", str(exc), field=exc.field), file=sys.stderr)
        return EXIT_CONFIG
    except ZenoError as exc:
        print(_error(type(exc).__name__, str(exc)), file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(_error("IoError", str(exc)), file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
