"""Command-line front end: ``rydsense run | list-scenarios | show-config``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import ConfigError, DegenerateSteadyStateError, SolverError
from .scenarios import PRESETS, SCENARIOS, csv_text, load_config, resolve_config, run_scenario, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("RYDSENSE_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"RYDSENSE_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("RYDSENSE_THREADS must be >= 1")
    return n


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydsense", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rydsense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a JSON config")
    run.add_argument("--config", required=True, help="scenario JSON document")
    run.add_argument("--out", help="primary CSV path; prints to stdout when omitted")
    run.add_argument("--threads", type=_positive_int, default=None,
                     help="worker threads (default: $RYDSENSE_THREADS or 1)")
    run.add_argument("--doppler-free", action="store_true", default=None,
                     help="single v=0 velocity class and natural decays only")

    sub.add_parser("list-scenarios", help="list scenario names")

    show = sub.add_parser("show-config", help="print the resolved default config of a scenario")
    show.add_argument("--scenario", required=True)
    return parser


def _run(args) -> int:
    cfg = load_config(args.config, doppler_free=args.doppler_free)
    result = run_scenario(cfg, threads=_threads(args.threads))
    if args.out:
        for path in write_outputs(result, args.out):
            print(path, file=sys.stderr)
    else:
        sys.stdout.write(csv_text(result.primary, result.scenario, result.config_hash))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name in SCENARIOS:
                print(f"{name}\t{PRESETS[name]['description']}")
            return EXIT_OK
        if args.command == "show-config":
            print(json.dumps(resolve_config(scenario=args.scenario), indent=2, sort_keys=True))
            return EXIT_OK
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, DegenerateSteadyStateError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
