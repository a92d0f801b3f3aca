"""Command-line entry point.

``accs <subcommand> --config PATH [--seed U64] [--threads INT] [--out DIR]``

Exit status: 0 on success, 2 on a configuration error, 3 on an I/O or file
format error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, default_config, load_config
from .experiments import run_experiment
from .io import KSpaceFormatError, PGMFormatError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

SUBCOMMANDS = {
    "phase-transition": "phase_transition",
    "l-sweep": "l_sweep",
    "coil-sweep": "coil_sweep",
    "reconstruct": "reconstruct",
    "certify": "certify",
}

logger = logging.getLogger("accs")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="accs", description="Lifted auto-calibrated parallel "
                                "compressive sensing experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", required=True, help="key = value configuration file")
        s.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        s.add_argument("--threads", type=_positive, help="worker processes (overrides the config)")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    experiment = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config, experiment=experiment, **default_config(experiment))
        if cfg.experiment != experiment:
            raise ConfigError(f"config declares experiment={cfg.experiment!r} but the "
                              f"subcommand is {args.command!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None:
            cfg.threads = args.threads
        if args.out is not None:
            cfg.out = args.out
        cfg.validate()
        run_experiment(cfg, cfg.out)
    except ConfigError as exc:
        print(f"accs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KSpaceFormatError, PGMFormatError) as exc:
        print(f"accs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
