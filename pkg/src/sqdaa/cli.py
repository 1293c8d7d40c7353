"""Command-line entry point: ``sqdaa <mode> --config cfg.yaml``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .asp import ASPError
from .driver import ShotBudgetExceeded
from .experiments import MODES, ConfigError, ExperimentConfig, run_experiment

log = logging.getLogger("sqdaa")

EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_ASP = 4
EXIT_BUDGET = 5
EXIT_IO = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqdaa", description="Sampling-based diagonalization experiments.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", "-c", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, help="override seed_base")
        p.add_argument("--restarts", type=int, help="override restarts")
        p.add_argument("--workers", type=int, help="parallel restarts")
        p.add_argument("--out", "-o", help="output directory (default: config's output)")
        p.add_argument("--quiet", "-q", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = ExperimentConfig.load(args.config)
        cfg.mode = args.mode
        if args.seed is not None:
            cfg.seed_base = args.seed
        if args.restarts is not None:
            cfg.restarts = args.restarts
        if args.workers is not None:
            cfg.workers = args.workers
        cfg.__post_init__()
        summary = run_experiment(cfg, args.out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ASPError as exc:
        log.error("state preparation failed: %s", exc)
        return EXIT_ASP
    except ShotBudgetExceeded as exc:
        log.error("shot budget exceeded: %s", exc)
        return EXIT_BUDGET
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_DOMAIN
    headline = {k: summary[k] for k in ("ratio_Q", "ratio_N_S", "crossing_m", "aggregate") if k in summary}
    log.info(json.dumps(headline, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
