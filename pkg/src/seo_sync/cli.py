"""Command-line entry point.

    seo-sync run    --config PATH [--override k=v ...] [--jobs N] [--out DIR]
    seo-sync verify SUITE [--fast]

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 precondition violation, 4 numerical divergence. ``SEO_SYNC_SEED`` overrides
the configured seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import verify as verify_mod
from .config import load_config
from .errors import ConfigError, DivergenceError, SeoSyncError
from .runner import run as run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seo-sync", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured scenario")
    p_run.add_argument("--config", required=True, help="TOML run configuration")
    p_run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path), repeatable")
    p_run.add_argument("--jobs", type=int, default=None,
                       help="worker processes for sweeps (default: CPU count)")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=sorted(verify_mod.SUITES),
                       help="which checks to run")
    p_ver.add_argument("--fast", action="store_true",
                       help="reduced-sample statistical checks at widened tolerances")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(
                args.config,
                overrides=args.override,
                seed_env=os.environ.get("SEO_SYNC_SEED"),
                output_dir=args.out,
            )
            manifest = run_scenario(cfg, jobs=args.jobs)
            print(f"wrote {manifest}")
            return 0
        ok = verify_mod.run_suite(args.suite, fast=args.fast)
        return 0 if ok else 1
    except ConfigError as exc:
        print(f"error-category: config-parse\n{exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error-category: divergence\n{exc}", file=sys.stderr)
        return 4
    except SeoSyncError as exc:
        print(f"error-category: precondition\n{exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
