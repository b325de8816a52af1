"""cdl - experiment driver.

    cdl <suite> [--config file.json] [--n 1..3] [--alpha auto|a,b,...] [--out DIR]
    cdl export <kind> --from DIR [--n N] [--alpha A] [--out FILE]

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
configuration error.
"""

import argparse
import logging
import sys

from .config import ExperimentConfig, parse_alpha, parse_n
from .errors import ConfigError
from .suites import SUPPORTED_EXPORTS, SUPPORTED_SUITES, export_plot_data, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so usage errors map to exit code 2."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdl", description="Scaled polarity verification suites.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for suite in SUPPORTED_SUITES:
        p = sub.add_parser(suite, help=f"run the {suite} suite")
        p.add_argument("--config", help="JSON file of ExperimentConfig fields")
        p.add_argument("--n", help="dimensions, e.g. 1,2,3 or 1..10")
        p.add_argument("--alpha", help="comma list of alphas or 'auto'")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int, help="random functions per (n, alpha)")
        p.add_argument("--workers", type=int, help="process pool size")
        p.add_argument("--log-level", dest="log_level")
    export = sub.add_parser("export", help="turn suite output into plot-ready CSV")
    export.add_argument("kind", choices=SUPPORTED_EXPORTS)
    export.add_argument("--from", dest="source", required=True, help="directory with suite outputs")
    export.add_argument("--n", type=int, default=1, help="dimension for h-curve")
    export.add_argument("--alpha", type=float, default=2.0, help="alpha for h-curve")
    export.add_argument("--out", help="target CSV file")
    export.add_argument("--log-level", dest="log_level", default="WARNING")
    return parser


def _configure_logging(level: str | None) -> None:
    logging.basicConfig(
        level=(level or "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_env().with_overrides(suite=args.command)
    if args.config:
        config = ExperimentConfig.from_json(args.config, base=config)
    return config.with_overrides(
        suite=args.command,
        n=parse_n(args.n) if args.n else None,
        alpha=parse_alpha(args.alpha) if args.alpha else None,
        out=args.out,
        seed=args.seed,
        samples=args.samples,
        workers=args.workers,
        log_level=args.log_level,
    )


def main(argv: list[str] | None = None) -> int:
    """Entry point for the cdl command; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "export":
            _configure_logging(args.log_level)
            path = export_plot_data(args.source, args.kind, n=args.n, alpha=args.alpha, out=args.out)
            print(path)
            return EXIT_OK
        config = _load_config(args)
    except ConfigError as e:
        print(f"cdl: {e}", file=sys.stderr)
        return EXIT_CONFIG
    _configure_logging(config.log_level)
    outcome = run_suite(config)
    for path in outcome.files:
        print(path)
    if not outcome.passed:
        for failure in outcome.failures:
            logger.error("%s", failure)
        print(f"cdl: {config.suite}: {len(outcome.failures)} checks failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
