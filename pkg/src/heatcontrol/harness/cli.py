"""Command-line entry point: ``heatcontrol {simulate,synthesize,verify,study}``."""

import argparse
import logging
import sys

from ..exceptions import ConfigError
from .config import COMMAND_KINDS, load_config
from .records import emit_outputs
from .runner import run_scenario

log = logging.getLogger("heatcontrol")


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"workers must be >= 1, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="heatcontrol", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kinds in COMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run a {' / '.join(kinds)} scenario")
        p.add_argument("--config", required=True, help="scenario INI file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=_u64, default=None, help="override the config seed (u64)")
        p.add_argument("--workers", type=_positive, default=1, help="parallel worker processes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.kind not in COMMAND_KINDS[args.command]:
        print(f"config error: kind {cfg.kind!r} is not a {args.command} scenario "
              f"(expected one of {COMMAND_KINDS[args.command]})", file=sys.stderr)
        return 2
    try:
        record = run_scenario(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        emit_outputs(record, args.out)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    for name, ok in sorted(record.verdicts.items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if record.passed else 1


if __name__ == "__main__":
    sys.exit(main())
