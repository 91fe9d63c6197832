"""Command line entry point `pumpwood-biharmonic`."""
import sys
import logging
import argparse
from typing import List, Optional
from pumpwood_communication.exceptions import PumpWoodException
from pumpwood_biharmonic.commands import COMMANDS, write_error_record
from pumpwood_biharmonic.config import RunConfig, LOG_LEVELS


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub-command per laboratory command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, help="Spatial dimension N >= 5")
    common.add_argument(
        "--eps", type=float, nargs="+",
        help="Hole radii of solve and verify-expansion")
    common.add_argument(
        "--eps-start", type=float, help="First eps of the schedule")
    common.add_argument(
        "--eps-ratio", type=float, help="Ratio of the geometric schedule")
    common.add_argument(
        "--eps-count", type=int, help="Number of eps in the schedule")
    common.add_argument("--nodes", type=int, help="Radial grid nodes")
    common.add_argument("--tol", type=float, help="Newton tolerance")
    common.add_argument(
        "--threads", type=int, help="Worker threads for independent cases")
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--seed", type=int, help="Seed of random samples")
    common.add_argument(
        "--log-level", choices=LOG_LEVELS, type=str.upper,
        help="Logging level of the stderr handler")

    parser = argparse.ArgumentParser(
        prog="pumpwood-biharmonic",
        description=(
            "Numerical laboratory for the critical biharmonic equation on "
            "an annulus with a small hole."))
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(
            name, parents=[common], help=command.__doc__)
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    """Config fields set on the command line."""
    overrides = {
        "dim": args.dim, "eps": args.eps, "eps_start": args.eps_start,
        "eps_ratio": args.eps_ratio, "eps_count": args.eps_count,
        "nodes": args.nodes, "threads": args.threads,
        "output_dir": args.out, "seed": args.seed,
        "log_level": args.log_level}
    if args.tol is not None:
        overrides["tolerances"] = {"newton": args.tol}
    return overrides


def configure_logging(level: int) -> None:
    """Single stderr handler on the package logger."""
    logger = logging.getLogger("pumpwood_biharmonic")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)

    try:
        config = RunConfig.load(args.config, overrides_from_args(args))
    except PumpWoodException as e:
        return write_error_record(e, args.out)

    configure_logging(config.logging_level)
    command = COMMANDS[args.command](config)
    return command.run()


if __name__ == "__main__":
    sys.exit(main())
