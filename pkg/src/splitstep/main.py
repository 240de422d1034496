"""
splitstep - splitting-step simulation of SDEs and lattice SPDEs

Command-line entry point. Every subcommand reads an optional INI
configuration, applies environment and command-line overrides, validates
everything, runs one study and writes plot-ready data files.

Subcommands:
- simulate          ensembles of paths of a catalog model
- converge-weak     weak (mean) error series with order fit
- converge-strong   strong (L^k) error series on a shared fine Wiener path
- spde-sbm          super-random walk run: snapshots, support, survival
- spde-contact      contact-process run, optional theta sweep
- theta-critical    critical theta per dt, extrapolated to dt -> 0
- sample-ncx2       raw non-central chi-square draws

Exit codes: 0 success, 1 runtime error, 2 configuration error.
"""

import argparse
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .commands.converge import cmd_converge
from .commands.sampler import cmd_sample_ncx2
from .commands.simulate import cmd_simulate
from .commands.spde import cmd_spde, cmd_theta_critical
from .core import ConfigurationError, SplitStepError, config, get_logger, setup_logging
from .core.logging import LOG_LEVELS
from .models.run_config import RunConfig
from .utils.config_file import dump_config, load_config

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

COMMANDS: Dict[str, Callable[[RunConfig], object]] = {
    "simulate": cmd_simulate,
    "converge-weak": lambda cfg: cmd_converge(cfg, "weak"),
    "converge-strong": lambda cfg: cmd_converge(cfg, "strong"),
    "spde-sbm": lambda cfg: cmd_spde(cfg, "sbm"),
    "spde-contact": lambda cfg: cmd_spde(cfg, "contact"),
    "theta-critical": cmd_theta_critical,
    "sample-ncx2": cmd_sample_ncx2,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="run seed (overrides file and environment)")
    common.add_argument("--threads", type=int, help="worker threads; never changes results")
    common.add_argument("--output", help="output directory")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration value (repeatable)",
    )
    common.add_argument(
        "--print-config",
        action="store_true",
        help="print the effective configuration with all defaults and exit",
    )
    common.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        help="logging level (default from SPLITSTEP_LOG_LEVEL)",
    )

    parser = argparse.ArgumentParser(
        prog="splitstep",
        description="Splitting-step simulation of SDEs and lattice SPDEs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run {name}")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < environment (seed, threads) < command-line flags."""
    cfg = load_config(args.config, args.overrides, command=args.command)
    run = cfg.run.model_copy(
        update={
            "seed": args.seed if args.seed is not None else config.resolve_seed(cfg.run.seed),
            "threads": (
                args.threads if args.threads is not None else config.resolve_threads(cfg.run.threads)
            ),
            "output": args.output or cfg.run.output,
        }
    )
    if run.threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {run.threads}")
    return cfg.model_copy(update={"run": run})


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        setup_logging(level=args.log_level)
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        logger.info(f"splitstep {cfg.command}: seed={cfg.run.seed}, output={cfg.run.output}")
        COMMANDS[cfg.command](cfg)
        logger.info(f"{cfg.command} finished; outputs in {cfg.run.output}")
        return EXIT_OK
    except (ConfigurationError, ValidationError) as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except SplitStepError as e:
        logger.error(f"run failed: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"unexpected error: {e}")
        return EXIT_RUNTIME


def start():
    """
    Entry point for the ``splitstep`` console script.

    Note:
        Registered in pyproject.toml under [tool.poetry.scripts].
    """
    sys.exit(main())


if __name__ == "__main__":
    start()
