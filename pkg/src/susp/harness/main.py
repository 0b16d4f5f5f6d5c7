#!/usr/bin/env python3
"""
Suspension Testbed Harness

Train, evaluate and compare reinforcement-learning controllers for the active
five-bar rover suspension.

Usage:
    susp train     [--algo sac|ddpg|td3] [--steps N] [--seed S] [--out DIR] [--save PATH]
    susp eval      --load PATH [--episodes N] [--height M] [--out DIR]
    susp compare   --load PATH [--height M] [--out DIR]
    susp gradcheck [--perturb]

Every command also takes --config PATH (JSON, dotted keys) and --debug.
"""

import argparse
import logging
import logging.handlers
import os
import sys
import time
from typing import List, Optional

from pydantic import ValidationError

from susp.errors import BadCheckpoint, ConfigError
from susp.harness.acceptance import crossing_velocity, format_verdicts, pitch_reduction
from susp.harness.commands import cmd_compare, cmd_eval, cmd_gradcheck, cmd_train
from susp.harness.config import RunConfig, default_config_path, load_config_file, resolve_config
from susp.harness.output_handler import format_comparison, format_evaluation, format_gradcheck

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: $SUSP_CONFIG_PATH)")
    common.add_argument("--algo", help="sac, ddpg or td3")
    common.add_argument("--suspension", choices=["active", "passive"], help="Suspension mode")
    common.add_argument("--steps", type=int, help="Environment steps to train for")
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument("--height", type=float, help="Obstacle height in metres (eval/compare)")
    common.add_argument("--episodes", type=int, help="Evaluation episodes")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--save", help="Checkpoint path to write (train)")
    common.add_argument("--load", help="Checkpoint path to read")
    common.add_argument("--debug", action="store_true", help="Verbose logging to stdout")

    parser = argparse.ArgumentParser(
        prog="susp",
        description="Active five-bar suspension testbed",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train SAC for 100k steps
  susp train --algo sac --steps 100000 --out runs/sac

  # Evaluate on the 32 cm step
  susp eval --load runs/sac/checkpoint.bin --height 0.32 --episodes 20 --out runs/sac/eval

  # Active vs passive pitch on the same obstacle
  susp compare --load runs/sac/checkpoint.bin --height 0.32 --out runs/sac/compare
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="Train an agent")
    sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint")
    sub.add_parser("compare", parents=[common], help="Active vs passive episode")
    grad = sub.add_parser("gradcheck", parents=[common], help="Check analytic gradients")
    grad.add_argument(
        "--perturb", action="store_true", help="Corrupt one gradient (the check must fail)"
    )
    return parser


def setup_logging(debug: bool, out_dir: str):
    """Reconfigure the root logger: stdout in debug mode, else <out_dir>/logs.txt"""
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    if debug:
        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)
        root_logger.setLevel(logging.DEBUG)
        logger.info("Debug mode enabled - verbose logging to stdout")
        return
    log_path = os.path.join(out_dir, "logs.txt")
    try:
        os.makedirs(out_dir, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
        root_logger.setLevel(logging.DEBUG)
        logger.info(f"logging to {log_path}")
    except OSError as e:
        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s", datefmt=DATE_FORMAT))
        root_logger.addHandler(handler)
        root_logger.setLevel(logging.INFO)
        logger.warning(f"Failed to create {log_path}, falling back to stdout: {e}")


def resolve_from_args(args: argparse.Namespace) -> RunConfig:
    config_path = args.config or default_config_path()
    file_values = load_config_file(config_path) if config_path else None
    overrides = {
        "algo": args.algo,
        "suspension": args.suspension,
        "steps": args.steps,
        "seed": args.seed,
        "height": args.height,
        "episodes": args.episodes,
        "out": args.out,
    }
    return resolve_config(file_values, overrides)


def _require_checkpoint(args: argparse.Namespace, command: str) -> str:
    if not args.load:
        raise ConfigError(f"{command} needs --load <checkpoint>")
    return args.load


def run(args: argparse.Namespace) -> int:
    config = resolve_from_args(args)
    setup_logging(args.debug, config.out)
    started = time.monotonic()
    logger.info(f"susp {args.command}: out={config.out}")

    if args.command == "train":
        outcome = cmd_train(config, save_path=args.save, load_path=args.load, progress=not args.debug)
        episodes = outcome.metrics.episodes
        print(f"steps:        {config.steps}")
        print(f"episodes:     {len(episodes)}")
        print(f"metrics:      {outcome.metrics_path}")
        print(f"checkpoint:   {outcome.checkpoint_path}")
        status = EXIT_OK
    elif args.command == "eval":
        result = cmd_eval(config, _require_checkpoint(args, "eval"), config.episodes, config.height)
        print(format_evaluation(result))
        status = EXIT_OK
    elif args.command == "compare":
        comparison = cmd_compare(config, _require_checkpoint(args, "compare"), config.height)
        print(format_comparison(comparison.active, comparison.passive))
        verdicts = [
            pitch_reduction(comparison.active, comparison.passive),
            crossing_velocity(comparison.active, comparison.passive, config.physics.drive_speed),
        ]
        print(format_verdicts(verdicts))
        print(f"written: {comparison.path}")
        status = EXIT_OK
    else:
        results = cmd_gradcheck(config, perturb=args.perturb)
        print(format_gradcheck(results))
        status = EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE

    logger.info(f"susp {args.command} done in {time.monotonic() - started:.1f} s (exit {status})")
    return status


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit status"""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ConfigError, BadCheckpoint, ValidationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
