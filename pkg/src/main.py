#!/usr/bin/env python3
"""
Relaytree Command Line - Runs, validates and censuses relay-tree experiments

Usage:
    python src/main.py run config/experiments/utility_vs_ms.yaml --seed 7 --out results/ms
    python src/main.py validate config/default_scenario.yaml
    python src/main.py census config/experiments/nash_census.yaml --jobs 4
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

# Add src to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from experiment.config import ConfigError, ExperimentKind, emit_config, load_config  # noqa: E402
from experiment.runner import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, run_experiment  # noqa: E402

logger = logging.getLogger(__name__)


def setup_logging():
    """Configure root logging from RELAYTREE_LOG_LEVEL (default INFO)"""
    level_name = os.getenv('RELAYTREE_LOG_LEVEL', 'INFO').upper()
    level = getattr(logging, level_name, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='relaytree',
        description='Relay-station uplink tree formation simulator',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run config/experiments/utility_vs_ms.yaml --seed 7
  %(prog)s run config/experiments/mobility_actions_m10.yaml --jobs 4 --out results/mobility
  %(prog)s validate config/default_scenario.yaml
  %(prog)s census config/experiments/nash_census.yaml

Environment:
  RELAYTREE_OUTPUT_DIR   default output directory (fallback: results)
  RELAYTREE_LOG_LEVEL    logging level (fallback: INFO)
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='Run the experiment described by a config file')
    census = commands.add_parser('census', help='Enumerate Nash networks (at most 8 RSs)')
    for sub in (run, census):
        sub.add_argument('config', help='YAML scenario file')
        sub.add_argument('--seed', type=int, help='Master seed (overrides experiment.master_seed)')
        sub.add_argument('--out', help='Output directory')
        sub.add_argument('--repetitions', type=int, help='Repetitions per sweep point')
        sub.add_argument('--jobs', type=int, default=1, help='Worker processes (default: 1)')

    validate = commands.add_parser('validate', help='Check a config file and print it resolved')
    validate.add_argument('config', help='YAML scenario file')
    return parser


def _apply_overrides(config, args):
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        config = replace(config, master_seed=args.seed)
    if args.repetitions is not None:
        if args.repetitions < 1:
            raise ConfigError("--repetitions must be >= 1")
        config = replace(config, repetitions=args.repetitions)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit status"""
    setup_logging()
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args.config)
        if args.command == 'validate':
            print(emit_config(config), end='')
            logger.info(f"✓ {args.config} is valid")
            return EXIT_OK

        config = _apply_overrides(config, args)
        if args.command == 'census':
            config = replace(config, kind=ExperimentKind.CENSUS)
            if config.max_rs() > config.enumeration_cap:
                raise ConfigError(
                    f"census supports at most {config.enumeration_cap} RSs, got {config.max_rs()}"
                )
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as e:
        logger.error(f"Invalid configuration {args.config}: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"Cannot read {args.config}: {e}")
        return EXIT_FAILURE

    return run_experiment(config, out_dir=args.out, jobs=args.jobs)


if __name__ == '__main__':
    sys.exit(main())
