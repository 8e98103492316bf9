#!/usr/bin/env python3
"""
Experiment Runner - Dispatches a config to the scenario layer and writes results
"""
import logging
import os
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from baselines.trees import cayley_count, labeled_tree_count
from experiment import __version__
from experiment.config import ConfigError, ExperimentKind, ScenarioConfig, config_to_dict
from experiment.output import (
    MANIFEST_FILE,
    METRICS_FILE,
    NASH_DISTRIBUTION_FILE,
    REPETITIONS_FILE,
    RESULTS_FILE,
    TIMELINE_FILE,
    TRACES_FILE,
    TREES_FILE,
    write_manifest,
    write_nash_distribution,
    write_repetitions,
    write_results,
    write_timelines,
    write_traces,
    write_trees,
)
from formation.utility import LinkGeometry, NetworkEvaluator
from metrics_exporter import MetricsCollector
from scenario.runner import collect
from scenario.snapshot import run_snapshot

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = 'results'
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def resolve_output_dir(config: ScenarioConfig, out_dir: Optional[str] = None) -> Path:
    """--out, then output.directory, then RELAYTREE_OUTPUT_DIR, then ./results"""
    chosen = out_dir or config.output_directory or os.getenv('RELAYTREE_OUTPUT_DIR', DEFAULT_OUTPUT_DIR)
    return Path(chosen)


def resolve_seed(config: ScenarioConfig) -> ScenarioConfig:
    """Config with a concrete master seed, drawing fresh entropy when none is set"""
    if config.master_seed is not None:
        return config
    seed = int(np.random.SeedSequence().entropy)
    logger.info(f"No master seed configured, using {seed}")
    return replace(config, master_seed=seed)


def build_manifest(config: ScenarioConfig, seeds, files) -> Dict[str, Any]:
    manifest = {
        'version': __version__,
        'kind': config.kind.value,
        'master_seed': config.master_seed,
        'repetition_seeds': list(seeds),
        'sweep_points': [float(v) for v in config.sweep_points()],
        'files': list(files),
        'config': config_to_dict(config),
    }
    if config.kind is ExperimentKind.CENSUS:
        counts = sorted({config.at(v).num_rs for v in config.sweep_points()})
        manifest['tree_counts'] = {
            m: {'rooted_trees': cayley_count(m), 'labeled_trees': labeled_tree_count(m)}
            for m in counts
        }
    return manifest


def run_experiment(config: ScenarioConfig, out_dir: Optional[str] = None, jobs: int = 1) -> int:
    """
    Run a configured experiment and write its output files

    Args:
        config: Validated scenario config
        out_dir: Output directory override
        jobs: Worker processes for repetitions

    Returns:
        Process exit status (0 on success)
    """
    started = time.monotonic()
    try:
        config = resolve_seed(config)
        if config.kind is ExperimentKind.SNAPSHOT:
            config = replace(config, repetitions=1, axis=None, values=())
        directory = resolve_output_dir(config, out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        logger.info(
            f"Starting {config.kind.value} experiment: {config.num_rs} RSs, {config.num_ms} MSs, "
            f"seed {config.master_seed}, output {directory}"
        )

        outcome = collect(config, config.master_seed, jobs)
        results = outcome.results()
        files = [RESULTS_FILE, REPETITIONS_FILE]
        write_results(results, directory)
        write_repetitions(outcome.records, directory)

        if config.kind is ExperimentKind.SNAPSHOT:
            snapshot = run_snapshot(config, outcome.repetition_seeds[0])
            geometry = LinkGeometry(snapshot.deployed, config.traffic, config.radio)
            write_trees(
                snapshot,
                lambda state: NetworkEvaluator(state, config.traffic, config.radio, geometry),
                directory,
            )
            files.append(TREES_FILE)
        if outcome.timelines:
            write_timelines(outcome.timelines, directory)
            files.append(TIMELINE_FILE)
        if outcome.traces:
            write_traces(outcome.traces, directory)
            files.append(TRACES_FILE)
        if config.kind is ExperimentKind.CENSUS:
            write_nash_distribution(outcome.nash_counts, directory)
            files.append(NASH_DISTRIBUTION_FILE)

        for result in results:
            if result.mixed_trigger_rate > 0:
                logger.warning(
                    f"{result.algorithm} at {result.axis_value:g}: mixed-strategy trigger in "
                    f"{result.mixed_trigger_rate:.1%} of repetitions"
                )
            if result.cap_hits:
                logger.error(
                    f"{result.algorithm} at {result.axis_value:g}: {result.cap_hits} formation "
                    f"runs hit the iteration cap"
                )

        metrics = MetricsCollector()
        metrics.record_repetitions(outcome.records)
        metrics.record_nash_counts(outcome.nash_counts)
        metrics.write(directory / METRICS_FILE)
        files.append(METRICS_FILE)

        files.append(MANIFEST_FILE)
        write_manifest(build_manifest(config, outcome.repetition_seeds, files), directory)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"Experiment failed: {e}")
        return EXIT_FAILURE

    logger.info(f"✓ Experiment finished in {time.monotonic() - started:.1f}s ({len(results)} result rows)")
    return EXIT_OK
