#!/usr/bin/env python3
"""
Sweep Runner - Monte-Carlo repetitions over a parameter axis

Each repetition seed depends only on (master seed, repetition index), so
every axis value and every algorithm of a repetition sees the same
placement. Repetitions may run in worker processes; results are put back
in (axis value, repetition) order before aggregation.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from baselines.trees import (
    enumerate_nash_networks,
    nearest_neighbor_tree,
    objective_value,
    star_tree,
)
from experiment.config import ExperimentKind, ScenarioConfig, SweepAxis
from formation.game import Verdict
from formation.utility import NetworkEvaluator
from scenario.mobility import MobilitySpec, mobility_record, simulate
from scenario.results import (
    DIRECT,
    NEAREST_NEIGHBOR,
    OPTIMAL,
    PROPOSED,
    WORST_NASH,
    ExperimentResult,
    RepetitionRecord,
    aggregate,
    records_frame,
    tree_record,
)
from scenario.snapshot import SnapshotResult, run_snapshot

logger = logging.getLogger(__name__)


def repetition_seed(master_seed: int, repetition: int) -> int:
    """64-bit seed of one repetition, derived from the master seed"""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(repetition,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass
class TaskOutcome:
    """What one (axis value, repetition) task produced"""
    records: List[RepetitionRecord]
    timeline: Optional[List[Dict]] = None
    nash_count: Optional[int] = None
    moves: Optional[List[Dict]] = None


@dataclass
class SweepOutcome:
    """Raw material of a sweep: per-repetition records plus side tables"""
    records: pd.DataFrame
    timelines: Dict[float, List[Dict]] = field(default_factory=dict)
    traces: Dict[float, List[Dict]] = field(default_factory=dict)
    nash_counts: List[Tuple[float, int]] = field(default_factory=list)
    repetition_seeds: List[int] = field(default_factory=list)

    def results(self) -> List[ExperimentResult]:
        return aggregate(self.records)


def _verdict_flags(*verdicts: Verdict) -> Dict[str, float]:
    return {
        'verdict': verdicts[-1].value,
        'history_induced': float(verdicts[-1] is Verdict.HISTORY_INDUCED_NASH),
        'mixed_trigger': float(any(v is Verdict.MIXED_TRIGGER for v in verdicts)),
    }


def formation_records(config: ScenarioConfig, snapshot: SnapshotResult, axis_value: float,
                      repetition: int, seed: int) -> List[RepetitionRecord]:
    """Proposed, nearest-neighbor and direct outcomes on one placement"""
    traffic, radio = config.traffic, config.radio
    common = {'axis_value': axis_value, 'repetition': repetition, 'seed': seed}

    proposed = snapshot.post_ms_state
    records = [tree_record(
        proposed, NetworkEvaluator(proposed, traffic, radio),
        algorithm=PROPOSED,
        iterations=float(snapshot.pre_trace.iteration_count),
        actions=float(snapshot.action_count),
        cap_reached=float(snapshot.pre_trace.cap_reached or snapshot.post_trace.cap_reached),
        **_verdict_flags(snapshot.pre_trace.verdict, snapshot.post_trace.verdict),
        **common,
    )]
    nearest = nearest_neighbor_tree(snapshot.deployed)
    records.append(tree_record(
        nearest, NetworkEvaluator(nearest, traffic, radio), algorithm=NEAREST_NEIGHBOR, **common
    ))
    direct = star_tree(snapshot.deployed)
    records.append(tree_record(
        direct, NetworkEvaluator(direct, traffic, radio), algorithm=DIRECT, **common
    ))
    return records


def census_records(config: ScenarioConfig, snapshot: SnapshotResult, axis_value: float,
                   repetition: int, seed: int) -> Tuple[List[RepetitionRecord], int]:
    """Proposed, optimal and worst-Nash outcomes on one placement, plus the Nash count"""
    traffic, radio = config.traffic, config.radio
    census = enumerate_nash_networks(
        snapshot.deployed, traffic, radio, config.objective, config.enumeration_cap
    )
    shared = {
        'axis_value': axis_value, 'repetition': repetition, 'seed': seed,
        'nash_count': float(census.count), 'poa': census.price_of_anarchy,
    }

    proposed = snapshot.post_ms_state
    evaluator = NetworkEvaluator(proposed, traffic, radio)
    value = objective_value(evaluator, config.objective)
    gap = math.nan
    if census.optimal_value > 0:
        gap = (census.optimal_value - value) / census.optimal_value
    records = [tree_record(
        proposed, evaluator,
        algorithm=PROPOSED,
        iterations=float(snapshot.pre_trace.iteration_count),
        actions=float(snapshot.action_count),
        cap_reached=float(snapshot.pre_trace.cap_reached or snapshot.post_trace.cap_reached),
        optimality_gap=gap,
        **_verdict_flags(snapshot.pre_trace.verdict, snapshot.post_trace.verdict),
        **shared,
    )]
    optimal = census.optimal_tree
    records.append(tree_record(
        optimal, NetworkEvaluator(optimal, traffic, radio), algorithm=OPTIMAL, **shared
    ))
    if census.worst_tree is not None:
        worst = census.worst_tree
        records.append(tree_record(
            worst, NetworkEvaluator(worst, traffic, radio), algorithm=WORST_NASH, **shared
        ))
    else:
        records.append(RepetitionRecord(
            algorithm=WORST_NASH, mean_ms_utility=math.nan, mean_rs_utility=math.nan,
            mean_hops=math.nan, max_hops=math.nan, **shared,
        ))
    return records, census.count


def _run_task(task: Tuple[ScenarioConfig, float, int, int]) -> TaskOutcome:
    config, axis_value, repetition, seed = task
    if config.kind is ExperimentKind.MOBILITY:
        spec = MobilitySpec.from_config(config)
        timeline, cap_hit = simulate(config, spec, seed)
        record = mobility_record(config, timeline, cap_hit, axis_value, repetition, seed)
        rows = [r.to_dict() for r in timeline] if repetition == 0 else None
        return TaskOutcome(records=[record], timeline=rows)

    snapshot = run_snapshot(config, seed)
    moves = snapshot.move_records() if repetition == 0 else None
    if config.kind is ExperimentKind.CENSUS:
        records, count = census_records(config, snapshot, axis_value, repetition, seed)
        return TaskOutcome(records=records, nash_count=count, moves=moves)
    records = formation_records(config, snapshot, axis_value, repetition, seed)
    return TaskOutcome(records=records, moves=moves)


def collect(config: ScenarioConfig, master_seed: int, jobs: int = 1) -> SweepOutcome:
    """
    Run every (axis value, repetition) task of a config

    Args:
        config: Resolved scenario; axis and values define the sweep
        master_seed: Seed every repetition seed derives from
        jobs: Worker processes (1 runs inline)

    Returns:
        SweepOutcome with records in sweep order
    """
    seeds = [repetition_seed(master_seed, r) for r in range(config.repetitions)]
    tasks = [
        (config.at(value), value, repetition, seed)
        for value in config.sweep_points()
        for repetition, seed in enumerate(seeds)
    ]
    logger.info(
        f"Running {len(tasks)} tasks ({len(config.sweep_points())} sweep points x "
        f"{config.repetitions} repetitions, {config.kind.value})"
    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            outcomes = list(executor.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_run_task(task) for task in tasks]

    outcome = SweepOutcome(records=records_frame(r for o in outcomes for r in o.records),
                           repetition_seeds=seeds)
    for (_, value, repetition, _), result in zip(tasks, outcomes):
        if result.timeline is not None:
            outcome.timelines[value] = result.timeline
        if result.moves is not None:
            outcome.traces[value] = result.moves
        if result.nash_count is not None:
            outcome.nash_counts.append((value, result.nash_count))
    return outcome


def run_sweep(config: ScenarioConfig, axis: Optional[SweepAxis], values: Sequence[float],
              repetitions: int, seed: int, jobs: int = 1) -> List[ExperimentResult]:
    """
    Aggregated results of a parameter sweep

    Args:
        config: Base scenario
        axis: Parameter to vary (None for a single point)
        values: Axis values
        repetitions: Placements per axis value (>= 1)
        seed: Master seed
        jobs: Worker processes

    Returns:
        One ExperimentResult per (axis value, algorithm)
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    sweep = replace(config, axis=axis, values=tuple(float(v) for v in values),
                    repetitions=repetitions)
    return collect(sweep, seed, jobs).results()
