#!/usr/bin/env python3
"""
Experiment Results - Per-repetition records and their Monte-Carlo aggregates
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Any, Dict, Iterable, List, Tuple

import pandas as pd

from formation.utility import NetworkEvaluator
from topology.model import NetworkState, hop_counts

logger = logging.getLogger(__name__)

PROPOSED = "proposed"
NEAREST_NEIGHBOR = "nearest_neighbor"
DIRECT = "direct"
OPTIMAL = "optimal"
WORST_NASH = "worst_nash"

ALGORITHM_ORDER = (PROPOSED, NEAREST_NEIGHBOR, DIRECT, OPTIMAL, WORST_NASH)

# per-repetition columns that are averaged, with their result-table names
AVERAGED = {
    'mean_ms_utility': 'meanMsUtility',
    'mean_rs_utility': 'meanRsUtility',
    'mean_hops': 'meanHops',
    'max_hops': 'meanMaxHops',
    'iterations': 'meanIterations',
    'actions': 'actions',
    'actions_per_minute': 'actionsPerMinute',
    'nash_count': 'nashCount',
    'poa': 'poa',
    'history_induced': 'historyInducedRate',
    'mixed_trigger': 'mixedTriggerRate',
    'optimality_gap': 'optimalityGap',
}

RESULT_COLUMNS = [
    'axisValue', 'algorithm', 'meanMsUtility', 'stderr', 'meanHops', 'meanMaxHops',
    'meanIterations', 'maxIterations', 'actions', 'nashCount', 'poa',
    'meanRsUtility', 'actionsPerMinute', 'historyInducedRate', 'mixedTriggerRate',
    'capHits', 'optimalityGap', 'repetitions',
    'meanRsUtilityStderr', 'meanHopsStderr', 'meanIterationsStderr',
    'actionsPerMinuteStderr', 'nashCountStderr', 'poaStderr',
]


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error"""
    mean: float
    stderr: float = 0.0


@dataclass
class RepetitionRecord:
    """Outcome of one algorithm on one placement"""
    axis_value: float
    algorithm: str
    repetition: int
    seed: int
    mean_ms_utility: float
    mean_rs_utility: float
    mean_hops: float
    max_hops: float
    iterations: float = 0.0
    actions: float = 0.0
    actions_per_minute: float = math.nan
    nash_count: float = math.nan
    poa: float = math.nan
    verdict: str = ""
    history_induced: float = 0.0
    mixed_trigger: float = 0.0
    cap_reached: float = 0.0
    optimality_gap: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentResult:
    """Aggregate of one algorithm at one sweep point"""
    axis_value: float
    algorithm: str
    repetitions: int
    mean_ms_utility: Estimate
    mean_rs_utility: Estimate
    mean_hops: Estimate
    mean_max_hops: Estimate
    mean_iterations: Estimate
    max_iterations: float
    actions: Estimate
    actions_per_minute: Estimate
    nash_count: Estimate
    price_of_anarchy: Estimate
    history_induced_rate: float
    mixed_trigger_rate: float
    cap_hits: int
    optimality_gap: Estimate

    def to_row(self) -> Dict[str, Any]:
        return {
            'axisValue': self.axis_value,
            'algorithm': self.algorithm,
            'meanMsUtility': self.mean_ms_utility.mean,
            'stderr': self.mean_ms_utility.stderr,
            'meanHops': self.mean_hops.mean,
            'meanMaxHops': self.mean_max_hops.mean,
            'meanIterations': self.mean_iterations.mean,
            'maxIterations': self.max_iterations,
            'actions': self.actions.mean,
            'nashCount': self.nash_count.mean,
            'poa': self.price_of_anarchy.mean,
            'meanRsUtility': self.mean_rs_utility.mean,
            'actionsPerMinute': self.actions_per_minute.mean,
            'historyInducedRate': self.history_induced_rate,
            'mixedTriggerRate': self.mixed_trigger_rate,
            'capHits': self.cap_hits,
            'optimalityGap': self.optimality_gap.mean,
            'repetitions': self.repetitions,
            'meanRsUtilityStderr': self.mean_rs_utility.stderr,
            'meanHopsStderr': self.mean_hops.stderr,
            'meanIterationsStderr': self.mean_iterations.stderr,
            'actionsPerMinuteStderr': self.actions_per_minute.stderr,
            'nashCountStderr': self.nash_count.stderr,
            'poaStderr': self.price_of_anarchy.stderr,
        }


def hop_statistics(state: NetworkState) -> Tuple[float, float]:
    """Mean and maximum RS hop count, excluding the MS access hop (0, 0 without RSs)"""
    hops = list(hop_counts(state).values())
    if not hops:
        return 0.0, 0.0
    return float(sum(hops)) / len(hops), float(max(hops))


def tree_record(state: NetworkState, evaluator: NetworkEvaluator, **fields) -> RepetitionRecord:
    """Record with utilities and hop statistics of `state` filled in"""
    mean_hops, max_hops = hop_statistics(state)
    return RepetitionRecord(
        mean_ms_utility=evaluator.mean_ms_utility(),
        mean_rs_utility=evaluator.mean_rs_utility(),
        mean_hops=mean_hops,
        max_hops=max_hops,
        **fields,
    )


def records_frame(records: Iterable[RepetitionRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([record.to_dict() for record in records])
    if frame.empty:
        frame = pd.DataFrame(columns=list(RepetitionRecord.__dataclass_fields__))
    return frame


def _estimate(stats: pd.DataFrame, column: str) -> Estimate:
    mean = float(stats[(column, 'mean')])
    count = int(stats[(column, 'count')])
    stderr = float(stats[(column, 'sem')]) if count > 1 else 0.0
    if count == 0:
        stderr = math.nan
    return Estimate(mean=mean, stderr=stderr)


def aggregate(frame: pd.DataFrame) -> List[ExperimentResult]:
    """
    Mean and standard error per (axis value, algorithm)

    Missing values (nan) are skipped, so an all-nan column aggregates to nan.
    Row order is sweep order, then ALGORITHM_ORDER.
    """
    if frame.empty:
        return []
    frame = frame.copy()
    frame['axis_key'] = frame['axis_value'].fillna(-math.inf)
    frame['algorithm_rank'] = frame['algorithm'].map(
        {name: rank for rank, name in enumerate(ALGORITHM_ORDER)}
    )
    axis_order = {key: rank for rank, key in enumerate(frame['axis_key'].drop_duplicates())}
    frame['axis_rank'] = frame['axis_key'].map(axis_order)

    spec = {column: ['mean', 'sem', 'count'] for column in AVERAGED}
    spec['cap_reached'] = ['sum']
    spec['repetition'] = ['count']
    grouped = frame.groupby(['axis_rank', 'algorithm_rank'], sort=True)
    stats = grouped.agg(spec)
    max_iterations = grouped['iterations'].max()
    first = grouped[['axis_value', 'algorithm']].first()

    results = []
    for key, row in stats.iterrows():
        results.append(ExperimentResult(
            axis_value=float(first.loc[key, 'axis_value']),
            algorithm=str(first.loc[key, 'algorithm']),
            repetitions=int(row[('repetition', 'count')]),
            mean_ms_utility=_estimate(row, 'mean_ms_utility'),
            mean_rs_utility=_estimate(row, 'mean_rs_utility'),
            mean_hops=_estimate(row, 'mean_hops'),
            mean_max_hops=_estimate(row, 'max_hops'),
            mean_iterations=_estimate(row, 'iterations'),
            max_iterations=float(max_iterations.loc[key]),
            actions=_estimate(row, 'actions'),
            actions_per_minute=_estimate(row, 'actions_per_minute'),
            nash_count=_estimate(row, 'nash_count'),
            price_of_anarchy=_estimate(row, 'poa'),
            history_induced_rate=float(row[('history_induced', 'mean')]),
            mixed_trigger_rate=float(row[('mixed_trigger', 'mean')]),
            cap_hits=int(row[('cap_reached', 'sum')]),
            optimality_gap=_estimate(row, 'optimality_gap'),
        ))
    return results


def results_frame(results: Iterable[ExperimentResult]) -> pd.DataFrame:
    return pd.DataFrame([result.to_row() for result in results], columns=RESULT_COLUMNS)
