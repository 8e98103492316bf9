#!/usr/bin/env python3
"""
Result Output - Comma-separated tables and the YAML run manifest

Floats are written with nine significant digits and missing values as
`nan`; no file carries a timestamp, so equal inputs give equal bytes.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

import pandas as pd
import yaml

from formation.utility import NetworkEvaluator
from scenario.results import ExperimentResult, results_frame
from scenario.snapshot import SnapshotResult
from topology.model import hop_counts

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.9g'

RESULTS_FILE = 'results.csv'
REPETITIONS_FILE = 'repetitions.csv'
MANIFEST_FILE = 'manifest.yaml'
METRICS_FILE = 'metrics.prom'
TREES_FILE = 'trees.csv'
TIMELINE_FILE = 'timeline.csv'
NASH_DISTRIBUTION_FILE = 'nash_distribution.csv'
TRACES_FILE = 'traces.csv'

TRACE_COLUMNS = [
    'axisValue', 'phase', 'iteration', 'actor', 'old_parent', 'new_parent',
    'utility_before', 'utility_after',
]


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='nan', lineterminator='\n')
    logger.info(f"✓ Wrote {len(frame)} rows to {path}")
    return path


def write_results(results: Iterable[ExperimentResult], directory: Path) -> Path:
    return write_table(results_frame(results), directory / RESULTS_FILE)


def write_repetitions(frame: pd.DataFrame, directory: Path) -> Path:
    columns = ['axis_value', 'algorithm', 'repetition', 'seed'] + [
        c for c in frame.columns if c not in ('axis_value', 'algorithm', 'repetition', 'seed')
    ]
    return write_table(frame[columns], directory / REPETITIONS_FILE)


def write_manifest(manifest: Dict[str, Any], directory: Path) -> Path:
    path = directory / MANIFEST_FILE
    with open(path, 'w') as f:
        yaml.safe_dump(manifest, f, sort_keys=False, allow_unicode=True)
    logger.info(f"✓ Manifest written to {path}")
    return path


def snapshot_rows(snapshot: SnapshotResult, evaluator_factory) -> List[Dict[str, Any]]:
    """RS rows for both phases and MS rows for the final assignment"""
    rows = []
    for phase, state in (('pre_ms', snapshot.pre_ms_state), ('post_ms', snapshot.post_ms_state)):
        evaluator: NetworkEvaluator = evaluator_factory(state)
        hops = hop_counts(state)
        for rs in state.rs_indices():
            position = state.position_of(rs)
            rows.append({
                'phase': phase, 'node': rs, 'x': position.x, 'y': position.y,
                'parent': state.parent(rs), 'hops': hops.get(rs, -1),
                'utility': evaluator.rs_utility(rs),
            })
    final = snapshot.post_ms_state
    evaluator = evaluator_factory(final)
    for k, position in enumerate(final.ms_positions):
        serving = final.ms_serving[k]
        rows.append({
            'phase': 'ms', 'node': k, 'x': position.x, 'y': position.y,
            'parent': -1 if serving is None else serving, 'hops': -1,
            'utility': evaluator.ms_utility(k) if serving is not None else 0.0,
        })
    return rows


def write_trees(snapshot: SnapshotResult, evaluator_factory, directory: Path) -> Path:
    frame = pd.DataFrame(snapshot_rows(snapshot, evaluator_factory),
                         columns=['phase', 'node', 'x', 'y', 'parent', 'hops', 'utility'])
    return write_table(frame, directory / TREES_FILE)


def write_timelines(timelines: Dict[float, List[Dict[str, Any]]], directory: Path) -> Path:
    rows = []
    for axis_value, timeline in timelines.items():
        for entry in timeline:
            rows.append({'axisValue': axis_value, **entry})
    frame = pd.DataFrame(rows, columns=[
        'axisValue', 'round', 'time', 'actions', 'cumulative_actions', 'iterations',
        'mean_hops', 'max_hops', 'mean_ms_utility', 'mean_rs_utility', 'verdict',
    ])
    return write_table(frame, directory / TIMELINE_FILE)


def write_nash_distribution(counts: List[Tuple[float, int]], directory: Path) -> Path:
    """Number of placements per Nash-network count, for every axis value"""
    frame = pd.DataFrame(counts, columns=['axisValue', 'nashNetworks'])
    if not frame.empty:
        frame['axisKey'] = frame['axisValue'].fillna(-1.0)
        order = {key: rank for rank, key in enumerate(frame['axisKey'].drop_duplicates())}
        frame['axisRank'] = frame['axisKey'].map(order)
        frame = (frame.groupby(['axisRank', 'nashNetworks'], sort=True)
                 .agg(axisValue=('axisValue', 'first'), placements=('axisKey', 'size'))
                 .reset_index()[['axisValue', 'nashNetworks', 'placements']])
    else:
        frame = pd.DataFrame(columns=['axisValue', 'nashNetworks', 'placements'])
    return write_table(frame, directory / NASH_DISTRIBUTION_FILE)


def write_traces(traces: Dict[float, List[Dict[str, Any]]], directory: Path) -> Path:
    """Committed moves of the first repetition at every axis value, in commit order"""
    rows = [
        {'axisValue': axis_value, **move}
        for axis_value, moves in traces.items()
        for move in moves
    ]
    return write_table(pd.DataFrame(rows, columns=TRACE_COLUMNS), directory / TRACES_FILE)
