#!/usr/bin/env python3
"""
Mobility - Periodic re-formation while RSs and/or MSs move

Positions advance in steps of the re-formation period. After each step the
RSs replay the formation game from the current tree with a fresh history
ledger, then every MS re-assesses its serving node once. Movers bounce off
the borders of the deployment area. A random walker draws a new heading at
the start of every period; a directed mover keeps its heading apart from
border reflections.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Tuple, Union

import numpy as np

from experiment.config import RANDOM_WALK, ScenarioConfig
from formation.game import FormationGame, Verdict
from formation.utility import NetworkEvaluator, assign_all_ms
from scenario.results import (
    PROPOSED,
    ExperimentResult,
    RepetitionRecord,
    aggregate,
    hop_statistics,
    records_frame,
)
from scenario.snapshot import HEADING_STREAM, ROUND_STREAM, run_snapshot
from topology.model import (
    NodeId,
    NodeKind,
    NetworkState,
    Position,
    SeedLike,
    derive_seed,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MobilitySpec:
    """
    Movement of a set of nodes

    Attributes:
        movers: RS and/or MS node ids that move
        velocity: Speed of every mover in m/s
        direction: Unit heading vector, or RANDOM_WALK for a fresh random heading
            per mover and period
        duration: Simulated time in seconds
        reform_period: Re-formation period in seconds
    """
    movers: FrozenSet[NodeId]
    velocity: float
    direction: Union[str, Tuple[float, float]] = RANDOM_WALK
    duration: float = 300.0
    reform_period: float = 30.0

    def __post_init__(self):
        if self.velocity < 0:
            raise ValueError(f"velocity must be >= 0, got {self.velocity}")
        if not self.reform_period > 0:
            raise ValueError(f"reform_period must be positive, got {self.reform_period}")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if self.direction != RANDOM_WALK:
            dx, dy = self.direction
            norm = math.hypot(dx, dy)
            if norm == 0:
                raise ValueError("direction must be a nonzero vector")
            object.__setattr__(self, 'direction', (dx / norm, dy / norm))

    @property
    def rounds(self) -> int:
        return int(math.floor(self.duration / self.reform_period + 1e-9))

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "MobilitySpec":
        settings = config.mobility
        if settings.movers == 'rs':
            movers = {NodeId.rs(rs) for rs in range(1, config.num_rs + 1)}
        elif settings.movers == 'ms':
            movers = {NodeId.ms(config.num_rs, k) for k in range(config.num_ms)}
        elif settings.movers == 'all':
            movers = {NodeId.rs(rs) for rs in range(1, config.num_rs + 1)}
            movers |= {NodeId.ms(config.num_rs, k) for k in range(config.num_ms)}
        else:
            movers = {NodeId.rs(rs) for rs in settings.movers if rs <= config.num_rs}
        return cls(
            movers=frozenset(movers),
            velocity=settings.speed,
            direction=settings.direction,
            duration=settings.duration,
            reform_period=config.traffic.reform_period,
        )


@dataclass
class MobilityRound:
    """State of the network after one re-formation round"""
    round: int
    time: float
    actions: int
    cumulative_actions: int
    iterations: int
    mean_hops: float
    max_hops: float
    mean_ms_utility: float
    mean_rs_utility: float
    verdict: Verdict
    state: NetworkState = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'round': self.round,
            'time': self.time,
            'actions': self.actions,
            'cumulative_actions': self.cumulative_actions,
            'iterations': self.iterations,
            'mean_hops': self.mean_hops,
            'max_hops': self.max_hops,
            'mean_ms_utility': self.mean_ms_utility,
            'mean_rs_utility': self.mean_rs_utility,
            'verdict': self.verdict.value,
        }


def reflect(points: np.ndarray, headings: np.ndarray,
            upper: Tuple[float, float]) -> None:
    """Fold points back into [0, upper] in place, flipping the heading component that hit a border"""
    for axis in (0, 1):
        limit = upper[axis]
        while True:
            low = np.where(points[:, axis] < 0.0)[0]
            high = np.where(points[:, axis] > limit)[0]
            if low.size == 0 and high.size == 0:
                break
            points[low, axis] = -points[low, axis]
            headings[low, axis] = -headings[low, axis]
            points[high, axis] = 2 * limit - points[high, axis]
            headings[high, axis] = -headings[high, axis]


def _headings(count: int, spec: MobilitySpec, rng: np.random.Generator) -> np.ndarray:
    if spec.direction == RANDOM_WALK:
        angles = rng.uniform(0.0, 2 * math.pi, size=count)
        return np.column_stack((np.cos(angles), np.sin(angles)))
    return np.tile(np.asarray(spec.direction, dtype=float), (count, 1)).reshape(-1, 2)


def _round_summary(index: int, time: float, state: NetworkState, evaluator: NetworkEvaluator,
                   actions: int, cumulative: int, iterations: int,
                   verdict: Verdict) -> MobilityRound:
    mean_hops, max_hops = hop_statistics(state)
    return MobilityRound(
        round=index,
        time=time,
        actions=actions,
        cumulative_actions=cumulative,
        iterations=iterations,
        mean_hops=mean_hops,
        max_hops=max_hops,
        mean_ms_utility=evaluator.mean_ms_utility(),
        mean_rs_utility=evaluator.mean_rs_utility(),
        verdict=verdict,
        state=state,
    )


def simulate(config: ScenarioConfig, mobility: MobilitySpec,
             seed: SeedLike) -> Tuple[List[MobilityRound], bool]:
    """
    Timeline of re-formation rounds; round 0 is the initial formation at t=0

    Returns:
        (rounds, whether any formation hit the iteration cap)
    """
    snapshot = run_snapshot(config, seed)
    state = snapshot.post_ms_state
    game = FormationGame(config.traffic, config.radio, config.max_iterations)
    evaluator = NetworkEvaluator(state, config.traffic, config.radio)
    cap_hit = snapshot.pre_trace.cap_reached or snapshot.post_trace.cap_reached

    initial_actions = snapshot.action_count
    timeline = [_round_summary(
        0, 0.0, state, evaluator, initial_actions, initial_actions,
        snapshot.post_trace.iteration_count, snapshot.post_trace.verdict,
    )]

    rs_movers = sorted(n.index for n in mobility.movers if n.kind is NodeKind.RS)
    ms_movers = sorted(n.index - state.num_rs - 1 for n in mobility.movers if n.kind is NodeKind.MS)
    rng = np.random.default_rng(derive_seed(seed, HEADING_STREAM))
    random_walk = mobility.direction == RANDOM_WALK
    rs_headings = _headings(len(rs_movers), mobility, rng)
    ms_headings = _headings(len(ms_movers), mobility, rng)
    step = mobility.velocity * mobility.reform_period
    upper = tuple(float(v) for v in config.area)

    cumulative = initial_actions
    for index in range(1, mobility.rounds + 1):
        if random_walk and index > 1:
            rs_headings = _headings(len(rs_movers), mobility, rng)
            ms_headings = _headings(len(ms_movers), mobility, rng)
        rs_points = np.asarray([p.as_tuple() for p in state.rs_positions], dtype=float).reshape(-1, 2)
        ms_points = state.ms_points()
        if rs_movers:
            rows = np.asarray(rs_movers) - 1
            moved = rs_points[rows] + step * rs_headings
            reflect(moved, rs_headings, upper)
            rs_points[rows] = moved
        if ms_movers:
            rows = np.asarray(ms_movers)
            moved = ms_points[rows] + step * ms_headings
            reflect(moved, ms_headings, upper)
            ms_points[rows] = moved
        state = state.with_positions(
            rs_positions=[Position(float(x), float(y)) for x, y in rs_points],
            ms_positions=[Position(float(x), float(y)) for x, y in ms_points],
        )

        state, trace = game.run(state, derive_seed(seed, ROUND_STREAM, index))
        state = assign_all_ms(state, config.traffic, config.radio)
        evaluator = NetworkEvaluator(state, config.traffic, config.radio)
        cap_hit = cap_hit or trace.cap_reached
        cumulative += trace.action_count
        timeline.append(_round_summary(
            index, index * mobility.reform_period, state, evaluator,
            trace.action_count, cumulative, trace.iteration_count, trace.verdict,
        ))
    return timeline, cap_hit


def actions_per_minute(timeline: List[MobilityRound], reform_period: float) -> float:
    """Actions per minute over the mobile rounds (round 0 excluded)"""
    mobile = timeline[1:]
    if not mobile:
        return 0.0
    return sum(r.actions for r in mobile) / (len(mobile) * reform_period / 60.0)


def mobility_record(config: ScenarioConfig, timeline: List[MobilityRound], cap_hit: bool,
                    axis_value: float, repetition: int, seed: int) -> RepetitionRecord:
    """Time-averaged repetition record of one mobility run"""
    count = len(timeline)
    return RepetitionRecord(
        axis_value=axis_value,
        algorithm=PROPOSED,
        repetition=repetition,
        seed=seed,
        mean_ms_utility=sum(r.mean_ms_utility for r in timeline) / count,
        mean_rs_utility=sum(r.mean_rs_utility for r in timeline) / count,
        mean_hops=sum(r.mean_hops for r in timeline) / count,
        max_hops=sum(r.max_hops for r in timeline) / count,
        iterations=sum(r.iterations for r in timeline) / count,
        actions=float(sum(r.actions for r in timeline[1:])),
        actions_per_minute=actions_per_minute(timeline, config.traffic.reform_period),
        verdict=timeline[-1].verdict.value,
        history_induced=sum(r.verdict is Verdict.HISTORY_INDUCED_NASH for r in timeline) / count,
        mixed_trigger=sum(r.verdict is Verdict.MIXED_TRIGGER for r in timeline) / count,
        cap_reached=float(cap_hit),
    )


def run_mobility(config: ScenarioConfig, mobility: MobilitySpec, seed: int,
                 axis_value: float = math.nan) -> Tuple[List[MobilityRound], ExperimentResult]:
    """
    Run one mobility scenario

    Args:
        config: Scenario parameters
        mobility: Movers, speed, heading and duration
        seed: Repetition seed
        axis_value: Label carried into the result

    Returns:
        (per-round timeline, single-repetition ExperimentResult)
    """
    timeline, cap_hit = simulate(config, mobility, seed)
    record = mobility_record(config, timeline, cap_hit, axis_value, 0, seed)
    result = aggregate(records_frame([record]))[0]
    logger.debug(
        f"Mobility run: {len(timeline) - 1} rounds, {record.actions:g} actions, "
        f"{record.actions_per_minute:.3g} per minute"
    )
    return timeline, result
