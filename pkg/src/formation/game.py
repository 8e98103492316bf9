#!/usr/bin/env python3
"""
Formation Game - Feasible best-response dynamics among RSs

RSs take turns in a fresh random order every iteration. On its turn an RS
replaces its uplink with the feasible parent that most improves its
utility, skipping moves whose resulting tree has been visited more than
the history threshold. The run ends at the first iteration without moves.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from formation.utility import NetworkEvaluator
from topology.model import (
    BS,
    NetworkState,
    RadioParams,
    SeedLike,
    TrafficParams,
    validate_tree,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 1000

Graph = Tuple[int, ...]


class Verdict(Enum):
    """Classification of a formation outcome"""
    NASH = "nash"
    HISTORY_INDUCED_NASH = "history_induced_nash"
    MIXED_TRIGGER = "mixed_trigger"
    NOT_EQUILIBRIUM = "not_equilibrium"


@dataclass(frozen=True, order=True)
class Strategy:
    """Replace the uplink of `actor` with a link to `new_parent`"""
    actor: int
    new_parent: int

    def __post_init__(self):
        if self.actor == self.new_parent:
            raise ValueError(f"RS {self.actor} cannot connect to itself")

    def apply(self, state: NetworkState) -> NetworkState:
        return state.with_parent(self.actor, self.new_parent)


class HistoryLedger:
    """Visit counts of the trees reached at the end of each iteration"""

    def __init__(self):
        self.counts: Counter = Counter()
        self.trail: List[Graph] = []

    def count(self, graph: Graph) -> int:
        return self.counts[tuple(graph)]

    def record(self, graph: Graph) -> int:
        graph = tuple(graph)
        self.counts[graph] += 1
        self.trail.append(graph)
        return self.counts[graph]

    def __len__(self):
        return len(self.trail)


@dataclass(frozen=True)
class MoveOption:
    """One structurally allowed parent replacement, evaluated as a what-if"""
    strategy: Strategy
    graph: Graph
    actor_utility: float
    feasible: bool


@dataclass(frozen=True)
class MoveRecord:
    """A committed link replacement"""
    iteration: int
    actor: int
    old_parent: int
    new_parent: int
    utility_before: float
    utility_after: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'iteration': self.iteration,
            'actor': self.actor,
            'old_parent': self.old_parent,
            'new_parent': self.new_parent,
            'utility_before': self.utility_before,
            'utility_after': self.utility_after,
        }


@dataclass
class GameTrace:
    """Per-iteration moves and the final verdict of a formation run"""
    iterations: List[List[MoveRecord]] = field(default_factory=list)
    verdict: Optional[Verdict] = None
    cap_reached: bool = False
    history: List[Graph] = field(default_factory=list)

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)

    @property
    def moves(self) -> List[MoveRecord]:
        return [move for moves in self.iterations for move in moves]

    @property
    def action_count(self) -> int:
        return sum(len(moves) for moves in self.iterations)

    def to_records(self) -> List[Dict[str, Any]]:
        return [move.to_dict() for move in self.moves]


class FormationGame:
    """Evaluates strategies and runs the formation dynamics for fixed parameters"""

    def __init__(self, traffic: TrafficParams, radio: RadioParams,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS):
        if max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
        self.traffic = traffic
        self.radio = radio
        self.max_iterations = max_iterations

    def _evaluator(self, state: NetworkState,
                   evaluator: Optional[NetworkEvaluator]) -> NetworkEvaluator:
        if evaluator is not None and evaluator.state is state:
            return evaluator
        geometry = evaluator.geometry if evaluator is not None else None
        return NetworkEvaluator(state, self.traffic, self.radio, geometry)

    def move_options(self, state: NetworkState, rs: int,
                     evaluator: Optional[NetworkEvaluator] = None) -> List[MoveOption]:
        """
        Every parent replacement other than the current link

        Candidates exclude the RS itself and all its descendants. A move is
        feasible when the prospective parent keeps at least (1 - epsilon) of
        its current utility; the BS accepts every move.
        """
        evaluator = self._evaluator(state, evaluator)
        current_parent = state.parent(rs)
        excluded = state.descendants(rs) | {rs, current_parent}
        epsilon = self.traffic.epsilon_fraction
        options = []
        for candidate in range(state.num_rs + 1):
            if candidate in excluded:
                continue
            strategy = Strategy(rs, candidate)
            moved = strategy.apply(state)
            what_if = evaluator.with_state(moved)
            if candidate == BS:
                feasible = True
            else:
                before = evaluator.rs_utility(candidate)
                feasible = what_if.rs_utility(candidate) >= before - epsilon * before
            options.append(MoveOption(
                strategy=strategy,
                graph=moved.canonical(),
                actor_utility=what_if.rs_utility(rs),
                feasible=feasible,
            ))
        return options

    def improving_options(self, state: NetworkState, rs: int,
                          evaluator: Optional[NetworkEvaluator] = None) -> List[MoveOption]:
        """Feasible options that strictly raise the actor's utility, best first"""
        evaluator = self._evaluator(state, evaluator)
        current = evaluator.rs_utility(rs)
        improving = [
            option for option in self.move_options(state, rs, evaluator)
            if option.feasible and option.actor_utility > current
        ]
        improving.sort(key=lambda option: (-option.actor_utility, option.strategy.new_parent))
        return improving

    def feasible_strategies(self, state: NetworkState, rs: int,
                            evaluator: Optional[NetworkEvaluator] = None) -> FrozenSet[Strategy]:
        """All feasible strategies of `rs`, keeping the current link included"""
        feasible = {
            option.strategy for option in self.move_options(state, rs, evaluator)
            if option.feasible
        }
        feasible.add(Strategy(rs, state.parent(rs)))
        return frozenset(feasible)

    def best_response(self, state: NetworkState, rs: int, history: HistoryLedger,
                      evaluator: Optional[NetworkEvaluator] = None) -> Optional[Strategy]:
        """
        Best improving feasible strategy whose tree respects the history cap

        Returns:
            The chosen Strategy, or None to keep the current link
        """
        return self._pick(self.improving_options(state, rs, evaluator), history)

    def _pick(self, improving: List[MoveOption], history: HistoryLedger) -> Optional[Strategy]:
        for option in improving:
            if history.count(option.graph) <= self.traffic.history_threshold:
                return option.strategy
        return None

    def _mixed_trigger(self, options: List[MoveOption], history: HistoryLedger) -> bool:
        traffic = self.traffic
        if traffic.critical_threshold > traffic.history_threshold:
            return False
        return any(
            history.count(option.graph) > traffic.critical_threshold
            for option in options if option.feasible
        )

    def verify_nash(self, state: NetworkState, history: HistoryLedger,
                    evaluator: Optional[NetworkEvaluator] = None) -> Verdict:
        """
        Classify a tree against unilateral feasible deviations

        Returns:
            NASH when no RS has an improving feasible deviation,
            HISTORY_INDUCED_NASH when every such deviation leads to a tree
            visited more than the history threshold, NOT_EQUILIBRIUM otherwise
        """
        report = validate_tree(state)
        if not report.is_valid_tree:
            raise ValueError(f"not a connected tree: disconnected RSs {sorted(report.disconnected)}")
        evaluator = self._evaluator(state, evaluator)
        blocked = False
        for rs in state.rs_indices():
            for option in self.improving_options(state, rs, evaluator):
                if history.count(option.graph) <= self.traffic.history_threshold:
                    return Verdict.NOT_EQUILIBRIUM
                blocked = True
        return Verdict.HISTORY_INDUCED_NASH if blocked else Verdict.NASH

    def run(self, state: NetworkState, seed: SeedLike = None,
            history: Optional[HistoryLedger] = None) -> Tuple[NetworkState, GameTrace]:
        """
        Run the formation dynamics from a connected tree

        Args:
            state: Initial tree (typically the star)
            seed: Seed of the per-iteration turn orders
            history: Ledger to continue from; a fresh one by default

        Returns:
            (final state, trace)
        """
        report = validate_tree(state)
        if not report.is_valid_tree:
            raise ValueError(
                f"formation needs a connected tree, disconnected RSs {sorted(report.disconnected)}"
            )
        rng = np.random.default_rng(seed)
        ledger = history if history is not None else HistoryLedger()
        trace = GameTrace()
        current = state
        evaluator = NetworkEvaluator(current, self.traffic, self.radio)

        while True:
            if trace.iteration_count >= self.max_iterations:
                trace.cap_reached = True
                logger.error(
                    f"Formation stopped at the iteration cap ({self.max_iterations}) "
                    f"with {state.num_rs} RSs"
                )
                break
            iteration = trace.iteration_count + 1
            moves: List[MoveRecord] = []
            for rs in rng.permutation(state.num_rs) + 1:
                rs = int(rs)
                options = self.move_options(current, rs, evaluator)
                if self._mixed_trigger(options, ledger):
                    trace.iterations.append(moves)
                    trace.verdict = Verdict.MIXED_TRIGGER
                    trace.history = list(ledger.trail)
                    logger.warning(
                        f"Mixed-strategy trigger at iteration {iteration}, RS {rs}"
                    )
                    return current, trace
                before = evaluator.rs_utility(rs)
                improving = sorted(
                    (o for o in options if o.feasible and o.actor_utility > before),
                    key=lambda o: (-o.actor_utility, o.strategy.new_parent),
                )
                strategy = self._pick(improving, ledger)
                if strategy is None:
                    continue
                after = next(o.actor_utility for o in improving if o.strategy == strategy)
                moves.append(MoveRecord(
                    iteration=iteration,
                    actor=rs,
                    old_parent=current.parent(rs),
                    new_parent=strategy.new_parent,
                    utility_before=before,
                    utility_after=after,
                ))
                current = strategy.apply(current)
                evaluator = evaluator.with_state(current)
                logger.debug(
                    f"Iteration {iteration}: RS {rs} -> {strategy.new_parent} "
                    f"({before:.4g} -> {after:.4g})"
                )
            trace.iterations.append(moves)
            ledger.record(current.canonical())
            if not moves:
                break

        trace.verdict = self.verify_nash(current, ledger, evaluator)
        trace.history = list(ledger.trail)
        logger.debug(
            f"Formation finished after {trace.iteration_count} iterations, "
            f"{trace.action_count} actions, verdict {trace.verdict.value}"
        )
        return current, trace


def feasible_strategies(state: NetworkState, rs: int, traffic: TrafficParams,
                        radio: RadioParams) -> FrozenSet[Strategy]:
    """Feasible parent replacements of `rs` (current link included)"""
    return FormationGame(traffic, radio).feasible_strategies(state, rs)


def best_response(state: NetworkState, rs: int, history: HistoryLedger,
                  traffic: TrafficParams, radio: RadioParams) -> Optional[Strategy]:
    """Best response of `rs` under the history cap, None to pass"""
    return FormationGame(traffic, radio).best_response(state, rs, history)


def run_formation(state: NetworkState, traffic: TrafficParams, radio: RadioParams,
                  seed: SeedLike = None,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS) -> Tuple[NetworkState, GameTrace]:
    """Run the formation dynamics with a fresh history ledger"""
    return FormationGame(traffic, radio, max_iterations).run(state, seed)


def verify_nash(state: NetworkState, history: HistoryLedger, traffic: TrafficParams,
                radio: RadioParams) -> Verdict:
    """Equilibrium classification of `state` given a visit history"""
    return FormationGame(traffic, radio).verify_nash(state, history)
