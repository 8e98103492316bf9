#!/usr/bin/env python3
"""
Baselines - Reference topologies and exhaustive tree analytics

Covers the direct (star) and nearest-neighbor baselines, enumeration of
every BS-rooted RS tree, the optimal tree under a mean-utility objective,
and the census of Nash trees with the resulting price of anarchy.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple

from formation.game import FormationGame, HistoryLedger, Verdict
from formation.utility import LinkGeometry, NetworkEvaluator, assign_all_ms
from topology.model import BS, NetworkState, RadioParams, TrafficParams

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 8


class EnumerationCapError(ValueError):
    """Raised when exhaustive enumeration is requested above the RS cap"""


class Objective(Enum):
    """Network-wide value compared across trees"""
    MEAN_MS_UTILITY = "mean_ms_utility"
    MEAN_RS_UTILITY = "mean_rs_utility"


def cayley_count(num_rs: int) -> int:
    """Number of BS-rooted trees over M labelled RSs, (M+1)^(M-1)"""
    if num_rs == 0:
        return 1
    return (num_rs + 1) ** (num_rs - 1)


def labeled_tree_count(num_rs: int) -> int:
    """M^(M-2), the unrooted count over the RSs alone (reported next to cayley_count)"""
    if num_rs < 1:
        return 0
    if num_rs == 1:
        return 1
    return num_rs ** (num_rs - 2)


def _check_cap(num_rs: int, cap: int) -> None:
    if num_rs > cap:
        raise EnumerationCapError(
            f"exhaustive enumeration supports at most {cap} RSs, got {num_rs}"
        )


def star_tree(state: NetworkState) -> NetworkState:
    """Direct transmission: every MS attaches straight to the BS"""
    return state.with_assignments((BS,) * state.num_ms)


def nearest_neighbor_tree(state: NetworkState) -> NetworkState:
    """
    Each node links to its closest partner

    RSs are processed in increasing distance to the BS and attach to the
    nearest node already connected to the BS, which keeps the result a
    tree. Every MS attaches to its nearest node among the BS and RSs.
    Distance ties go to the lowest index.
    """
    order = sorted(state.rs_indices(), key=lambda rs: (state.position_of(rs).distance_to(state.bs), rs))
    parents = list(state.parents)
    rooted = [BS]
    for rs in order:
        position = state.position_of(rs)
        parents[rs - 1] = min(
            rooted, key=lambda node: (position.distance_to(state.position_of(node)), node)
        )
        rooted.append(rs)

    nodes = list(range(state.num_rs + 1))
    serving = tuple(
        min(nodes, key=lambda node: (ms.distance_to(state.position_of(node)), node))
        for ms in state.ms_positions
    )
    return state.with_parents(parents).with_assignments(serving)


@dataclass
class TreeEnumeration:
    """Lazy enumeration of every BS-rooted tree over `num_rs` RSs"""
    num_rs: int
    total: int
    trees: Iterator[Tuple[int, ...]] = field(repr=False)

    def __iter__(self):
        return self.trees


def _generate_trees(num_rs: int) -> Iterator[Tuple[int, ...]]:
    parents = [0] * num_rs

    def closes_cycle(rs: int) -> bool:
        node = parents[rs - 1]
        steps = 0
        while node != BS and node <= rs and steps <= num_rs:
            if node == rs:
                return True
            node = parents[node - 1]
            steps += 1
        return False

    def extend(rs: int) -> Iterator[Tuple[int, ...]]:
        if rs > num_rs:
            yield tuple(parents)
            return
        for parent in range(num_rs + 1):
            if parent == rs:
                continue
            parents[rs - 1] = parent
            if closes_cycle(rs):
                continue
            yield from extend(rs + 1)
        parents[rs - 1] = 0

    yield from extend(1)


def enumerate_trees(num_rs: int, cap: int = DEFAULT_ENUMERATION_CAP) -> TreeEnumeration:
    """
    Every parent vector forming a BS-rooted tree, in lexicographic order

    Args:
        num_rs: Number of RSs M
        cap: Largest M accepted

    Returns:
        TreeEnumeration with total (M+1)^(M-1)
    """
    if num_rs < 0:
        raise ValueError(f"num_rs must be nonnegative, got {num_rs}")
    _check_cap(num_rs, cap)
    return TreeEnumeration(num_rs=num_rs, total=cayley_count(num_rs), trees=_generate_trees(num_rs))


def objective_value(evaluator: NetworkEvaluator, objective: Objective) -> float:
    if objective is Objective.MEAN_RS_UTILITY:
        return evaluator.mean_rs_utility()
    return evaluator.mean_ms_utility()


def _assigned_trees(state: NetworkState, traffic: TrafficParams, radio: RadioParams,
                    cap: int) -> Iterator[Tuple[NetworkState, LinkGeometry]]:
    """Every tree over the placement of `state`, with MSs reassigned from scratch"""
    _check_cap(state.num_rs, cap)
    blank = state.without_assignments()
    geometry = LinkGeometry(blank, traffic, radio)
    for parents in enumerate_trees(state.num_rs, cap):
        yield assign_all_ms(blank.with_parents(parents), traffic, radio, geometry), geometry


def optimal_tree(state: NetworkState, objective: Objective, traffic: TrafficParams,
                 radio: RadioParams,
                 cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[NetworkState, float]:
    """
    Exhaustive search for the tree maximizing the objective

    MSs are reassigned on every tree. The first tree in lexicographic
    order wins ties.

    Returns:
        (best state, objective value)
    """
    best_state, best_value = None, -math.inf
    for candidate, geometry in _assigned_trees(state, traffic, radio, cap):
        value = objective_value(NetworkEvaluator(candidate, traffic, radio, geometry), objective)
        if value > best_value:
            best_state, best_value = candidate, value
    return best_state, best_value


@dataclass
class NashCensus:
    """Nash trees of one placement and the efficiency figures derived from them"""
    count: int
    trees: List[NetworkState]
    values: List[float]
    worst_value: float
    worst_tree: Optional[NetworkState]
    optimal_value: float
    optimal_tree: NetworkState
    total_trees: int

    @property
    def price_of_anarchy(self) -> float:
        """Optimal value over worst Nash value; nan without a usable Nash tree"""
        if self.count == 0 or not self.worst_value > 0:
            return math.nan
        return self.optimal_value / self.worst_value


def enumerate_nash_networks(state: NetworkState, traffic: TrafficParams, radio: RadioParams,
                            objective: Objective = Objective.MEAN_MS_UTILITY,
                            cap: int = DEFAULT_ENUMERATION_CAP) -> NashCensus:
    """
    Count the Nash trees over the placement of `state`

    Every tree gets fresh MS assignments and a pure equilibrium check with
    an empty history, so the count describes the game rather than a run.

    Returns:
        NashCensus with the Nash trees, the worst Nash value and the optimum
    """
    game = FormationGame(traffic, radio)
    nash_trees: List[NetworkState] = []
    nash_values: List[float] = []
    best_state, best_value = None, -math.inf
    total = 0
    for candidate, geometry in _assigned_trees(state, traffic, radio, cap):
        total += 1
        evaluator = NetworkEvaluator(candidate, traffic, radio, geometry)
        value = objective_value(evaluator, objective)
        if value > best_value:
            best_state, best_value = candidate, value
        if game.verify_nash(candidate, HistoryLedger(), evaluator) is Verdict.NASH:
            nash_trees.append(candidate)
            nash_values.append(value)

    if nash_trees:
        worst = min(range(len(nash_values)), key=lambda i: (nash_values[i], i))
        worst_value, worst_tree = nash_values[worst], nash_trees[worst]
    else:
        worst_value, worst_tree = math.nan, None
        logger.warning(f"No Nash network among {total} trees with {state.num_rs} RSs")

    return NashCensus(
        count=len(nash_trees),
        trees=nash_trees,
        values=nash_values,
        worst_value=worst_value,
        worst_tree=worst_tree,
        optimal_value=best_value,
        optimal_tree=best_state,
        total_trees=total,
    )
