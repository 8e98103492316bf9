#!/usr/bin/env python3
"""
Topology Model - Nodes, geometry, radio/traffic parameters and uplink trees

The RS tree is held as a parent vector: entry i-1 is the parent of RS i,
where 0 is the BS, 1..M are RSs and NONE marks a missing uplink. MSs are
addressed by their position k in the MS list and point at a serving node
(BS or RS) or None while unassigned.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

BS = 0
NONE = -1
D_MIN = 1.0

SeedLike = Union[int, np.random.SeedSequence, None]


class UnknownNodeError(KeyError):
    """Raised when a node index does not exist in the state"""


class NodeKind(Enum):
    """Role of a node in the network"""
    BS = "bs"
    RS = "rs"
    MS = "ms"


@dataclass(frozen=True, order=True)
class NodeId:
    """Typed node identity; MS indices start at M+1 so they never clash with RSs"""
    kind: NodeKind
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"index must be nonnegative, got {self.index}")
        if self.kind is NodeKind.BS and self.index != BS:
            raise ValueError("the BS always has index 0")

    @classmethod
    def rs(cls, index: int) -> "NodeId":
        return cls(NodeKind.RS, index)

    @classmethod
    def ms(cls, num_rs: int, k: int) -> "NodeId":
        return cls(NodeKind.MS, num_rs + 1 + k)


@dataclass(frozen=True)
class Position:
    """Planar position in meters"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class RadioParams:
    """Physical-layer parameters shared by every link"""
    tx_power_rs: float = 0.05
    tx_power_ms: float = 0.05
    noise_power: float = 1e-13
    bandwidth: float = 1e5
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        for name in ('tx_power_rs', 'tx_power_ms', 'noise_power', 'bandwidth'):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"{name} must be positive, got {value}")
        if not self.path_loss_exponent >= 2:
            raise ValueError(
                f"path_loss_exponent must be >= 2, got {self.path_loss_exponent}"
            )


class DeltaMode(Enum):
    """How relayed traffic is accumulated on an RS uplink"""
    SUBTREE = "subtree"
    CHILDREN = "children"


@dataclass(frozen=True)
class TrafficParams:
    """Traffic and game parameters"""
    packet_bits: int = 256
    ms_arrival_rate: float = 250.0
    hello_rate: float = 1.0
    beta: float = 0.7
    epsilon_fraction: float = 0.01
    history_threshold: int = 1
    critical_threshold: int = 2
    reform_period: float = 30.0
    delta_mode: DeltaMode = DeltaMode.SUBTREE
    rs_beta: Tuple[Tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if isinstance(self.packet_bits, bool) or int(self.packet_bits) != self.packet_bits:
            raise ValueError(f"packet_bits must be an integer, got {self.packet_bits}")
        if self.packet_bits < 1:
            raise ValueError(f"packet_bits must be >= 1, got {self.packet_bits}")
        if not self.ms_arrival_rate > 0:
            raise ValueError(f"ms_arrival_rate must be positive, got {self.ms_arrival_rate}")
        if not self.hello_rate > 0:
            raise ValueError(f"hello_rate must be positive, got {self.hello_rate}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if not self.epsilon_fraction >= 0:
            raise ValueError(
                f"epsilon_fraction must be >= 0, got {self.epsilon_fraction}"
            )
        if self.history_threshold < 1:
            raise ValueError(
                f"history_threshold must be >= 1, got {self.history_threshold}"
            )
        if self.critical_threshold < 1:
            raise ValueError(
                f"critical_threshold must be >= 1, got {self.critical_threshold}"
            )
        if not self.reform_period > 0:
            raise ValueError(f"reform_period must be positive, got {self.reform_period}")
        for rs, value in self.rs_beta:
            if rs < 1:
                raise ValueError(f"rs_beta keys must be RS indices >= 1, got {rs}")
            if not 0 < value < 1:
                raise ValueError(f"rs_beta[{rs}] must be in (0, 1), got {value}")

    def beta_for(self, rs: int) -> float:
        """Tradeoff parameter used by RS `rs` (per-RS override or the global beta)"""
        for index, value in self.rs_beta:
            if index == rs:
                return value
        return self.beta


@dataclass(frozen=True)
class NetworkState:
    """
    Immutable network snapshot.

    Attributes:
        bs: BS position
        rs_positions: position of RS i at index i-1
        ms_positions: position of MS k at index k
        parents: parent of RS i at index i-1 (BS, an RS index, or NONE)
        ms_serving: serving node of MS k (BS or RS index), None while unassigned
    """
    bs: Position
    rs_positions: Tuple[Position, ...] = ()
    ms_positions: Tuple[Position, ...] = ()
    parents: Tuple[int, ...] = ()
    ms_serving: Tuple[Optional[int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'rs_positions', tuple(self.rs_positions))
        object.__setattr__(self, 'ms_positions', tuple(self.ms_positions))
        object.__setattr__(self, 'parents', tuple(int(p) for p in self.parents))
        object.__setattr__(
            self, 'ms_serving',
            tuple(None if s is None else int(s) for s in self.ms_serving)
        )
        m = len(self.rs_positions)
        if len(self.parents) != m:
            raise ValueError(f"expected {m} parents, got {len(self.parents)}")
        if len(self.ms_serving) != len(self.ms_positions):
            raise ValueError(
                f"expected {len(self.ms_positions)} MS assignments, "
                f"got {len(self.ms_serving)}"
            )
        for rs, parent in enumerate(self.parents, start=1):
            if parent != NONE and not 0 <= parent <= m:
                raise ValueError(f"parent of RS {rs} out of range: {parent}")
        for k, serving in enumerate(self.ms_serving):
            if serving is not None and not 0 <= serving <= m:
                raise ValueError(f"serving node of MS {k} out of range: {serving}")

    @property
    def num_rs(self) -> int:
        return len(self.rs_positions)

    @property
    def num_ms(self) -> int:
        return len(self.ms_positions)

    def rs_indices(self) -> range:
        return range(1, self.num_rs + 1)

    def check_rs(self, rs: int) -> None:
        if not 1 <= rs <= self.num_rs:
            raise UnknownNodeError(f"unknown RS {rs} (network has {self.num_rs} RSs)")

    def parent(self, rs: int) -> int:
        self.check_rs(rs)
        return self.parents[rs - 1]

    def position_of(self, node: int) -> Position:
        """Position of the BS (0) or an RS (1..M)"""
        if node == BS:
            return self.bs
        self.check_rs(node)
        return self.rs_positions[node - 1]

    def children(self, node: int) -> Tuple[int, ...]:
        return tuple(rs for rs, p in enumerate(self.parents, start=1) if p == node)

    def descendants(self, rs: int) -> FrozenSet[int]:
        """All RSs whose uplink path passes through `rs`"""
        self.check_rs(rs)
        found = set()
        frontier = [rs]
        while frontier:
            node = frontier.pop()
            for child in self.children(node):
                if child not in found and child != rs:
                    found.add(child)
                    frontier.append(child)
        return frozenset(found)

    def served_ms(self, node: int) -> Tuple[int, ...]:
        return tuple(k for k, s in enumerate(self.ms_serving) if s == node)

    def canonical(self) -> Tuple[int, ...]:
        """Hashable tree identity: the parent vector"""
        return self.parents

    def node_points(self) -> np.ndarray:
        """(M+1, 2) array of BS and RS coordinates, row i is node i"""
        rows = [self.bs.as_tuple()] + [p.as_tuple() for p in self.rs_positions]
        return np.asarray(rows, dtype=float).reshape(-1, 2)

    def ms_points(self) -> np.ndarray:
        return np.asarray(
            [p.as_tuple() for p in self.ms_positions], dtype=float
        ).reshape(-1, 2)

    def with_parent(self, rs: int, parent: int) -> "NetworkState":
        self.check_rs(rs)
        parents = list(self.parents)
        parents[rs - 1] = parent
        return replace(self, parents=tuple(parents))

    def with_parents(self, parents: Sequence[int]) -> "NetworkState":
        return replace(self, parents=tuple(parents))

    def with_ms_serving(self, k: int, serving: Optional[int]) -> "NetworkState":
        if not 0 <= k < self.num_ms:
            raise UnknownNodeError(f"unknown MS {k} (network has {self.num_ms} MSs)")
        assignments = list(self.ms_serving)
        assignments[k] = serving
        return replace(self, ms_serving=tuple(assignments))

    def with_assignments(self, assignments: Sequence[Optional[int]]) -> "NetworkState":
        return replace(self, ms_serving=tuple(assignments))

    def without_assignments(self) -> "NetworkState":
        return replace(self, ms_serving=(None,) * self.num_ms)

    def with_positions(self, rs_positions: Optional[Iterable[Position]] = None,
                       ms_positions: Optional[Iterable[Position]] = None) -> "NetworkState":
        return replace(
            self,
            rs_positions=self.rs_positions if rs_positions is None else tuple(rs_positions),
            ms_positions=self.ms_positions if ms_positions is None else tuple(ms_positions),
        )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a tree validation"""
    connected: FrozenSet[int]
    disconnected: FrozenSet[int]
    cycle_members: FrozenSet[int]
    single_parent: bool = True

    @property
    def acyclic(self) -> bool:
        return not self.cycle_members

    @property
    def is_valid_tree(self) -> bool:
        return self.single_parent and self.acyclic and not self.disconnected


def validate_tree(state: NetworkState) -> ValidationReport:
    """
    Check that every RS reaches the BS over a cycle-free parent chain

    Args:
        state: Network snapshot (left untouched)

    Returns:
        ValidationReport listing connected, disconnected and cyclic RSs
    """
    outcome: Dict[int, bool] = {BS: True}
    cycle_members = set()

    for start in state.rs_indices():
        chain: List[int] = []
        on_chain = set()
        node = start
        while node not in outcome:
            if node == NONE:
                break
            if node in on_chain:
                cycle_members.update(chain[chain.index(node):])
                break
            chain.append(node)
            on_chain.add(node)
            node = state.parents[node - 1]
        reached = node != NONE and outcome.get(node, False) and node not in on_chain
        for visited in chain:
            outcome[visited] = reached

    connected = frozenset(rs for rs in state.rs_indices() if outcome.get(rs))
    disconnected = frozenset(state.rs_indices()) - connected
    return ValidationReport(
        connected=connected,
        disconnected=disconnected,
        cycle_members=frozenset(cycle_members),
    )


def path_to_bs(state: NetworkState, rs: int) -> Optional[Tuple[int, ...]]:
    """
    Uplink path of an RS

    Args:
        state: Network snapshot
        rs: RS index in 1..M

    Returns:
        (rs, parent, ..., BS) when connected, None when the chain hits NONE
        or a cycle
    """
    state.check_rs(rs)
    path = [rs]
    node = rs
    while node != BS:
        node = state.parents[node - 1]
        if node == NONE or node in path:
            return None
        path.append(node)
    return tuple(path)


def hop_counts(state: NetworkState) -> Dict[int, int]:
    """Number of RS-to-RS/BS links on each connected RS path"""
    hops = {}
    for rs in state.rs_indices():
        path = path_to_bs(state, rs)
        if path is not None:
            hops[rs] = len(path) - 1
    return hops


def derive_seed(seed: SeedLike, *keys: int) -> np.random.SeedSequence:
    """
    Child seed sequence addressed by `keys`

    Unlike SeedSequence.spawn this never mutates the parent, so the same
    (seed, keys) pair always yields the same stream.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy,
            spawn_key=tuple(seed.spawn_key) + tuple(keys),
            pool_size=seed.pool_size,
        )
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))


def deploy_random(area: Tuple[float, float], counts: Tuple[int, int],
                  seed: SeedLike = None) -> NetworkState:
    """
    Place the BS at the area centre and RSs/MSs uniformly at random

    RS and MS coordinates come from separate child streams so that the
    first k MSs coincide for any MS count drawn from the same seed (and
    likewise for RSs).

    Args:
        area: (width, height) in meters
        counts: (M, number of MSs)
        seed: int or SeedSequence

    Returns:
        Star-shaped NetworkState with every MS unassigned
    """
    width, height = (float(v) for v in area)
    num_rs, num_ms = counts
    if not (width > 0 and height > 0):
        raise ValueError(f"deployment area must have positive size, got {area}")
    if num_rs < 0 or num_ms < 0:
        raise ValueError(f"node counts must be nonnegative, got {counts}")

    rs_sequence = derive_seed(seed, 0)
    ms_sequence = derive_seed(seed, 1)
    high = np.array([width, height])
    rs_xy = np.random.default_rng(rs_sequence).uniform(0.0, high, size=(num_rs, 2))
    ms_xy = np.random.default_rng(ms_sequence).uniform(0.0, high, size=(num_ms, 2))

    state = NetworkState(
        bs=Position(width / 2.0, height / 2.0),
        rs_positions=tuple(Position(float(x), float(y)) for x, y in rs_xy),
        ms_positions=tuple(Position(float(x), float(y)) for x, y in ms_xy),
        parents=(BS,) * num_rs,
        ms_serving=(None,) * num_ms,
    )
    logger.debug(f"Deployed {num_rs} RSs and {num_ms} MSs over {width:g}x{height:g} m")
    return state
