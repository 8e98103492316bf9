#!/usr/bin/env python3
"""
Utilities - Throughput/delay power of RSs and MSs, and MS serving-node choice

RS utility is (Lambda * psr)^beta / delay^(1 - beta), with the HELLO rate
standing in for Lambda when the RS serves no MS. MS utility uses the
access-link PSR times the serving RS's path PSR, and the access-link
delay plus the serving RS's path delay.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from phy.channel import ber_direct, ber_multihop, psr, snr_matrix
from topology.model import BS, NetworkState, RadioParams, TrafficParams, path_to_bs
from traffic.queueing import (
    UNSTABLE,
    LinkLoad,
    NodeTraffic,
    aggregate_traffic,
    link_delay,
    path_delay,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathMetrics:
    """BER, PSR, delay and utility seen by one RS or MS"""
    ber: float
    psr: float
    delay: float
    utility: float

    @classmethod
    def disconnected(cls) -> "PathMetrics":
        return cls(ber=1.0, psr=0.0, delay=UNSTABLE, utility=0.0)


def power(throughput: float, delay: float, beta: float) -> float:
    """throughput^beta / delay^(1 - beta); 0 for an infinite delay"""
    if math.isinf(delay):
        return 0.0
    return throughput ** beta / delay ** (1.0 - beta)


class LinkGeometry:
    """
    Position-only quantities shared by every topology over the same placement:
    SNR and service-rate matrices, and a cache of path BER values.
    """

    def __init__(self, state: NetworkState, traffic: TrafficParams, radio: RadioParams):
        self.num_rs = state.num_rs
        self.num_ms = state.num_ms
        self.positions_key = (state.bs, state.rs_positions, state.ms_positions)
        nodes = state.node_points()
        self.node_snr = snr_matrix(nodes, nodes, radio.tx_power_rs, radio)
        self.node_rate = radio.bandwidth * np.log2(1.0 + self.node_snr) / traffic.packet_bits
        self.ms_snr = snr_matrix(state.ms_points(), nodes, radio.tx_power_ms, radio)
        self.ms_rate = radio.bandwidth * np.log2(1.0 + self.ms_snr) / traffic.packet_bits
        self._path_ber: Dict[Tuple[int, ...], float] = {}

    def matches(self, state: NetworkState) -> bool:
        return self.positions_key == (state.bs, state.rs_positions, state.ms_positions)

    def path_ber(self, path: Tuple[int, ...]) -> float:
        ber = self._path_ber.get(path)
        if ber is None:
            index = np.asarray(path)
            ber = ber_multihop(self.node_snr[np.ix_(index, index)])
            self._path_ber[path] = ber
        return ber


class NetworkEvaluator:
    """Evaluates utilities on one topology, reusing geometry across what-ifs"""

    def __init__(self, state: NetworkState, traffic: TrafficParams, radio: RadioParams,
                 geometry: Optional[LinkGeometry] = None):
        self.state = state
        self.traffic = traffic
        self.radio = radio
        if geometry is None or not geometry.matches(state):
            geometry = LinkGeometry(state, traffic, radio)
        self.geometry = geometry
        self._loads: Optional[Dict[int, NodeTraffic]] = None
        self._rs_metrics: Dict[int, PathMetrics] = {}

    def with_state(self, state: NetworkState) -> "NetworkEvaluator":
        """Evaluator for another topology over the same placement"""
        return NetworkEvaluator(state, self.traffic, self.radio, self.geometry)

    @property
    def loads(self) -> Dict[int, NodeTraffic]:
        if self._loads is None:
            self._loads = aggregate_traffic(self.state, self.traffic)
        return self._loads

    def rs_metrics(self, rs: int) -> PathMetrics:
        cached = self._rs_metrics.get(rs)
        if cached is not None:
            return cached
        path = path_to_bs(self.state, rs)
        if path is None:
            metrics = PathMetrics.disconnected()
        else:
            ber = self.geometry.path_ber(path)
            success = psr(ber, self.traffic.packet_bits)
            delay = path_delay(self.state, rs, self.traffic, self.radio,
                               loads=self.loads, rates=self.geometry.node_rate)
            load = self.loads[rs]
            offered = load.own if load.served > 0 else self.traffic.hello_rate
            utility = power(offered * success, delay, self.traffic.beta_for(rs))
            metrics = PathMetrics(ber=ber, psr=success, delay=delay, utility=utility)
        self._rs_metrics[rs] = metrics
        return metrics

    def rs_utility(self, rs: int) -> float:
        return self.rs_metrics(rs).utility

    def ms_metrics(self, k: int, serving: Optional[int] = None) -> PathMetrics:
        """
        Metrics of MS k when served by `serving`

        The evaluation runs on the topology with MS k already attached to
        `serving`, so the MS's own traffic loads the candidate's path.

        Args:
            k: MS index
            serving: BS or RS index; defaults to the current assignment

        Returns:
            PathMetrics of the MS
        """
        if serving is None:
            serving = self.state.ms_serving[k]
            if serving is None:
                raise ValueError(f"MS {k} is not assigned to any node")
        if self.state.ms_serving[k] != serving:
            return self.with_state(self.state.with_ms_serving(k, serving)).ms_metrics(k, serving)

        traffic = self.traffic
        access_ber = ber_direct(float(self.geometry.ms_snr[k, serving]))
        access_rate = float(self.geometry.ms_rate[k, serving])
        access_delay = link_delay(LinkLoad(traffic.ms_arrival_rate, access_rate))
        if serving == BS:
            ber, delay = access_ber, access_delay
        else:
            upstream = self.rs_metrics(serving)
            ber = 1.0 - (1.0 - access_ber) * (1.0 - upstream.ber)
            delay = access_delay + upstream.delay
        if math.isinf(delay):
            return PathMetrics(ber=ber, psr=psr(ber, traffic.packet_bits), delay=UNSTABLE, utility=0.0)
        success = psr(access_ber, traffic.packet_bits)
        if serving != BS:
            success *= self.rs_metrics(serving).psr
        utility = power(traffic.ms_arrival_rate * success, delay, traffic.beta)
        return PathMetrics(ber=ber, psr=success, delay=delay, utility=utility)

    def ms_utility(self, k: int, serving: Optional[int] = None) -> float:
        return self.ms_metrics(k, serving).utility

    def rs_utilities(self) -> Dict[int, float]:
        return {rs: self.rs_utility(rs) for rs in self.state.rs_indices()}

    def mean_rs_utility(self) -> float:
        if self.state.num_rs == 0:
            return 0.0
        return float(np.mean([self.rs_utility(rs) for rs in self.state.rs_indices()]))

    def mean_ms_utility(self) -> float:
        values = [self.ms_utility(k) for k, s in enumerate(self.state.ms_serving) if s is not None]
        if not values:
            return 0.0
        return float(np.mean(values))


def rs_utility(state: NetworkState, rs: int, traffic: TrafficParams,
               radio: RadioParams) -> PathMetrics:
    """Metrics and utility of RS `rs` on the current tree"""
    state.check_rs(rs)
    return NetworkEvaluator(state, traffic, radio).rs_metrics(rs)


def ms_psr(state: NetworkState, ms: int, serving: int, traffic: TrafficParams,
           radio: RadioParams) -> float:
    """Access-link PSR times the serving RS's path PSR (1 for the BS)"""
    return NetworkEvaluator(state, traffic, radio).ms_metrics(ms, serving).psr


def ms_utility(state: NetworkState, ms: int, serving: int, traffic: TrafficParams,
               radio: RadioParams) -> PathMetrics:
    """Metrics and utility of MS `ms` when attached to `serving`"""
    return NetworkEvaluator(state, traffic, radio).ms_metrics(ms, serving)


def assign_ms(state: NetworkState, ms: int, traffic: TrafficParams, radio: RadioParams,
              evaluator: Optional[NetworkEvaluator] = None) -> int:
    """
    Serving node that maximizes the MS utility on the current tree

    Candidates are the BS and every RS, scanned in index order; only a
    strictly better utility displaces the incumbent, so ties go to the
    lowest index.

    Returns:
        BS (0) or an RS index
    """
    if evaluator is None or evaluator.state is not state:
        evaluator = NetworkEvaluator(state, traffic, radio,
                                     evaluator.geometry if evaluator else None)
    best_node, best_utility = BS, -math.inf
    for candidate in range(state.num_rs + 1):
        utility = evaluator.ms_utility(ms, candidate)
        if utility > best_utility:
            best_node, best_utility = candidate, utility
    return best_node


def assign_all_ms(state: NetworkState, traffic: TrafficParams, radio: RadioParams,
                  geometry: Optional[LinkGeometry] = None) -> NetworkState:
    """
    Let every MS pick its serving node, committing in MS index order

    Each MS is evaluated against the assignments already committed by the
    MSs before it (and the current assignments of those after it).
    """
    current = state
    evaluator = NetworkEvaluator(current, traffic, radio, geometry)
    for k in range(state.num_ms):
        choice = assign_ms(current, k, traffic, radio, evaluator)
        if choice != current.ms_serving[k]:
            current = current.with_ms_serving(k, choice)
            evaluator = evaluator.with_state(current)
    return current
