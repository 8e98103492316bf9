#!/usr/bin/env python3
"""
Queueing - Traffic aggregation over the RS tree and M/D/1 path delay

Every link is treated as an independent M/D/1 queue fed by the Poisson
aggregate of the traffic crossing it, served at the Shannon capacity
divided by the packet size.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from phy.channel import snr, snr_matrix
from topology.model import (
    BS,
    NONE,
    DeltaMode,
    NetworkState,
    RadioParams,
    TrafficParams,
    path_to_bs,
    validate_tree,
)

logger = logging.getLogger(__name__)

UNSTABLE = math.inf


class CycleError(ValueError):
    """Raised when traffic cannot be aggregated because the parent relation loops"""


@dataclass(frozen=True)
class LinkLoad:
    """Offered load and service rate of one link queue"""
    arrival_rate: float
    service_rate: float

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ValueError(f"arrival_rate must be nonnegative, got {self.arrival_rate}")
        if self.service_rate < 0:
            raise ValueError(f"service_rate must be nonnegative, got {self.service_rate}")

    @property
    def stable(self) -> bool:
        return self.arrival_rate < self.service_rate


def shannon_capacity(link_snr: float, bandwidth: float) -> float:
    """Capacity W * log2(1 + snr) in bits/s"""
    if link_snr < 0:
        raise ValueError(f"SNR must be nonnegative, got {link_snr}")
    return bandwidth * math.log2(1.0 + link_snr)


def service_rate(link_snr: float, radio: RadioParams, traffic: TrafficParams) -> float:
    """
    Packet service rate of a link

    Args:
        link_snr: Received SNR of the link
        radio: Supplies the bandwidth W
        traffic: Supplies the packet size B

    Returns:
        W * log2(1 + snr) / B in packets/s (0 when snr is 0)
    """
    return shannon_capacity(link_snr, radio.bandwidth) / traffic.packet_bits


def md1_delay(arrival_rate: float, rate: float) -> float:
    """Mean M/D/1 sojourn time, UNSTABLE once the queue saturates"""
    if rate <= 0 or arrival_rate >= rate:
        return UNSTABLE
    if math.isinf(rate):
        return 0.0
    return arrival_rate / (2.0 * rate * (rate - arrival_rate)) + 1.0 / rate


def link_delay(load: LinkLoad) -> float:
    """
    Queueing plus transmission delay of one link

    Args:
        load: Arrival and service rates of the link

    Returns:
        psi / (2 mu (mu - psi)) + 1 / mu seconds, or UNSTABLE when psi >= mu
    """
    if not load.stable:
        return UNSTABLE
    return md1_delay(load.arrival_rate, load.service_rate)


@dataclass(frozen=True)
class NodeTraffic:
    """
    Traffic handled by one RS

    Attributes:
        own: Lambda, traffic injected by the RS (served MSs or HELLO)
        relayed: Delta, traffic received from downstream RSs
        served: number of MSs served by the RS
    """
    own: float
    relayed: float
    served: int

    @property
    def uplink(self) -> float:
        """Arrival rate on the link towards the parent"""
        return self.own + self.relayed


def aggregate_traffic(state: NetworkState, traffic: TrafficParams) -> Dict[int, NodeTraffic]:
    """
    Lambda and Delta of every RS

    An RS with served MSs injects their arrival rates. An RS with neither
    MSs nor children emits HELLO packets at the hello rate. An RS with
    children but no MSs injects nothing. Under DeltaMode.SUBTREE Delta is
    the whole downstream load; under DeltaMode.CHILDREN it is the sum of
    the direct children's Lambda.

    Args:
        state: Network snapshot (RSs with a NONE parent root their own fragment)
        traffic: Arrival rates and delta mode

    Returns:
        Mapping RS index -> NodeTraffic
    """
    report = validate_tree(state)
    if not report.acyclic:
        raise CycleError(f"parent relation has a cycle through RSs {sorted(report.cycle_members)}")

    served = [0] * (state.num_rs + 1)
    for serving in state.ms_serving:
        if serving is not None and serving != BS:
            served[serving] += 1

    children = {node: [] for node in range(state.num_rs + 1)}
    roots = []
    for rs, parent in enumerate(state.parents, start=1):
        if parent == NONE:
            roots.append(rs)
        else:
            children[parent].append(rs)

    # breadth-first from every root, then accumulate bottom-up
    order = []
    queue = deque(children[BS] + roots)
    while queue:
        node = queue.popleft()
        order.append(node)
        queue.extend(children[node])

    own = {}
    for rs in state.rs_indices():
        if served[rs] > 0:
            own[rs] = served[rs] * traffic.ms_arrival_rate
        elif not children[rs]:
            own[rs] = traffic.hello_rate
        else:
            own[rs] = 0.0

    result: Dict[int, NodeTraffic] = {}
    for rs in reversed(order):
        if traffic.delta_mode is DeltaMode.CHILDREN:
            relayed = sum(own[c] for c in children[rs])
        else:
            relayed = sum(result[c].uplink for c in children[rs])
        result[rs] = NodeTraffic(own=own[rs], relayed=relayed, served=served[rs])
    return result


def node_service_rates(state: NetworkState, radio: RadioParams,
                       traffic: TrafficParams) -> np.ndarray:
    """(M+1, M+1) service-rate matrix between the BS and RSs, in packets/s"""
    points = state.node_points()
    snrs = snr_matrix(points, points, radio.tx_power_rs, radio)
    return radio.bandwidth * np.log2(1.0 + snrs) / traffic.packet_bits


def path_delay(state: NetworkState, rs: int, traffic: TrafficParams, radio: RadioParams,
               loads: Optional[Dict[int, NodeTraffic]] = None,
               rates: Optional[np.ndarray] = None) -> float:
    """
    End-to-end delay of an RS uplink path

    Args:
        state: Network snapshot
        rs: RS index
        traffic: Traffic parameters
        radio: Radio parameters
        loads: Precomputed aggregate_traffic output
        rates: Precomputed node_service_rates output

    Returns:
        Sum of per-link delays, UNSTABLE if any link saturates or the RS is
        disconnected
    """
    path = path_to_bs(state, rs)
    if path is None:
        return UNSTABLE
    if loads is None:
        loads = aggregate_traffic(state, traffic)

    total = 0.0
    for sender, receiver in zip(path, path[1:]):
        if rates is not None:
            rate = float(rates[sender, receiver])
        else:
            d = state.position_of(sender).distance_to(state.position_of(receiver))
            rate = service_rate(snr(radio.tx_power_rs, d, radio), radio, traffic)
        delay = link_delay(LinkLoad(loads[sender].uplink, rate))
        if math.isinf(delay):
            return UNSTABLE
        total += delay
    return total
