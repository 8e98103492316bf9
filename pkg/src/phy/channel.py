#!/usr/bin/env python3
"""
Channel Metrics - SNR, BER and packet success rate

Links use a distance-power path-loss law with distances floored at D_MIN.
Multi-hop paths use the closed-form upper bound on the end-to-end BER of
decoded relaying, where every receiver on the path combines the signals of
all upstream transmitters.
"""
import logging
import math
from typing import List, Sequence

import numpy as np

from topology.model import D_MIN, RadioParams

logger = logging.getLogger(__name__)

LinkSnr = float

DEGENERATE_TOLERANCE = 1e-9
SPLIT_STEP = 1e-6


def snr(tx_power: float, d: float, radio: RadioParams) -> LinkSnr:
    """
    Average received SNR of a link

    Args:
        tx_power: Transmit power in watts
        d: Link length in meters (floored at D_MIN)
        radio: Noise power and path-loss exponent

    Returns:
        Linear SNR tx_power * d^-mu / noise
    """
    if not tx_power > 0:
        raise ValueError(f"tx_power must be positive, got {tx_power}")
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    d = max(d, D_MIN)
    return tx_power * d ** (-radio.path_loss_exponent) / radio.noise_power


def snr_matrix(tx_points: np.ndarray, rx_points: np.ndarray, tx_power: float,
               radio: RadioParams) -> np.ndarray:
    """SNR from every transmitter row to every receiver row, shape (n_tx, n_rx)"""
    if not tx_power > 0:
        raise ValueError(f"tx_power must be positive, got {tx_power}")
    tx = np.asarray(tx_points, dtype=float).reshape(-1, 2)
    rx = np.asarray(rx_points, dtype=float).reshape(-1, 2)
    distance = np.hypot(
        tx[:, None, 0] - rx[None, :, 0],
        tx[:, None, 1] - rx[None, :, 1],
    )
    distance = np.maximum(distance, D_MIN)
    return tx_power * distance ** (-radio.path_loss_exponent) / radio.noise_power


def _tail(gamma: float) -> float:
    # 1 - sqrt(g/(1+g)) without cancellation at high SNR
    return (1.0 / (1.0 + gamma)) / (1.0 + math.sqrt(gamma / (1.0 + gamma)))


def ber_direct(gamma: LinkSnr) -> float:
    """
    BER of a single BPSK link in Rayleigh fading

    Args:
        gamma: Average received SNR (>= 0, may be inf)

    Returns:
        0.5 * (1 - sqrt(gamma / (1 + gamma))), in [0, 0.5]
    """
    if gamma < 0 or math.isnan(gamma):
        raise ValueError(f"SNR must be nonnegative, got {gamma}")
    if math.isinf(gamma):
        return 0.0
    return 0.5 * _tail(gamma)


def _is_close(a: float, b: float) -> bool:
    return abs(a - b) <= DEGENERATE_TOLERANCE * max(abs(a), abs(b))


def _split_offset(bump: int) -> int:
    # +1, -1, +2, -2, ...
    magnitude = (bump + 1) // 2
    return magnitude if bump % 2 == 1 else -magnitude


def split_degenerate(gammas: Sequence[float]) -> List[float]:
    """
    Separate SNRs that coincide within DEGENERATE_TOLERANCE

    Values are visited in transmitter order; a value colliding with an
    earlier one is scaled by (1 + c * SPLIT_STEP) with c running through
    +1, -1, +2, -2, ... Distinct inputs are returned unchanged.
    """
    result: List[float] = []
    bump = 0
    for gamma in gammas:
        value = float(gamma)
        attempts = 0
        while any(_is_close(value, earlier) for earlier in result):
            bump += 1
            attempts += 1
            value = float(gamma) * (1.0 + _split_offset(bump) * SPLIT_STEP)
            if attempts > 2 * len(gammas) + 2:
                raise ValueError(f"cannot separate degenerate SNR values {list(gammas)}")
        result.append(value)
    return result


def ber_multihop(path_snrs: np.ndarray) -> float:
    """
    Upper bound on the end-to-end BER of a decoded-relaying path

    Args:
        path_snrs: Square matrix over the path nodes V1..V(n+1); entry
            [k, i] is the SNR from transmitter V(k+1) to receiver V(i+1).
            Only the strictly upper triangle is read.

    Returns:
        Sum over receivers of the per-receiver diversity bound, clamped
        to [0, 1]
    """
    snrs = np.asarray(path_snrs, dtype=float)
    size = snrs.shape[0]
    if snrs.ndim != 2 or snrs.shape[1] != size or size < 2:
        raise ValueError(f"path SNR matrix must be square with >= 2 nodes, got {snrs.shape}")

    total = 0.0
    for receiver in range(1, size):
        incoming = [float(snrs[k, receiver]) for k in range(receiver)]
        if any(math.isinf(g) for g in incoming):
            continue
        if any(g < 0 or math.isnan(g) for g in incoming):
            raise ValueError(f"invalid SNR values {incoming}")
        gammas = split_degenerate(incoming)
        term = 0.0
        for k, gamma_k in enumerate(gammas):
            weight = 1.0
            for j, gamma_j in enumerate(gammas):
                if j != k:
                    weight *= gamma_k / (gamma_k - gamma_j)
            term += weight * _tail(gamma_k)
        total += 0.5 * term
    return min(1.0, max(0.0, total))


def psr(ber: float, packet_bits: int) -> float:
    """
    Packet success rate of an uncoded packet

    Args:
        ber: Bit error rate in [0, 1]
        packet_bits: Packet size B >= 1

    Returns:
        (1 - ber) ** B
    """
    if not 0.0 <= ber <= 1.0:
        raise ValueError(f"ber must be in [0, 1], got {ber}")
    if packet_bits < 1:
        raise ValueError(f"packet_bits must be >= 1, got {packet_bits}")
    return (1.0 - ber) ** packet_bits
