# Relaytree - Channel Metric Tests

import math
import pytest
import sys
import os

import numpy as np

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from phy.channel import (
    ber_direct,
    ber_multihop,
    psr,
    snr,
    snr_matrix,
    split_degenerate,
)
from topology.model import RadioParams


def textbook_mrc_ber(gammas):
    """BER of BPSK maximal-ratio combining over branches with distinct mean SNRs"""
    total = 0.0
    for k, gk in enumerate(gammas):
        weight = 1.0
        for j, gj in enumerate(gammas):
            if j != k:
                weight *= gk / (gk - gj)
        total += weight * (1.0 - math.sqrt(gk / (1.0 + gk)))
    return 0.5 * total


class TestSnr:
    """Test path-loss SNR"""

    def setup_method(self):
        self.radio = RadioParams()

    def test_reference_values(self):
        """Test SNR at 800 m and 1600 m with the default radio"""
        assert snr(0.05, 1600.0, self.radio) == pytest.approx(122.0703125, rel=1e-12)
        assert snr(0.05, 800.0, self.radio) == pytest.approx(976.5625, rel=1e-12)

    def test_distance_floor(self):
        """Test that distances below one meter are floored"""
        assert snr(0.05, 0.0, self.radio) == snr(0.05, 1.0, self.radio)
        assert snr(0.05, 0.0, self.radio) == pytest.approx(5e11)

    def test_invalid_inputs(self):
        """Test that non-positive power and negative distance are refused"""
        with pytest.raises(ValueError):
            snr(0.0, 10.0, self.radio)
        with pytest.raises(ValueError):
            snr(0.05, -1.0, self.radio)

    def test_matrix_matches_scalar(self):
        """Test that the vectorized matrix agrees with the scalar SNR"""
        tx = np.array([[0.0, 0.0], [300.0, 400.0]])
        rx = np.array([[0.0, 0.0], [800.0, 0.0], [300.0, 400.0]])
        matrix = snr_matrix(tx, rx, 0.05, self.radio)
        assert matrix.shape == (2, 3)
        assert matrix[1, 0] == pytest.approx(snr(0.05, 500.0, self.radio))
        assert matrix[0, 1] == pytest.approx(snr(0.05, 800.0, self.radio))
        assert matrix[1, 2] == pytest.approx(5e11)


class TestBer:
    """Test direct and multi-hop BER"""

    def test_direct_limits(self):
        """Test BER at zero and infinite SNR"""
        assert ber_direct(0.0) == pytest.approx(0.5)
        assert ber_direct(math.inf) == 0.0

    def test_direct_matches_closed_form(self):
        """Test the cancellation-free form against the plain expression"""
        gamma = 122.0703125
        assert ber_direct(gamma) == pytest.approx(0.5 * (1 - math.sqrt(gamma / (1 + gamma))), rel=1e-9)

    def test_direct_high_snr_positive(self):
        """Test that very high SNR still gives a positive BER"""
        assert 0.0 < ber_direct(1e12) < 1e-12

    def test_negative_snr_rejected(self):
        """Test that a negative SNR is refused"""
        with pytest.raises(ValueError):
            ber_direct(-1.0)

    def test_single_hop_equals_direct(self):
        """Test that a two-node path reduces to the direct BER"""
        matrix = np.array([[0.0, 250.0], [0.0, 0.0]])
        assert ber_multihop(matrix) == pytest.approx(ber_direct(250.0), rel=1e-12)

    def test_two_hop_distinct_snrs(self):
        """Test a two-hop path against the textbook combining formula"""
        matrix = np.array([
            [0.0, 400.0, 100.0],
            [0.0, 0.0, 900.0],
            [0.0, 0.0, 0.0],
        ])
        expected = textbook_mrc_ber([400.0]) + textbook_mrc_ber([100.0, 900.0])
        assert ber_multihop(matrix) == pytest.approx(expected, rel=1e-9)

    def test_lower_triangle_ignored(self):
        """Test that only transmitter-before-receiver entries are read"""
        matrix = np.array([
            [0.0, 400.0, 100.0],
            [7.0, 0.0, 900.0],
            [3.0, 5.0, 0.0],
        ])
        clean = np.triu(matrix, k=1)
        assert ber_multihop(matrix) == ber_multihop(clean)

    def test_equal_snrs_near_equal_branch_limit(self):
        """Test that coinciding SNRs are split and land near the equal-branch BER"""
        gamma = 100.0
        matrix = np.array([
            [0.0, 400.0, gamma],
            [0.0, 0.0, gamma],
            [0.0, 0.0, 0.0],
        ])
        m = math.sqrt(gamma / (1 + gamma))
        equal_branch = ((1 - m) / 2) ** 2 * (2 + m)
        expected = ber_direct(400.0) + equal_branch
        result = ber_multihop(matrix)
        assert math.isfinite(result)
        assert result == pytest.approx(expected, rel=1e-4)

    def test_infinite_snr_receiver_skipped(self):
        """Test that a receiver with an infinite incoming SNR adds nothing"""
        matrix = np.array([[0.0, math.inf], [0.0, 0.0]])
        assert ber_multihop(matrix) == 0.0

    def test_clamped_to_one(self):
        """Test that a long, weak path is clamped at 1"""
        size = 6
        matrix = np.zeros((size, size))
        for k in range(size):
            for i in range(k + 1, size):
                matrix[k, i] = 1e-3 * (1 + k)
        assert ber_multihop(matrix) == 1.0

    def test_bad_shape(self):
        """Test that a non-square or single-node matrix is refused"""
        with pytest.raises(ValueError):
            ber_multihop(np.zeros((1, 1)))
        with pytest.raises(ValueError):
            ber_multihop(np.zeros((2, 3)))

    def test_path_matrix_along_points(self):
        """Test the SNR matrix of a three-point path"""
        radio = RadioParams()
        points = np.array([[1600.0, 0.0], [800.0, 0.0], [0.0, 0.0]])
        matrix = snr_matrix(points, points, 0.05, radio)
        assert matrix[0, 1] == pytest.approx(976.5625)
        assert matrix[0, 2] == pytest.approx(122.0703125)


class TestSplitDegenerate:
    """Test separation of coinciding SNRs"""

    def test_distinct_values_unchanged(self):
        """Test that distinct SNRs pass through"""
        assert split_degenerate([1.0, 2.0, 3.0]) == [1.0, 2.0, 3.0]

    def test_alternating_offsets(self):
        """Test the +1, -1 multiplier sequence"""
        result = split_degenerate([5.0, 5.0, 5.0])
        assert result[0] == 5.0
        assert result[1] == pytest.approx(5.0 * (1 + 1e-6), rel=1e-15)
        assert result[2] == pytest.approx(5.0 * (1 - 1e-6), rel=1e-15)
        assert len(set(result)) == 3


class TestPsr:
    """Test packet success rate"""

    def test_values(self):
        """Test PSR at simple BERs"""
        assert psr(0.0, 256) == 1.0
        assert psr(0.5, 1) == 0.5
        assert psr(1.0, 256) == 0.0
        assert psr(1e-3, 256) == pytest.approx((1 - 1e-3) ** 256)

    def test_invalid(self):
        """Test that BER outside [0, 1] and empty packets are refused"""
        with pytest.raises(ValueError):
            psr(1.5, 256)
        with pytest.raises(ValueError):
            psr(0.1, 0)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
