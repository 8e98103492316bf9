# Relaytree - Baseline and Enumeration Tests

import math
import pytest
import sys
import os

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from baselines.trees import (
    EnumerationCapError,
    Objective,
    cayley_count,
    enumerate_nash_networks,
    enumerate_trees,
    labeled_tree_count,
    nearest_neighbor_tree,
    objective_value,
    optimal_tree,
    star_tree,
)
from formation.utility import NetworkEvaluator, assign_all_ms
from topology.model import (
    BS,
    NetworkState,
    Position,
    RadioParams,
    TrafficParams,
    deploy_random,
    validate_tree,
)


def two_rs_line():
    return NetworkState(
        bs=Position(0.0, 0.0),
        rs_positions=[Position(1600.0, 0.0), Position(800.0, 0.0)],
        parents=(0, 0),
    )


class TestCounts:
    """Test closed-form tree counts"""

    @pytest.mark.parametrize('num_rs,expected', [(0, 1), (1, 1), (2, 3), (3, 16), (5, 1296)])
    def test_cayley(self, num_rs, expected):
        """Test (M+1)^(M-1)"""
        assert cayley_count(num_rs) == expected

    def test_labeled(self):
        """Test M^(M-2)"""
        assert labeled_tree_count(5) == 125
        assert labeled_tree_count(1) == 1


class TestEnumeration:
    """Test exhaustive tree enumeration"""

    def test_two_rs_order(self):
        """Test lexicographic order for two RSs"""
        assert list(enumerate_trees(2)) == [(0, 0), (0, 1), (2, 0)]

    @pytest.mark.parametrize('num_rs', [0, 1, 3, 4])
    def test_count_and_validity(self, num_rs):
        """Test that every tree is valid and the total matches the closed form"""
        enumeration = enumerate_trees(num_rs)
        trees = list(enumeration)
        assert len(trees) == enumeration.total == cayley_count(num_rs)
        assert len(set(trees)) == len(trees)
        for parents in trees:
            state = NetworkState(
                bs=Position(0.0, 0.0),
                rs_positions=[Position(float(i), 0.0) for i in range(num_rs)],
                parents=parents,
            )
            assert validate_tree(state).is_valid_tree

    def test_cap(self):
        """Test that enumeration above the cap is refused"""
        with pytest.raises(EnumerationCapError):
            enumerate_trees(9)
        with pytest.raises(EnumerationCapError):
            enumerate_trees(4, cap=3)

    def test_cap_error_is_value_error(self):
        """Test that callers catching ValueError also catch the cap"""
        assert issubclass(EnumerationCapError, ValueError)


class TestReferenceTrees:
    """Test the direct and nearest-neighbor baselines"""

    def setup_method(self):
        self.state = NetworkState(
            bs=Position(0.0, 0.0),
            rs_positions=[Position(1600.0, 0.0), Position(800.0, 0.0)],
            ms_positions=[Position(1590.0, 0.0), Position(5.0, 0.0), Position(900.0, 0.0)],
            parents=(0, 0),
            ms_serving=(None, None, None),
        )

    def test_star_sends_ms_to_bs(self):
        """Test that direct transmission puts every MS on the BS"""
        direct = star_tree(self.state)
        assert direct.ms_serving == (BS, BS, BS)
        assert direct.parents == self.state.parents

    def test_nearest_neighbor(self):
        """Test nearest-node linking for RSs and MSs"""
        nearest = nearest_neighbor_tree(self.state)
        assert nearest.parents == (2, 0)
        assert nearest.ms_serving == (1, BS, 2)
        assert validate_tree(nearest).is_valid_tree

    def test_nearest_neighbor_random_is_tree(self):
        """Test that nearest-neighbor output is always a tree"""
        state = deploy_random((3000.0, 3000.0), (15, 10), seed=4)
        assert validate_tree(nearest_neighbor_tree(state)).is_valid_tree


class TestOptimalAndCensus:
    """Test the optimum search and the Nash census"""

    def setup_method(self):
        self.radio = RadioParams()
        self.traffic = TrafficParams()

    def test_two_rs_census_by_rs_utility(self):
        """Test that the relay chain is the only Nash tree and is optimal"""
        census = enumerate_nash_networks(
            two_rs_line(), self.traffic, self.radio, Objective.MEAN_RS_UTILITY
        )
        assert census.count == 1
        assert census.trees[0].parents == (2, 0)
        assert census.total_trees == 3
        assert census.optimal_tree.parents == (2, 0)
        assert census.price_of_anarchy == pytest.approx(1.0)

    def test_poa_undefined_without_ms(self):
        """Test that a zero worst value leaves the price of anarchy undefined"""
        census = enumerate_nash_networks(two_rs_line(), self.traffic, self.radio)
        assert census.count == 1
        assert math.isnan(census.price_of_anarchy)

    def test_optimum_dominates_star(self):
        """Test that the optimum is at least as good as the star with the same MS rule"""
        state = deploy_random((3000.0, 3000.0), (4, 12), seed=8)
        best, value = optimal_tree(state, Objective.MEAN_MS_UTILITY, self.traffic, self.radio)
        assert validate_tree(best).is_valid_tree
        assert None not in best.ms_serving
        star = assign_all_ms(state, self.traffic, self.radio)
        assert value >= objective_value(
            NetworkEvaluator(star, self.traffic, self.radio), Objective.MEAN_MS_UTILITY
        )

    def test_census_on_random_placement(self):
        """Test census bookkeeping on a small loaded network"""
        state = deploy_random((3000.0, 3000.0), (4, 12), seed=8)
        census = enumerate_nash_networks(state, self.traffic, self.radio)
        _, optimum = optimal_tree(state, Objective.MEAN_MS_UTILITY, self.traffic, self.radio)
        assert census.total_trees == cayley_count(4)
        assert 0 <= census.count <= census.total_trees
        assert census.optimal_value == pytest.approx(optimum)
        if census.count and census.worst_value > 0:
            assert census.price_of_anarchy >= 1.0
            assert census.worst_value == min(census.values)

    def test_optimal_tree_cap(self):
        """Test that the optimum search honors the cap"""
        state = deploy_random((3000.0, 3000.0), (9, 0), seed=0)
        with pytest.raises(EnumerationCapError):
            optimal_tree(state, Objective.MEAN_RS_UTILITY, self.traffic, self.radio)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
