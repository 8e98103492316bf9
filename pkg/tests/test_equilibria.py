# Relaytree - Equilibrium Tests

from collections import Counter

import pytest
import sys
import os

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from formation.game import DEFAULT_MAX_ITERATIONS, FormationGame, HistoryLedger, Verdict
from formation.utility import NetworkEvaluator, assign_all_ms
from topology.model import BS, RadioParams, TrafficParams, deploy_random, derive_seed, validate_tree

RADIO = RadioParams()
TRAFFIC = TrafficParams()
AREA = (3000.0, 3000.0)


def improving_deviations(state, traffic=TRAFFIC, radio=RADIO):
    """
    Every feasible, strictly improving parent change of a single RS

    Candidates are all nodes; a candidate is kept only if the changed parent
    vector is still a BS-rooted tree, the new parent (unless it is the BS)
    keeps at least (1 - epsilon) of its utility, and the mover gains.
    """
    base = NetworkEvaluator(state, traffic, radio)
    found = []
    for rs in state.rs_indices():
        for parent in range(state.num_rs + 1):
            if parent in (rs, state.parent(rs)):
                continue
            moved = state.with_parent(rs, parent)
            if not validate_tree(moved).is_valid_tree:
                continue
            after = base.with_state(moved)
            if parent != BS:
                before = base.rs_utility(parent)
                if after.rs_utility(parent) < before - traffic.epsilon_fraction * before:
                    continue
            if after.rs_utility(rs) > base.rs_utility(rs):
                found.append((rs, parent, moved.canonical()))
    return found


def small_instances(count, seed=2009):
    """Placements of 2 to 6 RSs with up to 12 MSs, MSs attached to their best node"""
    for index in range(count):
        num_rs = 2 + index % 5
        num_ms = (3 * index) % 13
        deployed = deploy_random(AREA, (num_rs, num_ms), derive_seed(seed, index))
        yield index, assign_all_ms(deployed, TRAFFIC, RADIO)


class TestNashVerdicts:
    """Test run verdicts against exhaustive deviation checks"""

    def setup_method(self):
        self.game = FormationGame(TRAFFIC, RADIO)

    def test_verdicts_hold_under_exhaustive_search(self):
        """Test that NASH trees admit no deviation and history-induced ones only revisited trees"""
        nash_runs = 0
        instances = list(small_instances(25))
        for index, start in instances:
            final, trace = self.game.run(start, derive_seed(2009, index, 1))
            assert not trace.cap_reached
            assert trace.verdict in (Verdict.NASH, Verdict.HISTORY_INDUCED_NASH)
            deviations = improving_deviations(final)
            if trace.verdict is Verdict.NASH:
                nash_runs += 1
                assert deviations == []
                assert self.game.verify_nash(final, HistoryLedger()) is Verdict.NASH
            else:
                visits = Counter(trace.history)
                assert deviations
                for _, _, graph in deviations:
                    assert visits[graph] > TRAFFIC.history_threshold
        assert nash_runs > 0

    def test_deviation_search_agrees_with_game_options(self):
        """Test that the brute-force search and the game see the same improving moves"""
        for index, start in small_instances(10, seed=404):
            expected = {
                (rs, option.strategy.new_parent)
                for rs in start.rs_indices()
                for option in self.game.improving_options(start, rs)
            }
            found = {(rs, parent) for rs, parent, _ in improving_deviations(start)}
            assert found == expected

    def test_star_without_ms_is_checked_like_any_tree(self):
        """Test a single-RS network, where the star is the only tree"""
        start = deploy_random(AREA, (1, 0), seed=3)
        final, trace = self.game.run(start, seed=3)
        assert final.parents == (BS,)
        assert trace.verdict is Verdict.NASH
        assert improving_deviations(final) == []


class TestCommittedMoves:
    """Test every committed move after the fact"""

    def setup_method(self):
        self.game = FormationGame(TRAFFIC, RADIO)

    def test_replayed_moves_are_feasible_and_improving(self):
        """Test each move: still a tree, mover gains, new parent keeps (1 - epsilon) of its utility"""
        epsilon = TRAFFIC.epsilon_fraction
        replayed = 0
        for index, start in small_instances(25, seed=77):
            final, trace = self.game.run(start, derive_seed(77, index, 1))
            state = start
            for move in trace.moves:
                assert state.parent(move.actor) == move.old_parent
                before = NetworkEvaluator(state, TRAFFIC, RADIO)
                moved = state.with_parent(move.actor, move.new_parent)
                assert validate_tree(moved).is_valid_tree
                after = NetworkEvaluator(moved, TRAFFIC, RADIO)

                assert before.rs_utility(move.actor) == pytest.approx(move.utility_before, rel=1e-12)
                assert after.rs_utility(move.actor) == pytest.approx(move.utility_after, rel=1e-12)
                assert after.rs_utility(move.actor) > before.rs_utility(move.actor)
                if move.new_parent != BS:
                    kept = before.rs_utility(move.new_parent)
                    assert after.rs_utility(move.new_parent) >= kept - epsilon * kept
                state = moved
                replayed += 1
            assert state == final
        assert replayed > 0

    def test_moves_follow_iteration_order(self):
        """Test that iteration numbers never decrease along the trace"""
        for index, start in small_instances(10, seed=12):
            _, trace = self.game.run(start, derive_seed(12, index, 1))
            iterations = [move.iteration for move in trace.moves]
            assert iterations == sorted(iterations)
            assert all(1 <= i <= trace.iteration_count for i in iterations)


class TestConvergence:
    """Test termination of the formation dynamics at the default parameters"""

    @pytest.mark.parametrize('num_rs', [5, 10, 15])
    def test_terminates_in_an_equilibrium(self, num_rs):
        """Test that HELLO-only formation ends in a Nash or history-induced Nash tree"""
        game = FormationGame(TRAFFIC, RADIO)
        for index in range(8):
            start = deploy_random(AREA, (num_rs, 0), derive_seed(num_rs, index))
            final, trace = game.run(start, derive_seed(num_rs, index, 1))
            assert not trace.cap_reached
            assert trace.iteration_count < DEFAULT_MAX_ITERATIONS
            assert trace.verdict in (Verdict.NASH, Verdict.HISTORY_INDUCED_NASH)
            assert validate_tree(final).is_valid_tree
            # the last iteration commits nothing
            assert trace.iterations[-1] == []


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
