# Relaytree - Formation Game Tests

import pytest
import sys
import os

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from formation.game import (
    FormationGame,
    HistoryLedger,
    Strategy,
    Verdict,
    best_response,
    feasible_strategies,
    run_formation,
    verify_nash,
)
from formation.utility import NetworkEvaluator, assign_all_ms
from topology.model import (
    NetworkState,
    Position,
    RadioParams,
    TrafficParams,
    deploy_random,
    validate_tree,
)


def line(distances, parents=None):
    """RS i at distances[i-1] meters east of the BS"""
    return NetworkState(
        bs=Position(0.0, 0.0),
        rs_positions=[Position(d, 0.0) for d in distances],
        parents=parents or (0,) * len(distances),
    )


class TestStrategy:
    """Test strategy values"""

    def test_self_link_rejected(self):
        """Test that an RS cannot pick itself"""
        with pytest.raises(ValueError):
            Strategy(1, 1)

    def test_apply(self):
        """Test that applying a strategy replaces one parent"""
        state = line([1600.0, 800.0])
        assert Strategy(1, 2).apply(state).parents == (2, 0)


class TestHistoryLedger:
    """Test visit counting"""

    def test_counts_and_trail(self):
        """Test that every record bumps the count and extends the trail"""
        ledger = HistoryLedger()
        assert ledger.record((0, 0)) == 1
        assert ledger.record([0, 0]) == 2
        ledger.record((2, 0))
        assert ledger.count((0, 0)) == 2
        assert ledger.count((1, 1)) == 0
        assert ledger.trail == [(0, 0), (0, 0), (2, 0)]
        assert len(ledger) == 3


class TestTwoRsLine:
    """Test the dynamics on RS 2 at 800 m and RS 1 at 1600 m"""

    def setup_method(self):
        self.radio = RadioParams()
        self.traffic = TrafficParams()
        self.star = line([1600.0, 800.0])

    def test_feasible_strategies(self):
        """Test that both relaying moves keep the relay's utility and are feasible"""
        assert feasible_strategies(self.star, 1, self.traffic, self.radio) == frozenset(
            {Strategy(1, 0), Strategy(1, 2)}
        )
        assert feasible_strategies(self.star, 2, self.traffic, self.radio) == frozenset(
            {Strategy(2, 0), Strategy(2, 1)}
        )

    def test_descendants_excluded(self):
        """Test that an RS cannot attach below itself"""
        chain = self.star.with_parents((2, 0))
        options = FormationGame(self.traffic, self.radio).move_options(chain, 2)
        assert options == []

    def test_best_response_far_rs_relays(self):
        """Test that RS 1 relays through RS 2 and RS 2 stays put"""
        ledger = HistoryLedger()
        assert best_response(self.star, 1, ledger, self.traffic, self.radio) == Strategy(1, 2)
        assert best_response(self.star, 2, ledger, self.traffic, self.radio) is None

    def test_best_response_blocked_by_history(self):
        """Test that a tree visited more than the threshold is skipped"""
        ledger = HistoryLedger()
        ledger.record((2, 0))
        assert best_response(self.star, 1, ledger, self.traffic, self.radio) == Strategy(1, 2)
        ledger.record((2, 0))
        assert best_response(self.star, 1, ledger, self.traffic, self.radio) is None

    @pytest.mark.parametrize('seed', [0, 1, 2, 3])
    def test_run_reaches_chain(self, seed):
        """Test that every turn order converges to the chain in two iterations"""
        final, trace = run_formation(self.star, self.traffic, self.radio, seed=seed)
        assert final.parents == (2, 0)
        assert trace.verdict is Verdict.NASH
        assert trace.iteration_count == 2
        assert trace.action_count == 1
        assert trace.iterations[-1] == []
        assert trace.history == [(2, 0), (2, 0)]

    def test_move_record(self):
        """Test the record of the committed move"""
        _, trace = run_formation(self.star, self.traffic, self.radio, seed=0)
        move = trace.moves[0]
        assert (move.iteration, move.actor, move.old_parent, move.new_parent) == (1, 1, 0, 2)
        assert move.utility_after > move.utility_before
        assert trace.to_records()[0]['new_parent'] == 2

    def test_verify_nash_verdicts(self):
        """Test the three pure verdicts"""
        ledger = HistoryLedger()
        assert verify_nash(self.star, ledger, self.traffic, self.radio) is Verdict.NOT_EQUILIBRIUM
        assert verify_nash(self.star.with_parents((2, 0)), ledger, self.traffic, self.radio) is Verdict.NASH
        ledger.record((2, 0))
        ledger.record((2, 0))
        assert verify_nash(self.star, ledger, self.traffic, self.radio) is Verdict.HISTORY_INDUCED_NASH

    def test_verify_nash_needs_tree(self):
        """Test that a cyclic state cannot be classified"""
        with pytest.raises(ValueError):
            verify_nash(self.star.with_parents((2, 1)), HistoryLedger(), self.traffic, self.radio)

    def test_run_needs_tree(self):
        """Test that formation refuses a disconnected start"""
        with pytest.raises(ValueError):
            run_formation(self.star.with_parents((-1, 0)), self.traffic, self.radio, seed=0)

    def test_iteration_cap(self):
        """Test that the cap stops the run and is flagged"""
        final, trace = run_formation(self.star, self.traffic, self.radio, seed=0, max_iterations=1)
        assert trace.cap_reached
        assert trace.iteration_count == 1
        assert final.parents == (2, 0)

    def test_mixed_trigger(self):
        """Test the warning verdict when a critical tree is within reach"""
        traffic = TrafficParams(history_threshold=3, critical_threshold=1)
        ledger = HistoryLedger()
        ledger.record((2, 0))
        ledger.record((2, 0))
        game = FormationGame(traffic, self.radio)
        _, trace = game.run(self.star, seed=0, history=ledger)
        assert trace.verdict is Verdict.MIXED_TRIGGER
        assert trace.iteration_count == 1

    def test_no_mixed_trigger_with_default_thresholds(self):
        """Test that the trigger stays off while the critical threshold exceeds the history threshold"""
        ledger = HistoryLedger()
        for _ in range(5):
            ledger.record((2, 0))
        _, trace = FormationGame(self.traffic, self.radio).run(self.star, seed=0, history=ledger)
        assert trace.verdict is not Verdict.MIXED_TRIGGER


class TestThreeRsLine:
    """Test best-response ranking on RSs at 1800, 1200 and 600 m"""

    def setup_method(self):
        self.radio = RadioParams()
        self.traffic = TrafficParams()
        self.star = line([1800.0, 1200.0, 600.0])
        self.game = FormationGame(self.traffic, self.radio)

    def test_improving_options_sorted(self):
        """Test that improving options come best first"""
        improving = self.game.improving_options(self.star, 1)
        assert len(improving) >= 2
        utilities = [o.actor_utility for o in improving]
        assert utilities == sorted(utilities, reverse=True)
        assert all(o.feasible for o in improving)

    def test_second_best_when_best_blocked(self):
        """Test that a blocked best move falls through to the next one"""
        improving = self.game.improving_options(self.star, 1)
        ledger = HistoryLedger()
        ledger.record(improving[0].graph)
        ledger.record(improving[0].graph)
        assert self.game.best_response(self.star, 1, ledger) == improving[1].strategy


class TestFeasibility:
    """Test the feasibility rule against a direct evaluation"""

    @pytest.mark.parametrize('seed', [5, 11])
    def test_matches_oracle(self, seed):
        """Test feasible strategies on a loaded random network"""
        radio, traffic = RadioParams(), TrafficParams()
        state = assign_all_ms(deploy_random((3000.0, 3000.0), (5, 20), seed=seed), traffic, radio)
        base = NetworkEvaluator(state, traffic, radio)
        game = FormationGame(traffic, radio)
        for rs in state.rs_indices():
            expected = {Strategy(rs, state.parent(rs))}
            for candidate in range(state.num_rs + 1):
                if candidate in (rs, state.parent(rs)) or candidate in state.descendants(rs):
                    continue
                moved = NetworkEvaluator(state.with_parent(rs, candidate), traffic, radio)
                before = base.rs_utility(candidate) if candidate else 0.0
                after = moved.rs_utility(candidate) if candidate else 0.0
                if candidate == 0 or after >= before - traffic.epsilon_fraction * before:
                    expected.add(Strategy(rs, candidate))
            assert game.feasible_strategies(state, rs) == frozenset(expected)


class TestRandomNetworks:
    """Test run properties on random placements"""

    def setup_method(self):
        self.radio = RadioParams()
        self.traffic = TrafficParams()

    @pytest.mark.parametrize('seed', [1, 7, 42])
    def test_run_properties(self, seed):
        """Test tree validity, improving moves and the stopping rule"""
        state = deploy_random((3000.0, 3000.0), (8, 0), seed=seed)
        final, trace = run_formation(state, self.traffic, self.radio, seed=seed)
        assert validate_tree(final).is_valid_tree
        assert not trace.cap_reached
        assert trace.verdict in (Verdict.NASH, Verdict.HISTORY_INDUCED_NASH)
        assert trace.iterations[-1] == []
        assert len(trace.history) == trace.iteration_count
        assert all(m.utility_after > m.utility_before for m in trace.moves)

    def test_deterministic(self):
        """Test that equal seeds give equal runs"""
        state = deploy_random((3000.0, 3000.0), (8, 0), seed=3)
        a, trace_a = run_formation(state, self.traffic, self.radio, seed=99)
        b, trace_b = run_formation(state, self.traffic, self.radio, seed=99)
        assert a == b
        assert trace_a.to_records() == trace_b.to_records()
        assert trace_a.verdict is trace_b.verdict

    def test_no_rs(self):
        """Test that a network without RSs is immediately Nash"""
        state = deploy_random((3000.0, 3000.0), (0, 0), seed=0)
        final, trace = run_formation(state, self.traffic, self.radio, seed=0)
        assert final == state
        assert trace.iteration_count == 1
        assert trace.verdict is Verdict.NASH


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
