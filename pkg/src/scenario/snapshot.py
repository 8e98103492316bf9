#!/usr/bin/env python3
"""
Snapshot - One placement, formed before and after the MS deployment

Phase A runs the formation game from the star with HELLO traffic only.
Phase B deploys the MS batch, lets every MS pick its serving node, runs the
game again from the phase-A tree and lets the MSs re-assess once.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List

from experiment.config import ScenarioConfig
from formation.game import FormationGame, GameTrace
from formation.utility import LinkGeometry, assign_all_ms
from topology.model import NetworkState, SeedLike, deploy_random, derive_seed

logger = logging.getLogger(__name__)

PLACEMENT_STREAM = 0
PRE_MS_STREAM = 1
POST_MS_STREAM = 2
HEADING_STREAM = 3
ROUND_STREAM = 4


@dataclass
class SnapshotResult:
    """Trees and traces of both formation phases"""
    deployed: NetworkState
    pre_ms_state: NetworkState
    post_ms_state: NetworkState
    pre_trace: GameTrace
    post_trace: GameTrace

    @property
    def action_count(self) -> int:
        return self.pre_trace.action_count + self.post_trace.action_count

    def move_records(self) -> List[Dict[str, Any]]:
        """Committed moves of both phases, tagged with their phase"""
        rows = [{'phase': 'pre_ms', **move} for move in self.pre_trace.to_records()]
        rows += [{'phase': 'post_ms', **move} for move in self.post_trace.to_records()]
        return rows


def run_snapshot(config: ScenarioConfig, seed: SeedLike) -> SnapshotResult:
    """
    Deploy one placement and run both formation phases

    Args:
        config: Scenario (area, counts, radio and traffic parameters)
        seed: Repetition seed

    Returns:
        SnapshotResult with the deployed star, the HELLO-only tree and the
        tree after MS deployment
    """
    deployed = deploy_random(
        config.area, (config.num_rs, config.num_ms), derive_seed(seed, PLACEMENT_STREAM)
    )
    game = FormationGame(config.traffic, config.radio, config.max_iterations)
    geometry = LinkGeometry(deployed, config.traffic, config.radio)

    pre_ms_state, pre_trace = game.run(deployed, derive_seed(seed, PRE_MS_STREAM))
    assigned = assign_all_ms(pre_ms_state, config.traffic, config.radio, geometry)
    formed, post_trace = game.run(assigned, derive_seed(seed, POST_MS_STREAM))
    post_ms_state = assign_all_ms(formed, config.traffic, config.radio, geometry)

    logger.debug(
        f"Snapshot: {pre_trace.action_count} pre-MS and {post_trace.action_count} "
        f"post-MS actions, verdicts {pre_trace.verdict.value}/{post_trace.verdict.value}"
    )
    return SnapshotResult(
        deployed=deployed,
        pre_ms_state=pre_ms_state,
        post_ms_state=post_ms_state,
        pre_trace=pre_trace,
        post_trace=post_trace,
    )
