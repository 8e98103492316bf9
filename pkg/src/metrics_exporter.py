#!/usr/bin/env python3
"""
Relaytree Prometheus Metrics Exporter

Collects run-level counters while an experiment executes and writes them
in the Prometheus text exposition format next to the result tables, so a
node-exporter textfile collector (or a human) can pick them up.

Exported metrics
────────────────
  relaytree_tasks_total                    – (axis value, repetition) tasks completed
  relaytree_actions_total                  – committed link replacements, per algorithm
  relaytree_verdicts_total                 – formation verdicts, per verdict
  relaytree_cap_hits_total                 – formation runs stopped at the iteration cap
  relaytree_formation_iterations           – histogram of pre-MS formation iterations
  relaytree_nash_networks                  – histogram of Nash-network counts per placement

The file carries no timestamps, so two runs with the same seed write the
same bytes.
"""

import logging
from pathlib import Path

import pandas as pd
from prometheus_client import (
    CollectorRegistry,
    Counter,
    Histogram,
    disable_created_metrics,
    write_to_textfile,
)

logger = logging.getLogger(__name__)

# _created samples hold wall-clock time
disable_created_metrics()

ITERATION_BUCKETS = (1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50, 100, 1000)
NASH_BUCKETS = (0, 1, 2, 3, 4, 5, 10, 20, 50, 100)


class MetricsCollector:
    """Owns one registry per run so repeated runs never share counters"""

    def __init__(self):
        self.registry = CollectorRegistry()
        self.tasks = Counter(
            "relaytree_tasks_total",
            "Completed (axis value, repetition) tasks",
            registry=self.registry,
        )
        self.actions = Counter(
            "relaytree_actions_total",
            "Committed link replacements",
            ["algorithm"],
            registry=self.registry,
        )
        self.verdicts = Counter(
            "relaytree_verdicts_total",
            "Formation verdicts",
            ["verdict"],
            registry=self.registry,
        )
        self.cap_hits = Counter(
            "relaytree_cap_hits_total",
            "Formation runs stopped at the iteration cap",
            registry=self.registry,
        )
        self.iterations = Histogram(
            "relaytree_formation_iterations",
            "Pre-MS formation iterations per repetition",
            buckets=ITERATION_BUCKETS,
            registry=self.registry,
        )
        self.nash_networks = Histogram(
            "relaytree_nash_networks",
            "Nash networks per placement",
            buckets=NASH_BUCKETS,
            registry=self.registry,
        )

    def record_repetitions(self, frame: pd.DataFrame):
        """Fold per-repetition records into the counters"""
        if frame.empty:
            return
        self.tasks.inc(int(frame[['axis_value', 'repetition']].astype(str).drop_duplicates().shape[0]))
        for record in frame.itertuples(index=False):
            if record.actions > 0:
                self.actions.labels(algorithm=record.algorithm).inc(record.actions)
            if record.verdict:
                self.verdicts.labels(verdict=record.verdict).inc()
            if record.cap_reached:
                self.cap_hits.inc()
            if record.verdict:
                self.iterations.observe(record.iterations)

    def record_nash_counts(self, counts):
        for _, count in counts:
            self.nash_networks.observe(count)

    def write(self, path: Path):
        write_to_textfile(str(path), self.registry)
        logger.info(f"✓ Metrics written to {path}")
