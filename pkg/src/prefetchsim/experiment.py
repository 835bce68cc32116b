"""Running one experiment and serializing its stats row.

The stats CSV schema is fixed, column order included:

    trace, prefetcher, config_hash, demand_accesses, demand_misses,
    baseline_misses, prefetches_issued, useful, overpredictions,
    coverage, accuracy, overprediction_rate,
    <seven reward-level counts>, mean_bandwidth_usage
"""

from __future__ import annotations

import csv
from functools import lru_cache
from pathlib import Path

from .agent import RunResult, Simulation
from .config import SimConfig
from .evalqueue import RewardLevel
from .trace import read_trace

REWARD_COLUMNS = [
    ("reward_accurate_timely", RewardLevel.ACCURATE_TIMELY),
    ("reward_accurate_late", RewardLevel.ACCURATE_LATE),
    ("reward_coverage_loss", RewardLevel.COVERAGE_LOSS),
    ("reward_inaccurate_high_bw", RewardLevel.INACCURATE_HIGH_BW),
    ("reward_inaccurate_low_bw", RewardLevel.INACCURATE_LOW_BW),
    ("reward_no_prefetch_high_bw", RewardLevel.NO_PREFETCH_HIGH_BW),
    ("reward_no_prefetch_low_bw", RewardLevel.NO_PREFETCH_LOW_BW),
]

CSV_COLUMNS = [
    "trace",
    "prefetcher",
    "config_hash",
    "demand_accesses",
    "demand_misses",
    "baseline_misses",
    "prefetches_issued",
    "useful",
    "overpredictions",
    "coverage",
    "accuracy",
    "overprediction_rate",
    *[name for name, _ in REWARD_COLUMNS],
    "mean_bandwidth_usage",
]


@lru_cache(maxsize=8)
def _load_trace(path: str) -> tuple:
    return tuple(read_trace(path))


def run_experiment(trace_path, sim_config: SimConfig, observer=None) -> RunResult:
    """Run one trace under one effective config in a fresh simulation."""
    requests = _load_trace(str(trace_path))
    sim = Simulation(
        agent_config=sim_config.agent_config(),
        cache_config=sim_config.cache_config(),
        bandwidth_config=sim_config.bandwidth_config(),
        prefetcher=sim_config.prefetcher,
        nextline_degree=sim_config.get("run", "nextline_degree"),
    )
    return sim.run(requests, observer=observer)


def score(result: RunResult) -> float:
    """Ranking score for sweeps: coverage minus overprediction rate.

    A speedup proxy: the simulator has no core timing model, so eliminated
    misses net of wasted memory traffic stands in for performance gain.
    """
    return result.stats.coverage() - result.stats.overprediction_rate()


def stats_row(trace_label: str, sim_config: SimConfig, result: RunResult) -> dict:
    stats = result.stats
    row = {
        "trace": trace_label,
        "prefetcher": sim_config.prefetcher,
        "config_hash": sim_config.config_hash(),
        "demand_accesses": stats.demand_accesses,
        "demand_misses": stats.demand_misses,
        "baseline_misses": stats.baseline_demand_misses,
        "prefetches_issued": stats.prefetches_issued,
        "useful": stats.useful_prefetches,
        "overpredictions": stats.overpredictions,
        "coverage": stats.coverage(),
        "accuracy": stats.accuracy(),
        "overprediction_rate": stats.overprediction_rate(),
        "mean_bandwidth_usage": result.mean_bandwidth_usage,
    }
    for name, level in REWARD_COLUMNS:
        row[name] = result.reward_counts.get(level, 0)
    return row


def write_stats_csv(path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
