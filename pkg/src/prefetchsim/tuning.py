"""Automated design-space exploration at desk scale.

Three sweeps, all embarrassingly parallel over isolated simulation
instances and all deterministic given seeds:

  * feature_sweep: every combination of the enumerated candidate features
    up to max_combo, ranked by mean score across the traces;
  * action_prune: leave-one-out over an offset list, keeping offsets whose
    removal degrades the score by at least a threshold (0 is never pruned);
  * grid_search: Cartesian product over per-parameter value grids, scored
    on a small test suite, with the top-K re-evaluated on the full suite.

The score is coverage minus overprediction rate against the no-prefetch
baseline. Experiments run in a bounded worker pool; rankings sort on
(score, experiment key) so re-running reproduces results bit-for-bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product

from .config import ConfigError, SimConfig
from .experiment import run_experiment, score
from .features import enumerate_feature_space
from .trace import LINES_PER_PAGE


class GridTooLarge(Exception):
    """The parameter grid product exceeds the configured experiment budget."""


@dataclass
class SweepRow:
    key: str
    detail: dict
    per_trace: list = field(default_factory=list)
    mean_score: float = math.nan
    valid: bool = True

    def sort_key(self):
        return (-self.mean_score, self.key)


# parameter name -> config section for grid_search overrides
_GRID_SECTIONS = {
    "alpha": "hyperparameters",
    "gamma": "hyperparameters",
    "epsilon": "hyperparameters",
    "r_at": "rewards",
    "r_al": "rewards",
    "r_cl": "rewards",
    "r_in_h": "rewards",
    "r_in_l": "rewards",
    "r_np_h": "rewards",
    "r_np_l": "rewards",
}


def _scored_config(args):
    key, trace_paths, values = args
    cfg = SimConfig(dict(values))
    scores = [score(run_experiment(path, cfg)) for path in trace_paths]
    return key, scores


def _run_all(jobs, workers: int):
    """Evaluate (key, traces, config-values) jobs, preserving submission order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_scored_config(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(jobs) // (workers * 8))
        return list(pool.map(_scored_config, jobs, chunksize=chunk))


def _frozen_values(cfg: SimConfig) -> tuple:
    return tuple(sorted(cfg.values.items()))


def _finish(rows: dict, results) -> list:
    for key, scores in results:
        row = rows[key]
        row.per_trace = scores
        row.mean_score = sum(scores) / len(scores)
    ranked = sorted(rows.values(), key=SweepRow.sort_key)
    return ranked


def feature_sweep(trace_paths, base: SimConfig, max_combo: int = 1, workers: int = 1) -> list:
    """Rank every feature combination of size 1..max_combo by mean score."""
    if not trace_paths:
        raise ValueError("at least one trace is required")
    if not (1 <= max_combo <= 3):
        raise ValueError("max_combo must be between 1 and 3")
    catalog = enumerate_feature_space()
    rows = {}
    jobs = []
    for m in range(1, max_combo + 1):
        for combo in combinations(catalog, m):
            key = ";".join(spec.name for spec in combo)
            cfg = SimConfig(dict(base.values))
            cfg.values[("features", "features")] = tuple(spec.name for spec in combo)
            # the branch-PC feature runs as its PC-only stub during sweeps
            cfg.values[("features", "allow_branch_stub")] = True
            rows[key] = SweepRow(key=key, detail={"features": key})
            jobs.append((key, tuple(str(p) for p in trace_paths), _frozen_values(cfg)))
    return _finish(rows, _run_all(jobs, workers))


def action_prune(trace_paths, base: SimConfig, full_range=None, threshold: float = 0.005,
                 workers: int = 1):
    """Leave-one-out pruning of an offset list.

    Returns (kept_offsets, rows): rows carry each offset's removal impact,
    clamped at zero (removals that help only ever argue for pruning).
    Offset 0 is never pruned.
    """
    if not trace_paths:
        raise ValueError("at least one trace is required")
    if full_range is None:
        full_range = tuple(range(-(LINES_PER_PAGE - 1), LINES_PER_PAGE))
    full_range = tuple(full_range)
    if 0 not in full_range:
        raise ValueError("the offset list must contain 0")
    traces = tuple(str(p) for p in trace_paths)

    def job_for(offsets, key):
        cfg = SimConfig(dict(base.values))
        cfg.values[("actions", "offsets")] = tuple(offsets)
        return (key, traces, _frozen_values(cfg))

    jobs = [job_for(full_range, "full")]
    for off in full_range:
        if off != 0:
            jobs.append(job_for([o for o in full_range if o != off], f"drop:{off}"))
    results = dict(_run_all(jobs, workers))

    base_mean = sum(results["full"]) / len(results["full"])
    kept = [0]
    rows = []
    for off in full_range:
        if off == 0:
            continue
        scores = results[f"drop:{off}"]
        mean = sum(scores) / len(scores)
        impact = max(0.0, base_mean - mean)
        keep = impact >= threshold
        if keep:
            kept.append(off)
        rows.append(SweepRow(key=f"drop:{off}", detail={"offset": off, "impact": impact, "kept": keep},
                             per_trace=scores, mean_score=mean))
    return sorted(kept), rows


@dataclass
class GridSearchResult:
    n_enumerated: int
    n_evaluated: int
    stage1: list
    stage2: list

    @property
    def winner(self) -> SweepRow:
        return self.stage2[0]


def grid_search(trace_paths, base: SimConfig, param_grids: dict, test_traces=None,
                top_k: int = 25, budget: int = 2000, workers: int = 1) -> GridSearchResult:
    """Uniform grid search over reward values and hyperparameters.

    The full Cartesian product is enumerated; configurations that fail
    validation (a discount of 1 or more diverges the initial Q-value) are
    recorded as invalid and skipped. Valid configurations are scored on
    test_traces (the full suite when not given) and the top_k are
    re-evaluated on the full suite, which produces the final ranking.
    """
    if not trace_paths:
        raise ValueError("at least one trace is required")
    if not param_grids:
        raise ValueError("at least one parameter grid is required")
    for name in param_grids:
        if name not in _GRID_SECTIONS:
            raise ValueError(f"unknown grid parameter {name!r}")
    names = list(param_grids)
    n_points = 1
    for name in names:
        n_points *= len(param_grids[name])
    if n_points > budget:
        raise GridTooLarge(f"{n_points} configurations exceed the budget of {budget}")

    test_traces = tuple(str(p) for p in (test_traces or trace_paths))
    full_traces = tuple(str(p) for p in trace_paths)

    rows = {}
    jobs = []
    for values in product(*(param_grids[name] for name in names)):
        detail = dict(zip(names, values))
        key = ",".join(f"{n}={v:g}" for n, v in detail.items())
        cfg = SimConfig(dict(base.values))
        for name, value in detail.items():
            cfg.values[(_GRID_SECTIONS[name], name)] = float(value)
        row = SweepRow(key=key, detail=detail)
        try:
            cfg.agent_config()
        except (ConfigError, ValueError):
            row.valid = False
            row.mean_score = -math.inf
        rows[key] = row
        if row.valid:
            jobs.append((key, test_traces, _frozen_values(cfg)))

    stage1 = _finish(rows, _run_all(jobs, workers))
    finalists = [row for row in stage1 if row.valid][:top_k]

    stage2_rows = {}
    stage2_jobs = []
    for row in finalists:
        cfg = SimConfig(dict(base.values))
        for name, value in row.detail.items():
            cfg.values[(_GRID_SECTIONS[name], name)] = float(value)
        stage2_rows[row.key] = SweepRow(key=row.key, detail=dict(row.detail))
        stage2_jobs.append((row.key, full_traces, _frozen_values(cfg)))
    stage2 = _finish(stage2_rows, _run_all(stage2_jobs, workers))

    return GridSearchResult(
        n_enumerated=n_points,
        n_evaluated=len(jobs),
        stage1=stage1,
        stage2=stage2,
    )
