import math

import pytest

from prefetchsim.config import load_config
from prefetchsim.experiment import run_experiment, score, stats_row
from prefetchsim.trace import ConstantStride, TraceSpec, generate_trace, write_trace
from prefetchsim.tuning import GridTooLarge, action_prune, feature_sweep, grid_search


@pytest.fixture(scope="module")
def stride_trace(tmp_path_factory):
    path = tmp_path_factory.mktemp("traces") / "stride3.csv"
    spec = TraceSpec(pattern=ConstantStride(stride_lines=3, pages=60), length=1200)
    write_trace(generate_trace(spec), path)
    return path


@pytest.fixture(scope="module")
def fast_base():
    # short traces learn nothing at the default latency; latency 1 keeps
    # sweep scores meaningful and the tests quick
    return load_config(None, overrides=["cache.fill_latency_ticks=1"])


def test_feature_sweep_single_combo_counts(stride_trace, fast_base):
    rows = feature_sweep([stride_trace], fast_base, max_combo=1)
    assert len(rows) == 32
    keys = {row.key for row in rows}
    assert "pc+delta" in keys
    assert "none+last4deltas" in keys
    # ranking is by mean score, best first
    scores = [row.mean_score for row in rows]
    assert scores == sorted(scores, reverse=True)


def test_feature_sweep_validation(stride_trace, fast_base):
    with pytest.raises(ValueError):
        feature_sweep([], fast_base, max_combo=1)
    with pytest.raises(ValueError):
        feature_sweep([stride_trace], fast_base, max_combo=0)


def test_feature_sweep_deterministic(stride_trace, fast_base):
    a = feature_sweep([stride_trace], fast_base, max_combo=1)
    b = feature_sweep([stride_trace], fast_base, max_combo=1)
    assert [(r.key, r.mean_score) for r in a] == [(r.key, r.mean_score) for r in b]


def test_experiments_are_isolated(stride_trace, fast_base):
    # running the same experiments in either order produces identical stats
    cfg_a = load_config(None, overrides=["cache.fill_latency_ticks=1", "run.seed=1"])
    cfg_b = load_config(None, overrides=["cache.fill_latency_ticks=1", "run.seed=2"])
    first = [stats_row("t", c, run_experiment(stride_trace, c)) for c in (cfg_a, cfg_b)]
    second = [stats_row("t", c, run_experiment(stride_trace, c)) for c in (cfg_b, cfg_a)]
    assert first == [second[1], second[0]]


def test_action_prune_limit_cases(stride_trace, fast_base):
    offsets = (-1, 0, 1, 3)
    kept, rows = action_prune([stride_trace], fast_base, full_range=offsets,
                              threshold=math.inf)
    assert kept == [0]
    kept, rows = action_prune([stride_trace], fast_base, full_range=offsets, threshold=0.0)
    assert kept == sorted(offsets)
    assert len(rows) == 3  # one row per droppable offset


def test_action_prune_keeps_the_offset_that_matters(stride_trace, fast_base):
    kept, rows = action_prune([stride_trace], fast_base,
                              full_range=(-3, -1, 0, 1, 2, 3, 5), threshold=0.005)
    assert 3 in kept
    assert 0 in kept
    assert len(kept) <= 4  # the stride trace needs little else


def test_action_prune_requires_zero(stride_trace, fast_base):
    with pytest.raises(ValueError):
        action_prune([stride_trace], fast_base, full_range=(1, 2, 3), threshold=0.1)


def test_grid_search_single_point(stride_trace, fast_base):
    result = grid_search([stride_trace], fast_base,
                         {"alpha": [0.0065], "gamma": [0.556], "epsilon": [0.002]})
    assert result.n_enumerated == 1
    assert result.n_evaluated == 1
    assert len(result.stage2) == 1
    assert result.winner.detail == {"alpha": 0.0065, "gamma": 0.556, "epsilon": 0.002}


def test_grid_search_counts_and_invalid_gamma(stride_trace, fast_base):
    grids = {"alpha": [0.1, 0.01], "gamma": [1.0, 0.5], "epsilon": [0.0]}
    result = grid_search([stride_trace], fast_base, grids, top_k=2)
    assert result.n_enumerated == 4
    assert result.n_evaluated == 2  # gamma=1.0 rows are enumerated but not run
    invalid = [row for row in result.stage1 if not row.valid]
    assert len(invalid) == 2
    assert all(row.mean_score == -math.inf for row in invalid)
    assert len(result.stage2) == 2


def test_grid_search_budget(stride_trace, fast_base):
    with pytest.raises(GridTooLarge):
        grid_search([stride_trace], fast_base,
                    {"alpha": [0.1] * 50, "gamma": [0.5] * 50}, budget=100)


def test_grid_search_unknown_parameter(stride_trace, fast_base):
    with pytest.raises(ValueError):
        grid_search([stride_trace], fast_base, {"bogus": [1.0]})


def test_grid_search_two_stage_uses_test_suite(tmp_path, fast_base):
    easy = tmp_path / "easy.csv"
    spec = TraceSpec(pattern=ConstantStride(stride_lines=1, pages=30), length=800)
    write_trace(generate_trace(spec), easy)
    full = [easy]
    result = grid_search(full, fast_base,
                         {"alpha": [0.0065, 0.05], "gamma": [0.556], "epsilon": [0.002]},
                         test_traces=[easy], top_k=1)
    assert len(result.stage2) == 1  # only the stage-1 winner is re-evaluated


def test_worker_pool_matches_serial(stride_trace, fast_base):
    serial = feature_sweep([stride_trace], fast_base, max_combo=1, workers=1)
    parallel = feature_sweep([stride_trace], fast_base, max_combo=1, workers=2)
    assert [(r.key, r.mean_score) for r in serial] == [(r.key, r.mean_score) for r in parallel]


def test_score_is_coverage_minus_overprediction(stride_trace, fast_base):
    result = run_experiment(stride_trace, fast_base)
    assert score(result) == pytest.approx(
        result.stats.coverage() - result.stats.overprediction_rate())
