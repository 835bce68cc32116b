import pytest

from prefetchsim.agent import run_trace
from prefetchsim.baselines import NextLinePrefetcher, StridePrefetcher
from prefetchsim.memsim import CacheConfig
from prefetchsim.trace import ConstantStride, MemoryRequest, TraceSpec, generate_trace


def req(tick, pc, line):
    return MemoryRequest(tick=tick, pc=pc, address=line << 6)


def test_stride_confidence_automaton():
    sp = StridePrefetcher()
    assert sp.step(req(0, 0x9, 0)) is None   # first sighting
    assert sp.step(req(1, 0x9, 3)) is None   # first stride observed
    assert sp.step(req(2, 0x9, 6)) == 9      # repeated stride: prefetch


def test_stride_alternating_never_confident():
    sp = StridePrefetcher()
    line = 32
    for t in range(20):
        line += 1 if t % 2 == 0 else -1
        assert sp.step(req(t, 0x9, line)) is None


def test_stride_page_crossing_suppressed():
    sp = StridePrefetcher()
    for t, line in enumerate((57, 60, 63)):  # next target 66 crosses the page
        result = sp.step(req(t, 0x9, line))
    assert result is None


def test_stride_zero_stride_not_prefetched():
    sp = StridePrefetcher()
    for t in range(5):
        result = sp.step(req(t, 0x9, 10))
    assert result is None


def test_stride_per_pc_tracking():
    sp = StridePrefetcher()
    sp.step(req(0, 0xA, 0))
    sp.step(req(1, 0xB, 100))  # different PC, different table slot
    sp.step(req(2, 0xA, 2))
    sp.step(req(3, 0xB, 105))
    assert sp.step(req(4, 0xA, 4)) == 6
    assert sp.step(req(5, 0xB, 110)) == 115


def test_stride_table_collision_resets_entry():
    sp = StridePrefetcher()
    # PCs 1 and 65 collide in a 64-entry direct-mapped table
    sp.step(req(0, 1, 0))
    sp.step(req(1, 1, 3))
    sp.step(req(2, 65, 50))  # evicts PC 1's entry
    assert sp.step(req(3, 1, 6)) is None  # PC 1 must retrain


def test_nextline_degree_one():
    assert NextLinePrefetcher.targets(req(0, 0x1, 64 * 2 + 5), 1) == [64 * 2 + 6]


def test_nextline_page_clip():
    assert NextLinePrefetcher.targets(req(0, 0x1, 64 * 2 + 62), 4) == [64 * 2 + 63]


def test_nextline_degree_zero():
    assert NextLinePrefetcher.targets(req(0, 0x1, 64 * 2 + 5), 0) == []


def test_nextline_triggers_on_miss_and_prefetched_hit_only():
    r = req(0, 0x1, 64 * 2 + 5)
    assert NextLinePrefetcher.step(r, 1, hit=False, prefetched_hit=False) == [64 * 2 + 6]
    assert NextLinePrefetcher.step(r, 1, hit=True, prefetched_hit=True) == [64 * 2 + 6]
    assert NextLinePrefetcher.step(r, 1, hit=True, prefetched_hit=False) == []


def test_nextline_coverage_on_unit_stride_hand_count():
    # unit-stride trace, degree 1, fill latency 1: every page misses exactly
    # once (its first line); the stream stays ahead for the other 63 lines
    pages = 20
    spec = TraceSpec(pattern=ConstantStride(stride_lines=1, pages=pages), length=64 * pages)
    result = run_trace(generate_trace(spec), prefetcher="nextline",
                       cache_config=CacheConfig(fill_latency_ticks=1))
    assert result.stats.baseline_demand_misses == 64 * pages
    assert result.stats.demand_misses == pages
    assert result.stats.coverage() == pytest.approx(63 / 64)


def test_stride_prefetcher_covers_stride_trace():
    spec = TraceSpec(pattern=ConstantStride(stride_lines=3, pages=60), length=60 * 22)
    result = run_trace(generate_trace(spec), prefetcher="stride",
                       cache_config=CacheConfig(fill_latency_ticks=1))
    assert result.stats.coverage() > 0.8
    assert result.reward_counts == {}  # no RL bookkeeping for baselines
