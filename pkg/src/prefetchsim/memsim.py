"""Single-level set-associative cache with prefetch tracking and a bandwidth monitor.

One cache level stands in for the whole hierarchy: coverage, accuracy,
timeliness and bandwidth feedback are all observable here. Fills are not
instantaneous; a miss (demand or prefetch) schedules a fill that completes
``fill_latency_ticks`` later, which is what makes the timely-vs-late
distinction of prefetches deterministic on a demand-indexed clock.

Bookkeeping rules:
  * a demand hit on a prefetched, not-yet-used line counts one useful prefetch;
  * evicting a prefetched line that was never demanded counts one overprediction;
  * every miss and every issued prefetch records one memory transfer in the
    sliding-window bandwidth monitor.

Duplicate prefetches to resident or in-flight lines are squashed (the way an
MSHR/cache probe would squash them): no transfer, not counted as issued.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CacheConfig:
    size_bytes: int = 2 * 1024 * 1024
    line_bytes: int = 64
    ways: int = 16
    replacement: str = "LRU"
    fill_latency_ticks: int = 20

    def __post_init__(self):
        if self.line_bytes != 64:
            raise ValueError("line_bytes is fixed at 64")
        if self.ways < 1:
            raise ValueError("ways must be >= 1")
        if self.fill_latency_ticks < 0:
            raise ValueError("fill_latency_ticks must be >= 0")
        if self.size_bytes % (self.line_bytes * self.ways) != 0:
            raise ValueError("size_bytes must be divisible by line_bytes * ways")
        if self.replacement != "LRU":
            raise ValueError("only LRU replacement is supported")

    @property
    def num_sets(self) -> int:
        return self.size_bytes // (self.line_bytes * self.ways)


@dataclass(frozen=True)
class BandwidthConfig:
    window_ticks: int = 64
    peak_transfers_per_tick: float = 1.0
    threshold_fraction: float = 0.5

    def __post_init__(self):
        if self.window_ticks < 1:
            raise ValueError("window_ticks must be >= 1")
        if self.peak_transfers_per_tick <= 0:
            raise ValueError("peak_transfers_per_tick must be > 0")
        if self.threshold_fraction < 0:
            raise ValueError("threshold_fraction must be >= 0")


class BandwidthMonitor:
    """Sliding window of per-tick memory transfer counts.

    usage_fraction = transfers in the last window_ticks ticks divided by
    (window_ticks * peak_transfers_per_tick), clamped to [0, 1]. The level
    is High iff usage_fraction >= threshold_fraction (boundary inclusive).
    """

    def __init__(self, config: BandwidthConfig = BandwidthConfig()):
        self.config = config
        self._ring = [0] * config.window_ticks
        self._total = 0
        self._last_tick = -1

    def _advance(self, tick: int) -> None:
        window = self.config.window_ticks
        if tick - self._last_tick >= window:
            self._ring = [0] * window
            self._total = 0
            self._last_tick = tick
            return
        while self._last_tick < tick:
            self._last_tick += 1
            slot = self._last_tick % window
            self._total -= self._ring[slot]
            self._ring[slot] = 0

    def record_transfer(self, tick: int) -> None:
        self._advance(tick)
        self._ring[tick % self.config.window_ticks] += 1
        self._total += 1

    def usage_fraction(self, tick: int) -> float:
        self._advance(tick)
        cap = self.config.window_ticks * self.config.peak_transfers_per_tick
        return min(1.0, self._total / cap)

    def bandwidth_level(self, tick: int):
        """Returns (high: bool, usage_fraction: float)."""
        usage = self.usage_fraction(tick)
        return usage >= self.config.threshold_fraction, usage


@dataclass
class PrefetchStats:
    """Raw counters behind coverage, accuracy, and overprediction."""

    demand_accesses: int = 0
    demand_misses: int = 0
    prefetches_issued: int = 0
    prefetch_fills: int = 0
    useful_prefetches: int = 0
    overpredictions: int = 0
    baseline_demand_misses: int = 0

    def coverage(self) -> float:
        if self.baseline_demand_misses == 0:
            return 0.0
        return (self.baseline_demand_misses - self.demand_misses) / self.baseline_demand_misses

    def accuracy(self) -> float:
        if self.prefetches_issued == 0:
            return 0.0
        return self.useful_prefetches / self.prefetches_issued

    def overprediction_rate(self) -> float:
        # read misses with prefetching = demand misses + issued prefetch transfers
        if self.baseline_demand_misses == 0:
            return 0.0
        read_misses = self.demand_misses + self.prefetches_issued
        return (read_misses - self.baseline_demand_misses) / self.baseline_demand_misses


class _LineMeta:
    __slots__ = ("prefetched", "used_since_fill")

    def __init__(self, prefetched: bool):
        self.prefetched = prefetched
        self.used_since_fill = False


class Cache:
    """Set-associative LRU cache indexed by cacheline address.

    All state transitions are driven by access()/prefetch() calls with a
    monotonically non-decreasing tick. Pending fills complete lazily: any
    fill scheduled at or before the current tick is installed before the
    current operation is handled.
    """

    def __init__(self, config: CacheConfig = CacheConfig(), monitor: BandwidthMonitor | None = None):
        self.config = config
        self.monitor = monitor
        self.stats = PrefetchStats()
        self.last_hit_was_prefetched = False  # last access hit a not-yet-used prefetched line
        self._num_sets = config.num_sets
        # per set: line -> _LineMeta, in LRU order (oldest first)
        self._sets: list[OrderedDict] = [OrderedDict() for _ in range(self._num_sets)]
        self._pending: list = []  # heap of (complete_tick, seq, line, is_prefetch)
        self._pending_lines: dict[int, int] = {}  # line -> outstanding fill count
        self._seq = 0

    def _set_for(self, line: int) -> OrderedDict:
        return self._sets[line % self._num_sets]

    def _install(self, line: int, is_prefetch: bool) -> None:
        ways = self._set_for(line)
        if line in ways:
            # A second fill for a resident line just rewrites its metadata;
            # a late prefetch overwritten by a demand fill loses its
            # prefetched flag and is counted neither useful nor overpredicted.
            ways.move_to_end(line)
            ways[line] = _LineMeta(is_prefetch)
            return
        if len(ways) >= self.config.ways:
            _, victim = ways.popitem(last=False)
            if victim.prefetched and not victim.used_since_fill:
                self.stats.overpredictions += 1
        ways[line] = _LineMeta(is_prefetch)

    def drain_fills(self, tick: int) -> list:
        """Complete all fills due at or before tick.

        Returns [(line, was_prefetch), ...] in completion order; prefetch
        fills also bump the prefetch_fills counter.
        """
        done = []
        while self._pending and self._pending[0][0] <= tick:
            _, _, line, is_prefetch = heapq.heappop(self._pending)
            count = self._pending_lines[line] - 1
            if count:
                self._pending_lines[line] = count
            else:
                del self._pending_lines[line]
            self._install(line, is_prefetch)
            if is_prefetch:
                self.stats.prefetch_fills += 1
            done.append((line, is_prefetch))
        return done

    def _schedule_fill(self, line: int, tick: int, is_prefetch: bool) -> None:
        heapq.heappush(self._pending, (tick + self.config.fill_latency_ticks, self._seq, line, is_prefetch))
        self._seq += 1
        self._pending_lines[line] = self._pending_lines.get(line, 0) + 1
        if self.monitor is not None:
            self.monitor.record_transfer(tick)

    def access(self, address: int, tick: int) -> bool:
        """Demand access by byte address; returns True on hit."""
        self.drain_fills(tick)
        line = address >> 6
        self.stats.demand_accesses += 1
        self.last_hit_was_prefetched = False
        ways = self._set_for(line)
        meta = ways.get(line)
        if meta is not None:
            ways.move_to_end(line)
            if meta.prefetched and not meta.used_since_fill:
                meta.used_since_fill = True
                self.stats.useful_prefetches += 1
                self.last_hit_was_prefetched = True
            return True
        self.stats.demand_misses += 1
        self._schedule_fill(line, tick, is_prefetch=False)
        return False

    def prefetch(self, address: int, tick: int) -> bool:
        """Prefetch a cacheline-aligned byte address; returns True if issued.

        Returns False (AlreadyCached) when the line is resident or has a
        fill in flight; squashed prefetches consume no bandwidth.
        """
        self.drain_fills(tick)
        line = address >> 6
        if line in self._set_for(line) or line in self._pending_lines:
            return False
        self.stats.prefetches_issued += 1
        self._schedule_fill(line, tick, is_prefetch=True)
        return True

    def contains(self, address: int) -> bool:
        line = address >> 6
        return line in self._set_for(line)
