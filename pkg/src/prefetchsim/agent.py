"""The RL prefetcher and the top-level trace-run driver.

Per demand request the agent, in order: (1) matches the demand line against
the evaluation queue to reward past prefetches, (2) extracts the state
vector, (3) picks an action epsilon-greedily (uniform random with
probability epsilon, otherwise the argmax over the Q store), (4) turns the
offset into a prefetch target; offset 0 means no prefetch and a target that
crosses the 4 KB page is suppressed as a coverage-loss action, (5) inserts
the action into the evaluation queue, and (6) if the insertion evicted an
entry, applies one learning step

    Q(S1, A1) += alpha * (R + gamma * Q(S2, A2) - Q(S1, A1))

with (S1, A1, R) from the evicted entry and (S2, A2) from the queue head.
Learning is therefore delayed by one full queue residency, exactly the
structure the delayed-reward queue imposes. Prefetch degree is 1.

A duplicate prefetch squashed by the cache probe enters the queue with its
filled bit already set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .baselines import StridePrefetcher, NextLinePrefetcher
from .evalqueue import EQEntry, EvaluationQueue, RewardConfig, RewardLevel
from .features import FeatureExtractor, FeatureSpec, StateVector, parse_feature
from .memsim import BandwidthConfig, BandwidthMonitor, Cache, CacheConfig, PrefetchStats
from .qvstore import QVStore
from .trace import LINES_PER_PAGE, MemoryRequest

DEFAULT_ACTIONS = (-6, -3, -1, 0, 1, 3, 4, 5, 10, 11, 12, 16, 22, 23, 30, 32)
DEFAULT_FEATURES = ("pc+delta", "none+last4deltas")

PREFETCHER_KINDS = ("pythia", "stride", "nextline", "none")


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 0.0065
    gamma: float = 0.556
    epsilon: float = 0.002
    action_list: tuple = DEFAULT_ACTIONS
    features: tuple = DEFAULT_FEATURES
    reward_config: RewardConfig = field(default_factory=RewardConfig)
    rng_seed: int = 1
    eq_entries: int = 256
    num_planes: int = 3
    plane_shifts: tuple = (0, 2, 5)
    feature_bins: int = 128
    hash_kind: str = "multiply_shift"
    update_mode: str = "all_vaults"
    page_scoped_delta: bool = True
    allow_branch_stub: bool = False

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0, 1]")
        if not self.action_list:
            raise ValueError("action_list must be non-empty")
        if 0 not in self.action_list:
            raise ValueError("action_list must contain offset 0 (the no-prefetch action)")
        for off in self.action_list:
            if not (-(LINES_PER_PAGE - 1) <= off <= LINES_PER_PAGE - 1):
                raise ValueError(f"offset {off} outside [-63, 63]")
        if not self.features:
            raise ValueError("at least one feature is required")

    def feature_specs(self) -> tuple:
        return tuple(f if isinstance(f, FeatureSpec) else parse_feature(f) for f in self.features)


@dataclass(frozen=True)
class StepDecision:
    """What the agent did for one demand request (exposed for analysis hooks)."""

    state: StateVector
    action_index: int
    explored: bool
    prefetch_line: Optional[int]
    matched_level: Optional[RewardLevel]


class RLPrefetcher:
    """Online RL prefetcher wired to a cache for issuing its prefetches."""

    def __init__(self, config: AgentConfig, cache: Cache):
        self.config = config
        self.cache = cache
        specs = config.feature_specs()
        self.extractor = FeatureExtractor(
            specs,
            page_scoped_delta=config.page_scoped_delta,
            allow_branch_stub=config.allow_branch_stub,
        )
        self.qvstore = QVStore(
            num_features=len(specs),
            num_actions=len(config.action_list),
            gamma=config.gamma,
            num_planes=config.num_planes,
            plane_shifts=config.plane_shifts,
            feature_bins=config.feature_bins,
            hash_kind=config.hash_kind,
            update_mode=config.update_mode,
        )
        self.eq = EvaluationQueue(config.eq_entries)
        self.rng = random.Random(config.rng_seed)
        self.last_decision: Optional[StepDecision] = None

    def on_fill(self, line: int) -> None:
        self.eq.mark_filled(line)

    def step(self, request: MemoryRequest, bandwidth_high: bool) -> Optional[int]:
        """Run one demand request through the agent; returns the prefetch line, if any."""
        demand_line = request.address >> 6
        matched = self.eq.match_demand(demand_line)

        state = self.extractor.extract(request)

        explored = self.rng.random() < self.config.epsilon
        if explored:
            action_index = self.rng.randrange(len(self.config.action_list))
        else:
            action_index, _ = self.qvstore.argmax_action(state)

        offset = self.config.action_list[action_index]
        prefetch_line: Optional[int] = None
        out_of_page = False
        filled = False
        if offset != 0:
            target = demand_line + offset
            if target >> 6 != demand_line >> 6:  # 64 lines per 4 KB page
                out_of_page = True
            else:
                prefetch_line = target
                issued = self.cache.prefetch(target << 6, request.tick)
                filled = not issued  # squashed duplicates count as already filled

        entry = EQEntry(
            state=state,
            action_index=action_index,
            prefetch_line=prefetch_line,
            out_of_page=out_of_page,
            filled=filled,
        )
        evicted = self.eq.insert(entry, bandwidth_high)
        if evicted is not None:
            s1, a1, r, s2, a2 = self.eq.sarsa_feed(evicted, self.eq.head, self.config.reward_config)
            q1 = self.qvstore.q_value(s1, a1)
            q2 = self.qvstore.q_value(s2, a2)
            self.qvstore.update(s1, a1, self.config.alpha * (r + self.config.gamma * q2 - q1))

        self.last_decision = StepDecision(
            state=state,
            action_index=action_index,
            explored=explored,
            prefetch_line=prefetch_line,
            matched_level=matched,
        )
        return prefetch_line


@dataclass
class RunResult:
    stats: PrefetchStats
    reward_counts: dict
    mean_bandwidth_usage: float
    qvstore: Optional[QVStore] = None
    eq: Optional[EvaluationQueue] = None

    def reward_count(self, level: RewardLevel) -> int:
        return self.reward_counts.get(level, 0)


class Simulation:
    """One share-nothing simulation instance: cache, monitor, baseline, prefetcher."""

    def __init__(self, agent_config: AgentConfig = AgentConfig(),
                 cache_config: CacheConfig = CacheConfig(),
                 bandwidth_config: BandwidthConfig = BandwidthConfig(),
                 prefetcher: str = "pythia", nextline_degree: int = 1):
        if prefetcher not in PREFETCHER_KINDS:
            raise ValueError(f"unknown prefetcher {prefetcher!r}; expected one of {PREFETCHER_KINDS}")
        self.prefetcher_kind = prefetcher
        self.monitor = BandwidthMonitor(bandwidth_config)
        self.cache = Cache(cache_config, self.monitor)
        self.baseline_cache = Cache(cache_config, monitor=None)
        self.agent: Optional[RLPrefetcher] = None
        self.stride: Optional[StridePrefetcher] = None
        self.nextline_degree = nextline_degree
        if prefetcher == "pythia":
            self.agent = RLPrefetcher(agent_config, self.cache)
        elif prefetcher == "stride":
            self.stride = StridePrefetcher()

    def run(self, requests: Iterable[MemoryRequest], observer=None) -> RunResult:
        """Drive every request through the cache, the baseline cache, and the prefetcher.

        Per request: completed fills are drained first (marking the agent's
        queue), the demand goes to both caches, the bandwidth level is
        sampled, and the prefetcher takes its turn. The optional observer is
        called as observer(index, request, decision) after each step;
        decision is None for non-RL prefetchers.
        """
        cache = self.cache
        baseline = self.baseline_cache
        agent = self.agent
        usage_sum = 0.0
        n = 0
        for request in requests:
            tick = request.tick
            fills = cache.drain_fills(tick)
            if agent is not None:
                for line, was_prefetch in fills:
                    if was_prefetch:
                        agent.on_fill(line)
            baseline.access(request.address, tick)
            hit = cache.access(request.address, tick)
            prefetched_hit = cache.last_hit_was_prefetched
            high, usage = self.monitor.bandwidth_level(tick)
            usage_sum += usage

            decision = None
            if agent is not None:
                agent.step(request, high)
                decision = agent.last_decision
            elif self.stride is not None:
                target = self.stride.step(request)
                if target is not None:
                    cache.prefetch(target << 6, tick)
            elif self.prefetcher_kind == "nextline":
                for target in NextLinePrefetcher.step(request, self.nextline_degree, hit, prefetched_hit):
                    cache.prefetch(target << 6, tick)

            if observer is not None:
                observer(n, request, decision)
            n += 1

        stats = cache.stats
        stats.baseline_demand_misses = baseline.stats.demand_misses
        reward_counts = dict(agent.eq.level_counts) if agent is not None else {}
        return RunResult(
            stats=stats,
            reward_counts=reward_counts,
            mean_bandwidth_usage=usage_sum / n if n else 0.0,
            qvstore=agent.qvstore if agent is not None else None,
            eq=agent.eq if agent is not None else None,
        )


def run_trace(requests: Iterable[MemoryRequest], config: AgentConfig = AgentConfig(),
              cache_config: CacheConfig = CacheConfig(),
              bandwidth_config: BandwidthConfig = BandwidthConfig(),
              prefetcher: str = "pythia", nextline_degree: int = 1,
              observer=None) -> RunResult:
    """Convenience wrapper: build a Simulation and run the whole trace."""
    sim = Simulation(config, cache_config, bandwidth_config, prefetcher, nextline_degree)
    return sim.run(requests, observer=observer)
