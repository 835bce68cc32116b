"""FIFO of recently taken actions awaiting rewards.

Rewards attach to queue entries in three phases:

  * at insertion: a no-prefetch action gets the no-prefetch reward and an
    out-of-page action gets the coverage-loss reward, both immediately;
  * during residency: a demand to a queued prefetch address rewards the
    oldest matching entry, accurate-timely if the prefetch already filled,
    accurate-late otherwise;
  * at eviction: anything still unrewarded was never demanded and gets the
    inaccurate reward.

No-prefetch and inaccurate rewards split into high/low sub-levels by the
memory bandwidth usage at assignment time. A reward, once set, is never
overwritten; the filled bit only ever goes false -> true.

Entries store the reward *level*; the numeric value is resolved through the
active RewardConfig when the learning tuple is emitted, which is what makes
reward customization a pure configuration change.

Evicting an entry yields the (S1, A1, R, S2, A2) learning tuple: the evicted
entry supplies S1, A1, R and the queue head (oldest remaining entry, which
is the just-inserted one when the queue holds a single entry) supplies
S2, A2.
"""

from __future__ import annotations

import enum
from collections import Counter, deque
from dataclasses import dataclass
from typing import Optional

from .features import StateVector


class RewardLevel(enum.Enum):
    ACCURATE_TIMELY = "accurate_timely"
    ACCURATE_LATE = "accurate_late"
    COVERAGE_LOSS = "coverage_loss"
    INACCURATE_HIGH_BW = "inaccurate_high_bw"
    INACCURATE_LOW_BW = "inaccurate_low_bw"
    NO_PREFETCH_HIGH_BW = "no_prefetch_high_bw"
    NO_PREFETCH_LOW_BW = "no_prefetch_low_bw"


@dataclass(frozen=True)
class RewardConfig:
    """Numeric values of the seven reward levels."""

    r_at: float = 20.0
    r_al: float = 12.0
    r_cl: float = -12.0
    r_in_h: float = -14.0
    r_in_l: float = -8.0
    r_np_h: float = -2.0
    r_np_l: float = -4.0

    def value(self, level: RewardLevel) -> float:
        return {
            RewardLevel.ACCURATE_TIMELY: self.r_at,
            RewardLevel.ACCURATE_LATE: self.r_al,
            RewardLevel.COVERAGE_LOSS: self.r_cl,
            RewardLevel.INACCURATE_HIGH_BW: self.r_in_h,
            RewardLevel.INACCURATE_LOW_BW: self.r_in_l,
            RewardLevel.NO_PREFETCH_HIGH_BW: self.r_np_h,
            RewardLevel.NO_PREFETCH_LOW_BW: self.r_np_l,
        }[level]

    @classmethod
    def basic(cls) -> "RewardConfig":
        return cls()

    @classmethod
    def strict(cls) -> "RewardConfig":
        """Accuracy-favoring override: punish inaccuracy hard, make no-prefetch free."""
        return cls(r_in_h=-22.0, r_in_l=-20.0, r_np_h=0.0, r_np_l=0.0)

    @classmethod
    def bw_oblivious(cls) -> "RewardConfig":
        """High/low bandwidth distinction removed from the reward values."""
        return cls(r_in_h=-8.0, r_in_l=-8.0, r_np_h=-4.0, r_np_l=-4.0)


class MissingReward(Exception):
    """An evicted entry without a reward; unreachable if insertion is used correctly."""


@dataclass
class EQEntry:
    """One recently taken action.

    prefetch_line is None for no-prefetch and out-of-page actions;
    out_of_page distinguishes the two.
    """

    state: StateVector
    action_index: int
    prefetch_line: Optional[int] = None
    out_of_page: bool = False
    filled: bool = False
    reward: Optional[RewardLevel] = None


class EvaluationQueue:
    def __init__(self, capacity: int = 256):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: deque[EQEntry] = deque()
        # prefetch line -> resident entries for that line, oldest first
        self._by_line: dict[int, deque[EQEntry]] = {}
        self.level_counts: Counter = Counter()
        self.matched_demands = 0
        self.no_prefetch_inserts = 0
        self.out_of_page_inserts = 0
        self.unmatched_evictions = 0
        self.evicted_without_reward = 0

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def head(self) -> EQEntry:
        return self._entries[0]

    def _assign(self, entry: EQEntry, level: RewardLevel) -> None:
        entry.reward = level
        self.level_counts[level] += 1

    def match_demand(self, line_address: int) -> Optional[RewardLevel]:
        """Reward the oldest unrewarded entry whose prefetch matches this demand.

        Accurate-timely if the prefetch has filled, accurate-late otherwise.
        At most one entry is rewarded per demand; returns the assigned level,
        or None when nothing matched.
        """
        bucket = self._by_line.get(line_address)
        if bucket:
            for entry in bucket:
                if entry.reward is None:
                    level = (RewardLevel.ACCURATE_TIMELY if entry.filled
                             else RewardLevel.ACCURATE_LATE)
                    self._assign(entry, level)
                    self.matched_demands += 1
                    return level
        return None

    def mark_filled(self, line_address: int) -> None:
        """Set the filled bit on every matching entry; rewards stay untouched."""
        bucket = self._by_line.get(line_address)
        if bucket:
            for entry in bucket:
                entry.filled = True

    def insert(self, entry: EQEntry, bandwidth_high: bool) -> Optional[EQEntry]:
        """Insert an entry, applying immediate rewards; returns the eviction, if any.

        No-prefetch and out-of-page entries are rewarded on the spot. When
        the queue is full the oldest entry is evicted first and, if still
        unrewarded, gets the inaccurate reward for the current bandwidth
        level.
        """
        if entry.reward is None:
            if entry.out_of_page:
                self._assign(entry, RewardLevel.COVERAGE_LOSS)
                self.out_of_page_inserts += 1
            elif entry.prefetch_line is None:
                level = (RewardLevel.NO_PREFETCH_HIGH_BW if bandwidth_high
                         else RewardLevel.NO_PREFETCH_LOW_BW)
                self._assign(entry, level)
                self.no_prefetch_inserts += 1
        evicted = None
        if len(self._entries) >= self.capacity:
            evicted = self._entries.popleft()
            if evicted.prefetch_line is not None:
                bucket = self._by_line[evicted.prefetch_line]
                bucket.popleft()  # FIFO order makes this the evicted entry
                if not bucket:
                    del self._by_line[evicted.prefetch_line]
            if evicted.reward is None:
                level = (RewardLevel.INACCURATE_HIGH_BW if bandwidth_high
                         else RewardLevel.INACCURATE_LOW_BW)
                self._assign(evicted, level)
                self.unmatched_evictions += 1
        self._entries.append(entry)
        if entry.prefetch_line is not None:
            self._by_line.setdefault(entry.prefetch_line, deque()).append(entry)
        return evicted

    def sarsa_feed(self, evicted: EQEntry, head: EQEntry, rewards: RewardConfig):
        """Emit the (S1, A1, R, S2, A2) learning tuple for an eviction."""
        if evicted.reward is None:
            self.evicted_without_reward += 1
            raise MissingReward("evicted entry has no reward")
        return (
            evicted.state,
            evicted.action_index,
            rewards.value(evicted.reward),
            head.state,
            head.action_index,
        )

    def assigned_total(self) -> int:
        return sum(self.level_counts.values())

    def assignment_events(self) -> int:
        """Matched demands + immediate rewards + unmatched evictions."""
        return (self.matched_demands + self.no_prefetch_inserts
                + self.out_of_page_inserts + self.unmatched_evictions)
