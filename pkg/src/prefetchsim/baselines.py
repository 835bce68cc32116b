"""Reference prefetchers: PC-based stride and next-N-line streamer.

Both stay within the 4 KB page of the triggering demand, so their stats are
directly comparable with the RL prefetcher's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .trace import MemoryRequest

_TABLE_ENTRIES = 64
_CONF_MAX = 3
_CONF_PREFETCH = 2


@dataclass
class _StrideEntry:
    pc: int
    last_line: int
    last_stride: Optional[int] = None
    confidence: int = 0


class StridePrefetcher:
    """Classic per-PC stride detector with a saturating confidence counter.

    Direct-mapped 64-entry table keyed by PC. A repeated stride bumps
    confidence (saturating at 3); a changed stride resets it to 1 for the
    new stride. A prefetch of current line + stride is issued once
    confidence reaches 2, provided the target stays in the page and the
    stride is nonzero.
    """

    def __init__(self):
        self._table: dict[int, _StrideEntry] = {}

    def step(self, request: MemoryRequest) -> Optional[int]:
        line = request.address >> 6
        idx = request.pc % _TABLE_ENTRIES
        entry = self._table.get(idx)
        if entry is None or entry.pc != request.pc:
            self._table[idx] = _StrideEntry(pc=request.pc, last_line=line)
            return None
        stride = line - entry.last_line
        if entry.last_stride is not None and stride == entry.last_stride:
            entry.confidence = min(entry.confidence + 1, _CONF_MAX)
        else:
            entry.confidence = 1
        entry.last_stride = stride
        entry.last_line = line
        if entry.confidence < _CONF_PREFETCH or stride == 0:
            return None
        target = line + stride
        if target >> 6 != line >> 6:  # suppress page-crossing strides
            return None
        return target


class NextLinePrefetcher:
    """Streamer: prefetch the next N in-page lines past the demand.

    Triggered by a demand miss, and also by the first demand hit on a
    prefetched line; without the second trigger a detected stream would
    stall after one line instead of staying ahead of the demands.
    """

    @staticmethod
    def targets(request: MemoryRequest, degree: int) -> list:
        line = request.address >> 6
        page = line >> 6
        out = []
        for i in range(1, degree + 1):
            target = line + i
            if target >> 6 != page:
                break  # clip at the page boundary
            out.append(target)
        return out

    @staticmethod
    def step(request: MemoryRequest, degree: int, hit: bool, prefetched_hit: bool) -> list:
        if hit and not prefetched_hit:
            return []
        return NextLinePrefetcher.targets(request, degree)
