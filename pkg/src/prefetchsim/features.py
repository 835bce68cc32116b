"""Program-feature registry and per-request state extraction.

A feature pairs one control-flow component with one data-flow component:

    control: pc | pcpath3 | pcxorbranch | none
    data:    lineaddress | pagenumber | pageoffset | delta |
             last4offsets | last4deltas | offsetxordelta | none

Components are combined into a single 64-bit value with a fixed avalanche
mixer (true bit-concatenation of two 64-bit values does not fit a word, and
the Q-value store re-hashes the result anyway, so only practical injectivity
matters). Sequence components fold their elements oldest-to-newest with the
same mixer, so the fold is order-sensitive.

Cacheline deltas are scoped per 4 KB page: the delta of an access is the
signed line distance to the previous access within the same page, and the
first access to a page has delta 0. A global-delta mode is available for
sensitivity runs. History registers (recent PCs, page offsets, deltas) are
updated exactly once per demand request, after extraction; the "last N"
sequences seen by a request therefore end with the request's own values.

The pcxorbranch control needs a branch-PC channel the trace format does not
carry. It stays registered for enumeration but extraction rejects it unless
the stub (branch PC = 0, so the value degenerates to the plain PC) is
explicitly allowed, as the sweep tools do.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product

from .trace import MemoryRequest

_U64 = (1 << 64) - 1

CONTROL_COMPONENTS = ("pc", "pcpath3", "pcxorbranch", "none")
DATA_COMPONENTS = (
    "lineaddress",
    "pagenumber",
    "pageoffset",
    "delta",
    "last4offsets",
    "last4deltas",
    "offsetxordelta",
    "none",
)

_FOLD_SEED = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class UnsupportedFeature(Exception):
    """A feature that is registered but cannot be extracted from this trace."""


def mix64(x: int) -> int:
    """Fixed 64-bit avalanche mixer."""
    x &= _U64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _U64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _U64
    x ^= x >> 31
    return x


def mix_pair(a: int, b: int) -> int:
    """Order-sensitive combination of two 64-bit values."""
    return mix64(((a * _FNV_PRIME) & _U64) ^ (b & _U64))


def fold_sequence(values) -> int:
    acc = _FOLD_SEED
    for v in values:
        acc = mix_pair(acc, v & _U64)
    return acc


@dataclass(frozen=True)
class FeatureSpec:
    """One program feature: a (control, data) component pair."""

    control: str
    data: str

    def __post_init__(self):
        if self.control not in CONTROL_COMPONENTS:
            raise ValueError(f"unknown control component {self.control!r}")
        if self.data not in DATA_COMPONENTS:
            raise ValueError(f"unknown data component {self.data!r}")

    @property
    def name(self) -> str:
        return f"{self.control}+{self.data}"


def parse_feature(name: str) -> FeatureSpec:
    """Parse a canonical feature name like ``pc+delta``.

    The degenerate none+none parses (the sweep catalog contains it); config
    files reject it separately, since a user configuring a feature with no
    information is almost certainly a mistake.
    """
    parts = name.strip().lower().split("+")
    if len(parts) != 2:
        raise ValueError(f"feature name {name!r} is not of the form control+data")
    return FeatureSpec(parts[0], parts[1])


def enumerate_feature_space() -> list[FeatureSpec]:
    """The full 4x8 cross product of components: 32 candidate features.

    The degenerate none+none entry is kept so the catalog size matches the
    component cross product; it extracts as a constant and is rejected by
    config-file validation (parse_feature).
    """
    return [FeatureSpec(c, d) for c, d in product(CONTROL_COMPONENTS, DATA_COMPONENTS)]


@dataclass(frozen=True)
class StateVector:
    """The k extracted feature values for one demand request."""

    values: tuple
    specs: tuple


class FeatureExtractor:
    """Holds per-trace history and extracts state vectors in request order."""

    def __init__(self, specs, page_scoped_delta: bool = True, allow_branch_stub: bool = False):
        self.specs = tuple(specs)
        if not self.specs:
            raise ValueError("at least one feature is required")
        self.page_scoped_delta = page_scoped_delta
        self.allow_branch_stub = allow_branch_stub
        for spec in self.specs:
            if spec.control == "pcxorbranch" and not allow_branch_stub:
                raise UnsupportedFeature(
                    "pcxorbranch is disabled: the trace carries no branch PCs"
                )
        self._last_line_by_page: dict[int, int] = {}
        self._last_line_global: int | None = None
        self._last_3_pcs: deque = deque(maxlen=3)
        self._last_4_pcs: deque = deque(maxlen=4)
        self._last_4_offsets: deque = deque(maxlen=4)
        self._last_4_deltas: deque = deque(maxlen=4)

    def extract(self, request: MemoryRequest) -> StateVector:
        line = request.address >> 6
        page = line >> 6
        offset = line & 63
        pc = request.pc

        if self.page_scoped_delta:
            last = self._last_line_by_page.get(page)
        else:
            last = self._last_line_global
        delta = 0 if last is None else line - last
        delta_u64 = delta & _U64

        values = []
        for spec in self.specs:
            c = self._control_value(spec.control, pc)
            d = self._data_value(spec.data, line, page, offset, delta_u64)
            if c is None and d is None:
                values.append(0)
            elif c is None:
                values.append(d)
            elif d is None:
                values.append(c)
            else:
                values.append(mix_pair(c, d))

        # histories update once per request, after extraction
        self._last_3_pcs.append(pc)
        self._last_4_pcs.append(pc)
        self._last_4_offsets.append(offset)
        self._last_4_deltas.append(delta_u64)
        self._last_line_by_page[page] = line
        self._last_line_global = line
        return StateVector(values=tuple(values), specs=self.specs)

    def _control_value(self, control: str, pc: int):
        if control == "none":
            return None
        if control == "pc":
            return pc
        if control == "pcpath3":
            # XOR of the three most recent PCs, the current one included
            acc = pc
            past = list(self._last_3_pcs)[-2:]
            for p in past:
                acc ^= p
            return acc
        if control == "pcxorbranch":
            if not self.allow_branch_stub:
                raise UnsupportedFeature(
                    "pcxorbranch is disabled: the trace carries no branch PCs"
                )
            return pc ^ 0  # stub: no branch channel, branch PC taken as 0
        raise ValueError(f"unknown control component {control!r}")

    def _data_value(self, data: str, line: int, page: int, offset: int, delta_u64: int):
        if data == "none":
            return None
        if data == "lineaddress":
            return line
        if data == "pagenumber":
            return page
        if data == "pageoffset":
            return offset
        if data == "delta":
            return delta_u64
        if data == "last4offsets":
            seq = list(self._last_4_offsets)[-3:] + [offset]
            return fold_sequence(seq)
        if data == "last4deltas":
            seq = list(self._last_4_deltas)[-3:] + [delta_u64]
            return fold_sequence(seq)
        if data == "offsetxordelta":
            return offset ^ delta_u64
        raise ValueError(f"unknown data component {data!r}")
