"""Memory-access trace model, canonical file format, and synthetic generators.

A trace is a sequence of demand requests. Time is the demand index: each
request gets a "tick" of 0, 1, 2, ... in stream order. The canonical file
format is line-oriented text, one request per line::

    <pc-hex>,<address-hex>,<L|S>

with ``#``-prefixed comment lines ignored and LF line endings. Addresses
and PCs are arbitrary 64-bit values; cacheline/page alignment is computed
downstream (64 B lines, 4 KB pages).

Synthetic generators are deterministic: the same spec and seed always
produce a bit-identical stream.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

LINE_BYTES = 64
PAGE_BYTES = 4096
LINES_PER_PAGE = PAGE_BYTES // LINE_BYTES  # 64

# First page used by synthetic generators; chosen to look like a heap address.
_BASE_PAGE = 0x40000

_U64 = (1 << 64) - 1


class FormatError(Exception):
    """A trace file line that does not conform to the canonical format."""

    def __init__(self, lineno: int, field_text: str, reason: str):
        self.lineno = lineno
        self.field = field_text
        super().__init__(f"line {lineno}: bad field {field_text!r}: {reason}")


class SpecError(Exception):
    """An invalid synthetic trace specification."""


@dataclass(frozen=True)
class MemoryRequest:
    """One demand access: tick (demand index), PC, byte address, load/store."""

    tick: int
    pc: int
    address: int
    kind: str = "L"  # "L" or "S"

    def line(self) -> int:
        return self.address >> 6

    def page(self) -> int:
        return self.address >> 12


@dataclass(frozen=True)
class ConstantStride:
    """Per page, access cacheline offsets 0, stride, 2*stride, ... up to 63."""

    stride_lines: int
    pages: int


@dataclass(frozen=True)
class PagePair:
    """Per page, exactly two accesses: first_offset, then first_offset + delta."""

    first_offset: int
    second_offset_delta: int
    pages: int


@dataclass(frozen=True)
class RandomInPage:
    """Per page, accesses_per_page uniform-random cacheline offsets."""

    accesses_per_page: int
    pages: int
    seed: int = 0


@dataclass(frozen=True)
class Interleaved:
    """Round-robin interleaving of sub-traces, one request from each in turn.

    Each part is a full TraceSpec; part lengths are ignored (the enclosing
    spec's length governs) and each part is laid out in its own disjoint
    page range so the streams do not alias.
    """

    parts: tuple = ()


Pattern = Union[ConstantStride, PagePair, RandomInPage, Interleaved]


@dataclass(frozen=True)
class TraceSpec:
    """A deterministic synthetic trace: pattern, PCs to rotate through, length."""

    pattern: Pattern
    pcs: tuple = (0x401000,)
    length: int = 1000


def _validate(spec: TraceSpec) -> None:
    if spec.length <= 0:
        raise SpecError("length must be > 0")
    if not spec.pcs:
        raise SpecError("pcs must be non-empty")
    pat = spec.pattern
    if isinstance(pat, ConstantStride):
        if not (1 <= pat.stride_lines < LINES_PER_PAGE):
            raise SpecError(f"stride_lines {pat.stride_lines} escapes the 4 KB page")
        if pat.pages < 1:
            raise SpecError("pages must be >= 1")
    elif isinstance(pat, PagePair):
        second = pat.first_offset + pat.second_offset_delta
        if not (0 <= pat.first_offset < LINES_PER_PAGE):
            raise SpecError(f"first_offset {pat.first_offset} outside the 4 KB page")
        if not (0 <= second < LINES_PER_PAGE):
            raise SpecError(f"second offset {second} escapes the 4 KB page")
        if pat.pages < 1:
            raise SpecError("pages must be >= 1")
    elif isinstance(pat, RandomInPage):
        if pat.accesses_per_page < 1:
            raise SpecError("accesses_per_page must be >= 1")
        if pat.pages < 1:
            raise SpecError("pages must be >= 1")
    elif isinstance(pat, Interleaved):
        if not pat.parts:
            raise SpecError("Interleaved needs at least one part")
        for part in pat.parts:
            _validate(part)
    else:
        raise SpecError(f"unknown pattern {pat!r}")


def _pattern_pages(pat: Pattern) -> int:
    if isinstance(pat, Interleaved):
        return sum(_pattern_pages(p.pattern) for p in pat.parts)
    return pat.pages


def _offset_stream(pat: Pattern, seed: int) -> Iterator[int]:
    """Infinite stream of page-relative access positions: (page_index, offset).

    Wraps around to page 0 when all declared pages have been visited, so a
    spec's length may exceed one full pass of the pattern.
    """
    if isinstance(pat, ConstantStride):
        while True:
            for page in range(pat.pages):
                for off in range(0, LINES_PER_PAGE, pat.stride_lines):
                    yield page, off
    elif isinstance(pat, PagePair):
        while True:
            for page in range(pat.pages):
                yield page, pat.first_offset
                yield page, pat.first_offset + pat.second_offset_delta
    elif isinstance(pat, RandomInPage):
        rng = random.Random(seed ^ pat.seed)
        while True:
            for page in range(pat.pages):
                for _ in range(pat.accesses_per_page):
                    yield page, rng.randrange(LINES_PER_PAGE)
    else:
        raise SpecError(f"unknown pattern {pat!r}")


def _request_stream(spec: TraceSpec, seed: int, base_page: int) -> Iterator[tuple]:
    """Infinite stream of (pc, address) pairs for one spec."""
    pat = spec.pattern
    if isinstance(pat, Interleaved):
        subs = []
        page_cursor = base_page
        for part in pat.parts:
            subs.append(_request_stream(part, seed, page_cursor))
            page_cursor += _pattern_pages(part.pattern)
        while True:
            for sub in subs:
                yield next(sub)
    else:
        offsets = _offset_stream(pat, seed)
        pc_count = len(spec.pcs)
        i = 0
        for page, off in offsets:
            pc = spec.pcs[i % pc_count]
            addr = ((base_page + page) << 12) | (off << 6)
            yield pc, addr
            i += 1


def generate_trace(spec: TraceSpec, seed: int = 0) -> Iterator[MemoryRequest]:
    """Yield spec.length deterministic requests with ticks 0, 1, 2, ..."""
    _validate(spec)
    stream = _request_stream(spec, seed, _BASE_PAGE)
    for tick in range(spec.length):
        pc, addr = next(stream)
        yield MemoryRequest(tick=tick, pc=pc, address=addr, kind="L")


def read_trace(path) -> Iterator[MemoryRequest]:
    """Parse a canonical trace file, yielding requests with ticks 0, 1, 2, ...

    Raises FormatError (with line number and offending field) on malformed
    lines; missing/unreadable files surface the usual OSError.
    """
    tick = 0
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise FormatError(lineno, line, "expected 3 comma-separated fields")
            pc_text, addr_text, kind = (p.strip() for p in parts)
            try:
                pc = int(pc_text, 16)
            except ValueError:
                raise FormatError(lineno, pc_text, "not a hex PC") from None
            try:
                addr = int(addr_text, 16)
            except ValueError:
                raise FormatError(lineno, addr_text, "not a hex address") from None
            if kind not in ("L", "S"):
                raise FormatError(lineno, kind, "kind must be L or S")
            if not (0 <= pc <= _U64) or not (0 <= addr <= _U64):
                raise FormatError(lineno, line, "value outside 64 bits")
            yield MemoryRequest(tick=tick, pc=pc, address=addr, kind=kind)
            tick += 1


def write_trace(requests: Iterable[MemoryRequest], path) -> int:
    """Write requests to a canonical trace file; returns the request count."""
    n = 0
    with open(path, "w", newline="\n") as fh:
        for req in requests:
            fh.write(f"{req.pc:#x},{req.address:#x},{req.kind}\n")
            n += 1
    return n
