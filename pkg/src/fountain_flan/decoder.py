"""Peeling decoder, GF(2) recoverability oracle, uncorrectable and stopping sets.

Decoding here is structural: over the erasure channel a received symbol is
always correct, so which inputs get resolved depends only on which outputs
survive.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .ensemble import CodeInstance
from .exceptions import GuardViolation

MAX_ENUM_K = 24


@dataclass(frozen=True)
class ErasurePattern:
    erased: frozenset[int]
    n: int

    @classmethod
    def of(cls, code: CodeInstance, erased: Iterable[int]) -> "ErasurePattern":
        erased = frozenset(int(i) for i in erased)
        bad = sorted(i for i in erased if not 0 <= i < code.n)
        if bad:
            raise ValueError(f"erasure indices out of range for n={code.n}: {bad}")
        return cls(erased, code.n)

    @classmethod
    def from_mask(cls, code: CodeInstance, mask: int) -> "ErasurePattern":
        return cls(frozenset(i for i in range(code.n) if mask >> i & 1), code.n)

    @property
    def size(self) -> int:
        return len(self.erased)

    def erased_edge_count(self, code: CodeInstance) -> int:
        return sum(len(code.out_adj[i]) for i in self.erased)


@dataclass(frozen=True)
class DecodeOutcome:
    recovered: frozenset[int]
    residual: frozenset[int]
    trivially_uncorrectable: frozenset[int]


@dataclass(frozen=True)
class StoppingSetReport:
    sets: list[frozenset[int]]
    max_size: int


def _erased(code: CodeInstance, e) -> frozenset[int]:
    if isinstance(e, ErasurePattern):
        if e.n != code.n:
            raise ValueError("erasure pattern built for a different code length")
        return e.erased
    return ErasurePattern.of(code, e).erased


def maximal_uncorrectable_set(code: CodeInstance, e) -> frozenset[int]:
    """Inputs whose every output neighbor is erased (degree-0 inputs included).

    Any union of such sets has the same property, so this is the unique
    maximal uncorrectable set of the pattern.
    """
    erased = _erased(code, e)
    return frozenset(v for v in range(code.k) if code.in_adj[v] <= erased)


def peel_decode(code: CodeInstance, e, rng: np.random.Generator | None = None) -> DecodeOutcome:
    """Run the peeling decoder on the outputs that survive ``e``.

    With ``rng`` the next degree-one output is picked at random instead of
    FIFO; the final residual does not depend on this choice.
    """
    erased = _erased(code, e)
    unresolved = {i: set(nb) for i, nb in enumerate(code.out_adj) if i not in erased}
    ripple = [i for i, nb in unresolved.items() if len(nb) == 1]
    resolved: set[int] = set()
    head = 0
    while head < len(ripple):
        if rng is not None:
            pick = head + int(rng.integers(len(ripple) - head))
            ripple[head], ripple[pick] = ripple[pick], ripple[head]
        i = ripple[head]
        head += 1
        nb = unresolved[i]
        if len(nb) != 1:
            continue
        (v,) = nb
        resolved.add(v)
        for c in code.in_adj[v]:
            rest = unresolved.get(c)
            if rest is None or v not in rest:
                continue
            rest.discard(v)
            if len(rest) == 1:
                ripple.append(c)
    recovered = frozenset(resolved)
    return DecodeOutcome(
        recovered=recovered,
        residual=frozenset(range(code.k)) - recovered,
        trivially_uncorrectable=maximal_uncorrectable_set(code, erased),
    )


def peel_residual_mask(code: CodeInstance, erased_mask: int) -> int:
    """Bitmask flavour of :func:`peel_decode` used by the exhaustive loops."""
    k = code.k
    rows = [0] * code.n
    for i, nb in enumerate(code.out_adj):
        if not erased_mask >> i & 1:
            m = 0
            for j in nb:
                m |= 1 << j
            rows[i] = m
    unknown = (1 << k) - 1
    live = [i for i in range(code.n) if rows[i]]
    progress = True
    while progress:
        progress = False
        nxt = []
        for i in live:
            r = rows[i] & unknown
            if r == 0:
                continue
            if r & (r - 1) == 0:
                unknown &= ~r
                progress = True
            else:
                nxt.append(i)
        live = nxt
    return unknown


def is_stopping_set(code: CodeInstance, subset: Iterable[int]) -> bool:
    """True iff every output touching ``subset`` touches it at least twice."""
    subset = set(subset)
    if not subset:
        raise ValueError("the empty set is not considered a stopping set")
    if any(not 0 <= v < code.k for v in subset):
        raise ValueError("subset has indices outside [0, k)")
    checks = set().union(*(code.in_adj[v] for v in subset))
    return all(len(subset.intersection(code.out_adj[c])) >= 2 for c in checks)


def enumerate_stopping_sets(code: CodeInstance, max_size: int) -> StoppingSetReport:
    """Exhaustively list nonempty stopping sets of size ``<= max_size``."""
    if code.k > MAX_ENUM_K:
        raise GuardViolation(f"stopping-set enumeration needs k <= {MAX_ENUM_K}, got k={code.k}")
    if not 1 <= max_size <= max(code.k, 1):
        raise ValueError(f"max_size must lie in [1, k={code.k}]")
    out_masks = []
    for nb in code.out_adj:
        m = 0
        for j in nb:
            m |= 1 << j
        out_masks.append(m)
    found = []
    for size in range(1, min(max_size, code.k) + 1):
        for combo in combinations(range(code.k), size):
            s = 0
            for j in combo:
                s |= 1 << j
            ok = True
            for m in out_masks:
                hit = m & s
                if hit and hit & (hit - 1) == 0:
                    ok = False
                    break
            if ok:
                found.append(frozenset(combo))
    return StoppingSetReport(found, max((len(s) for s in found), default=0))


def ge_recoverable(code: CodeInstance, e) -> frozenset[int]:
    """Inputs pinned down by the surviving equations (ML erasure decoding).

    Input ``j`` is recoverable iff the unit vector ``e_j`` lies in the GF(2)
    row space of the surviving outputs' incidence vectors.
    """
    erased = _erased(code, e)
    pivots: dict[int, int] = {}  # leading bit -> reduced row
    for i, nb in enumerate(code.out_adj):
        if i in erased:
            continue
        row = 0
        for j in nb:
            row |= 1 << j
        row = _reduce(row, pivots)
        if row:
            lead = row.bit_length() - 1
            for b, r in list(pivots.items()):
                if r >> lead & 1:
                    pivots[b] = r ^ row
            pivots[lead] = row
    # fully reduced basis: e_j is in the span iff it is itself a basis row
    return frozenset(b for b, r in pivots.items() if r == 1 << b)


def _reduce(row: int, pivots: dict[int, int]) -> int:
    for b, r in pivots.items():
        if row >> b & 1:
            row ^= r
    return row
