"""(T, N, M)-Feldman patterns and their counting identities.

Given N building blocks A_1..A_N of a common length L, pattern k (1 <= k <= M)
is

    B_k = (A_1^{T N^{2k}} A_2^{T N^{2k}} ... A_N^{T N^{2k}})^{N^{2(M+1-k)}}

Every pattern has length T N^{2M+3} L and uses each block T N^{2M+2} times.
Two different patterns line up any pair of super-blocks A_i^{T N^2} and
A_j^{T N^2} in exactly a 1/N^2 fraction of super-block positions, which is
what makes them hard to match against each other in f-bar.

Patterns are built compressed, with blocks as :class:`Ref` leaves, so they
are never expanded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .words import (
    HWord,
    WordCollection,
    aligned_pair_counts,
    as_hword,
    cat,
    letter,
    power,
    ref_counts,
    run,
)

BLOCK_LEVEL = -1  # collection level used for the building-block Refs


@dataclass(frozen=True)
class FeldmanSpec:
    T: int
    N: int
    M: int
    blocks: tuple = field(default=())

    def __post_init__(self):
        if self.N < 2 or self.M < 1 or self.T < 1:
            raise ValueError("need N >= 2, M >= 1, T >= 1")
        blocks = tuple(as_hword(b) for b in self.blocks) if self.blocks else \
            tuple(letter(i) for i in range(1, self.N + 1))
        if len(blocks) != self.N:
            raise ValueError(f"expected {self.N} blocks, got {len(blocks)}")
        if len({b.length for b in blocks}) != 1:
            raise ValueError("building blocks must have equal length")
        object.__setattr__(self, "blocks", blocks)

    @property
    def block_length(self) -> int:
        return self.blocks[0].length

    def collection(self) -> WordCollection:
        return WordCollection(BLOCK_LEVEL, self.blocks)


@dataclass(frozen=True)
class FeldmanPattern:
    index: int  # k, 1-based
    word: HWord
    spec: FeldmanSpec

    @property
    def cycles(self) -> int:
        return self.spec.N ** (2 * (self.spec.M + 1 - self.index))

    def superblock_sequence(self) -> HWord:
        """The pattern read in units of A_i^{T N^2}, with symbols 1..N.

        Length N^{2M+1}: each A_i^{T N^{2k}} is N^{2k-2} super-blocks.
        """
        N, k = self.spec.N, self.index
        period = cat(run(i, N ** (2 * k - 2)) for i in range(1, N + 1))
        return power(period, self.cycles)


def pattern(spec: FeldmanSpec, k: int, refs: Sequence | None = None) -> FeldmanPattern:
    """Pattern number k (1-based) of ``spec``."""
    T, N, M = spec.T, spec.N, spec.M
    if not 1 <= k <= M:
        raise ValueError(f"pattern index {k} outside 1..{M}")
    if refs is None:
        refs = spec.collection().refs()
    period = cat(power(r, T * N ** (2 * k)) for r in refs)
    return FeldmanPattern(k, power(period, N ** (2 * (M + 1 - k))), spec)


def generate(spec: FeldmanSpec) -> list:
    """The M patterns of ``spec``, in order k = 1..M."""
    refs = spec.collection().refs()
    return [pattern(spec, k, refs) for k in range(1, spec.M + 1)]


def superblock_alignment(pk: FeldmanPattern, pl: FeldmanPattern) -> dict:
    """r(S_i, S_j, B_k, B_l) for all super-block symbols i, j in 1..N."""
    counts = aligned_pair_counts(pk.superblock_sequence(), pl.superblock_sequence())
    N = pk.spec.N
    return {(i, j): counts.get((i, j), 0) for i in range(1, N + 1) for j in range(1, N + 1)}


def verify_patterns(patterns: Sequence[FeldmanPattern]) -> dict:
    """Check occurrence counts, lengths and super-block alignment.

    Returns a report with ``ok`` and a list of ``failures``; pairs k == l
    are skipped since the alignment identity only concerns distinct patterns.
    """
    if not patterns:
        return {"ok": True, "failures": [], "checked": 0}
    spec = patterns[0].spec
    T, N, M, L = spec.T, spec.N, spec.M, spec.block_length
    want_occ = T * N ** (2 * M + 2)
    want_len = T * N ** (2 * M + 3) * L
    seq_len = N ** (2 * M + 1)
    failures = []
    checked = 0
    occurrences = {}
    for p in patterns:
        rc = ref_counts(p.word, BLOCK_LEVEL)
        occ = [rc.get((BLOCK_LEVEL, i), 0) for i in range(N)]
        occurrences[p.index] = occ
        checked += 2
        if any(c != want_occ for c in occ):
            failures.append({"check": "occurrences", "k": p.index, "got": occ, "want": want_occ})
        if p.word.length != want_len:
            failures.append({"check": "length", "k": p.index, "got": p.word.length, "want": want_len})
    ratios = {}
    for pk in patterns:
        for pl in patterns:
            if pk.index == pl.index:
                continue
            table = superblock_alignment(pk, pl)
            for (i, j), c in table.items():
                checked += 1
                ratio = Fraction(c, seq_len)
                ratios[(pk.index, pl.index, i, j)] = c
                if ratio != Fraction(1, N * N):
                    failures.append({"check": "alignment", "k": pk.index, "l": pl.index,
                                     "i": i, "j": j, "got": c, "want": seq_len // (N * N)})
    return {
        "ok": not failures,
        "failures": failures,
        "checked": checked,
        "occurrences_each": want_occ,
        "pattern_length": want_len,
        "superblock_length": seq_len,
        "occurrences": occurrences,
        "aligned_counts": ratios,
    }
