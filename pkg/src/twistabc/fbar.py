"""The f-bar distance between finite words.

A match between a and b is a set of index pairs (i_s, j_s), strictly
increasing in both coordinates, with a[i_s] == b[j_s].  A largest match is a
longest common subsequence, and

    fbar(a, b) = 1 - 2 |M| / (|a| + |b|)

for a largest match M.  Lengths are computed with the bit-parallel LCS
recurrence (it encodes the classical DP row by row in one integer); the
quadratic DP with a traceback gives witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EmptyInputs, NotASubdeletion


@dataclass(frozen=True)
class FbarValue:
    value: Fraction
    witness: tuple | None  # tuple of (i, j) pairs, or None if not requested

    @property
    def approx(self) -> float:
        return float(self.value)


def _masks(a: Sequence) -> dict:
    masks: dict = {}
    for i, x in enumerate(a):
        masks[x] = masks.get(x, 0) | (1 << i)
    return masks


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Length of a longest common subsequence, bit-parallel over ``a``."""
    if len(a) < len(b):
        a, b = b, a
    n = len(a)
    if n == 0 or len(b) == 0:
        return 0
    masks = _masks(a)
    full = (1 << n) - 1
    v = full
    for y in b:
        u = v & masks.get(y, 0)
        v = ((v + u) | (v - u)) & full
    return n - bin(v).count("1")


def lcs_table(a: Sequence, b: Sequence) -> list:
    """The classical (|a|+1) x (|b|+1) DP table."""
    n, m = len(a), len(b)
    t = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        ai, row, prev = a[i - 1], t[i], t[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = row[j - 1] if row[j - 1] >= prev[j] else prev[j]
    return t


def best_match(a: Sequence, b: Sequence) -> tuple:
    """A maximum match as a tuple of index pairs (i, j)."""
    t = lcs_table(a, b)
    i, j = len(a), len(b)
    pairs = []
    while i and j:
        if a[i - 1] == b[j - 1] and t[i][j] == t[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif t[i - 1][j] >= t[i][j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return tuple(pairs)


def is_match(a: Sequence, b: Sequence, pairs) -> bool:
    last_i = last_j = -1
    for i, j in pairs:
        if i <= last_i or j <= last_j or a[i] != b[j]:
            return False
        last_i, last_j = i, j
    return True


def fbar(a: Sequence, b: Sequence, witness: bool = False) -> FbarValue:
    a, b = tuple(a), tuple(b)
    total = len(a) + len(b)
    if total == 0:
        raise EmptyInputs("fbar of two empty words")
    if witness:
        pairs = best_match(a, b)
        size = len(pairs)
    else:
        pairs, size = None, lcs_length(a, b)
    return FbarValue(1 - Fraction(2 * size, total), pairs)


class WordBatch:
    """Many words packed into one padded integer grid for vectorized LCS."""

    def __init__(self, words: Sequence[Sequence]):
        self.words = [tuple(w) for w in words]
        symbols = sorted({x for w in self.words for x in w}, key=repr)
        self.code = {x: k + 1 for k, x in enumerate(symbols)}  # 0 pads
        width = max((len(w) for w in self.words), default=0)
        self.grid = np.zeros((len(self.words), width), dtype=np.int64)
        for r, w in enumerate(self.words):
            self.grid[r, :len(w)] = [self.code[x] for x in w]

    def __len__(self):
        return len(self.words)


def lcs_length_many(a: Sequence, bs) -> np.ndarray:
    """LCS lengths of ``a`` against every word of ``bs`` at once.

    Same bit-parallel recurrence, vectorized over the second argument.
    ``bs`` is a list of words or a prepared :class:`WordBatch`; ``len(a)``
    must be at most 62 so that a row fits a uint64.
    """
    batch = bs if isinstance(bs, WordBatch) else WordBatch(bs)
    n = len(a)
    if n > 62:
        raise ValueError("first word too long for the vectorized kernel")
    if n == 0 or len(batch) == 0:
        return np.zeros(len(batch), dtype=np.int64)
    table = np.zeros(len(batch.code) + 1, dtype=np.uint64)
    for x, m in _masks(a).items():
        if x in batch.code:
            table[batch.code[x]] = m
    full = np.uint64((1 << n) - 1)
    v = np.full(len(batch), full, dtype=np.uint64)
    for c in range(batch.grid.shape[1]):
        u = v & table[batch.grid[:, c]]
        v = ((v + u) | (v - u)) & full
    bits = np.unpackbits(v.view(np.uint8)).reshape(len(batch), 64).sum(axis=1)
    return n - bits.astype(np.int64)


def is_subsequence(small: Sequence, big: Sequence) -> bool:
    it = iter(big)
    return all(any(x == y for y in it) for x in small)


def check_deletion_bound(a, b, a_del, b_del, gamma) -> dict:
    """Deleting few symbols cannot lower fbar by more than 2 gamma.

    ``a_del`` and ``b_del`` must be subsequences of ``a`` and ``b`` with at
    most floor(gamma (|a| + |b|)) symbols removed in total.
    """
    gamma = Fraction(gamma)
    if not 0 < gamma < 1:
        raise NotASubdeletion("gamma must lie strictly between 0 and 1")
    if not (is_subsequence(a_del, a) and is_subsequence(b_del, b)):
        raise NotASubdeletion("shortened words are not subsequences")
    removed = len(a) + len(b) - len(a_del) - len(b_del)
    if removed > gamma * (len(a) + len(b)):
        raise NotASubdeletion(f"{removed} deletions exceed the budget")
    lhs = fbar(a, b).value
    rhs = fbar(a_del, b_del).value - 2 * gamma
    return {"holds": lhs >= rhs, "fbar": lhs, "bound": rhs, "deleted": removed}
