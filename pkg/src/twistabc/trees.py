"""Finite pieces of trees on the natural numbers and their groups of involutions.

Finite sequences of naturals are enumerated as sigma_0, sigma_1, ... ordered
by (length + sum of entries), then lexicographically.  A proper initial
segment always has a smaller key, so every proper predecessor of sigma_n is
some sigma_m with m < n.

A :class:`TreePrefix` is the finite window T ∩ {sigma_m : m <= n_max} of a
tree T.  For each level s >= 1 and stage n, G_s^n is the F_2 vector space
with one generator per node of length s among sigma_0..sigma_n in T.
Group elements are frozensets of generator nodes (a sum of distinct
generators), so addition is symmetric difference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import LevelBeyondPrefix, NotClosed

Node = tuple  # a finite sequence of naturals


# -- canonical enumeration -----------------------------------------------------

@lru_cache(maxsize=None)
def _shell(t: int) -> tuple:
    """All sequences with length + sum == t, in lexicographic order."""
    if t == 0:
        return ((),)
    out = []
    # entries x_i + 1 form a composition of t
    for cuts in itertools.product((0, 1), repeat=t - 1):
        parts, cur = [], 1
        for c in cuts:
            if c:
                parts.append(cur)
                cur = 1
            else:
                cur += 1
        parts.append(cur)
        out.append(tuple(p - 1 for p in parts))
    out.sort()
    return tuple(out)


def iter_sequences() -> Iterator[Node]:
    for t in itertools.count():
        yield from _shell(t)


def canonical_enumeration(n: int) -> list:
    """sigma_0 .. sigma_n."""
    return list(itertools.islice(iter_sequences(), n + 1))


def sigma(n: int) -> Node:
    """sigma_n without listing its predecessors one shell at a time."""
    if n < 0:
        raise ValueError("negative index")
    if n == 0:
        return ()
    t = n.bit_length()  # shells 0..t-1 hold 2^(t-1) sequences in total
    return _shell(t)[n - (1 << (t - 1))]


def index_of(node: Iterable[int]) -> int:
    node = tuple(node)
    if any(x < 0 for x in node):
        raise ValueError("entries must be natural numbers")
    t = len(node) + sum(node)
    if t == 0:
        return 0
    shell = _shell(t)
    lo, hi = 0, len(shell)
    while lo < hi:  # bisect on tuples
        mid = (lo + hi) // 2
        if shell[mid] < node:
            lo = mid + 1
        else:
            hi = mid
    return (1 << (t - 1)) + lo


# -- tree prefixes ---------------------------------------------------------------

class TreePrefix:
    """T ∩ {sigma_m : m <= n_max}, closed under initial segments."""

    def __init__(self, members: Iterable, n_max: int | None = None):
        nodes = {tuple(m) for m in members}
        nodes.add(())
        idx = {v: index_of(v) for v in nodes}
        if n_max is None:
            n_max = max(idx.values())
        for v, i in idx.items():
            if i > n_max:
                raise LevelBeyondPrefix(f"{v} is sigma_{i}, beyond n_max={n_max}")
            for k in range(len(v)):
                if v[:k] not in nodes:
                    raise NotClosed(f"{v[:k]} (initial segment of {v}) missing")
        self.n_max = n_max
        self.index = idx
        self.nodes = tuple(sorted(nodes, key=idx.__getitem__))

    def __contains__(self, node) -> bool:
        return tuple(node) in self.index

    def __repr__(self):
        return f"TreePrefix(n_max={self.n_max}, nodes={len(self.nodes)})"

    @classmethod
    def full(cls, n_max: int) -> "TreePrefix":
        """Every sequence sigma_0..sigma_n_max."""
        return cls(canonical_enumeration(n_max), n_max)

    @classmethod
    def from_text(cls, text: str, n_max: int | None = None) -> "TreePrefix":
        members = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            members.append(() if line == "-" else tuple(int(x) for x in line.split()))
        return cls(members, n_max)

    def to_text(self) -> str:
        return "".join((" ".join(map(str, v)) if v else "-") + "\n" for v in self.nodes)

    def _check(self, n: int):
        if n > self.n_max:
            raise LevelBeyondPrefix(f"stage {n} beyond prefix window {self.n_max}")

    def nodes_upto(self, n: int) -> list:
        self._check(n)
        return [v for v in self.nodes if self.index[v] <= n]

    def has_sigma(self, n: int) -> bool:
        """Is sigma_n a member of T?"""
        self._check(n)
        return sigma(n) in self.index

    def max_length(self) -> int:
        return max(len(v) for v in self.nodes)


def M_of(prefix: TreePrefix, s: int) -> int | None:
    """Least n with sigma_n in T of length s, or None within the window."""
    best = None
    for v, i in prefix.index.items():
        if len(v) == s and (best is None or i < best):
            best = i
    return best


def s_of(prefix: TreePrefix, n: int) -> int:
    """Length of the longest sigma_m in T with m <= n."""
    return max(len(v) for v in prefix.nodes_upto(n))


# -- groups of involutions ------------------------------------------------------------

@dataclass(frozen=True)
class InvolutionGroup:
    s: int
    n: int
    generators: tuple  # nodes of length s, in enumeration order

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def order(self) -> int:
        return 1 << self.rank

    identity = frozenset()

    def elements(self) -> Iterator[frozenset]:
        gens = self.generators
        for mask in range(self.order):
            yield frozenset(g for b, g in enumerate(gens) if mask >> b & 1)

    def contains(self, g) -> bool:
        return set(g) <= set(self.generators)

    @staticmethod
    def add(a: frozenset, b: frozenset) -> frozenset:
        return frozenset(a) ^ frozenset(b)

    @staticmethod
    def parity(g) -> int:
        """0 for even, 1 for odd."""
        return len(g) % 2

    def to_mask(self, g) -> int:
        pos = {v: b for b, v in enumerate(self.generators)}
        return sum(1 << pos[v] for v in g)

    def from_mask(self, mask: int) -> frozenset:
        return frozenset(v for b, v in enumerate(self.generators) if mask >> b & 1)


def build_group(prefix: TreePrefix, s: int, n: int) -> InvolutionGroup:
    """G_s^n; G_0^n is trivial."""
    if s < 0:
        raise ValueError("negative level")
    nodes = prefix.nodes_upto(n)
    gens = () if s == 0 else tuple(v for v in nodes if len(v) == s)
    return InvolutionGroup(s, n, gens)


def rho(t: int, s: int, element) -> frozenset:
    """The homomorphism G_t -> G_s sending a generator to its initial segment."""
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    if s == 0:
        return frozenset()
    out: set = set()
    for v in element:
        if len(v) != t:
            raise ValueError(f"{v} is not a level-{t} generator")
        out ^= {v[:s]}
    return frozenset(out)


def kernel_size(prefix: TreePrefix, t: int, s: int, n: int) -> int:
    """|ker rho_{t,s}| on G_t^n.  Generators map to generators, so the rank
    of rho is the number of distinct images."""
    g = build_group(prefix, t, n)
    if s == 0:
        return g.order
    images = {v[:s] for v in g.generators}
    return 1 << (g.rank - len(images))


def odd_parity_chain(prefix: TreePrefix, s: int) -> list | None:
    """A chain g_1, ..., g_s of single generators with rho(g_t) = g_{t-1}.

    Built from the first node of length s; None if the window has none.
    """
    m = M_of(prefix, s)
    if m is None:
        return None
    node = sigma(m)
    return [frozenset({node[:t]}) for t in range(1, s + 1)]
