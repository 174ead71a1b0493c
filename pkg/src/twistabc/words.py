"""Words over a finite alphabet, flat and grammar-compressed.

Letters of the base alphabet are non-negative ints.  The two spacer letters
are the strings ``"b"`` and ``"e"``.  A flat word is any sequence of symbols
(we use tuples).  A compressed word is an :class:`HWord` DAG built from four
node kinds::

    Run(sym, count)       sym repeated count times
    Ref(level, id, w)     named pointer to a word of a collection
    Cat(children)         concatenation
    Pow(w, count)         w repeated count times

Lengths and symbol counts are cached on every node, so counting never needs
to expand a word.  Everything here is exact (ints and Fractions).
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import Ambiguous, LengthMismatch, NoParse, TooLarge

B = "b"
E = "e"
SPACERS = (B, E)
DEFAULT_CAP = 1 << 24


def is_spacer(x) -> bool:
    return x == B or x == E


def sym_key(x):
    """Sort key putting letters (ints) before the spacers."""
    return (1, x) if isinstance(x, str) else (0, x)


def _check_symbol(x):
    if isinstance(x, bool) or not (isinstance(x, int) and x >= 0 or x in SPACERS):
        raise ValueError(f"bad symbol {x!r}")


# Modular fingerprint parameters (probabilistic equality of huge words).
_FP_MOD = (1 << 61) - 1
_FP_BASE = 1_000_003


def _sym_code(x) -> int:
    if x == B:
        return 1
    if x == E:
        return 2
    return x + 3


def _geom(base_pow: int, count: int) -> int:
    """1 + r + r^2 + ... + r^(count-1) mod _FP_MOD, by doubling."""
    # s_chunk sums a chunk of 2^j terms, p_chunk = r^(2^j)
    k = count
    s_chunk, p_chunk = 1, base_pow
    total, shift = 0, 1
    while k:
        if k & 1:
            total = (total + shift * s_chunk) % _FP_MOD
            shift = shift * p_chunk % _FP_MOD
        s_chunk = (s_chunk + p_chunk * s_chunk) % _FP_MOD
        p_chunk = p_chunk * p_chunk % _FP_MOD
        k >>= 1
    return total


class HWord:
    """Base class of compressed word nodes.  Instances are immutable."""

    __slots__ = ("length", "_counts", "_rev", "_fp", "__weakref__")

    @property
    def counts(self) -> dict:
        """Symbol -> number of occurrences, computed on first use."""
        if self._counts is None:
            self._counts = self._compute_counts()
        return self._counts

    @counts.setter
    def counts(self, value):
        self._counts = value

    def __len__(self):
        # len() is limited to machine ints; prefer ``.length``
        return self.length

    def __repr__(self):
        text = to_sexpr(self)
        return text if len(text) < 120 else text[:117] + "..."

    def fingerprint(self):
        """(hash, B^length) modulo a Mersenne prime; equal words agree."""
        if self._fp is None:
            self._fp = self._compute_fp()
        return self._fp


class Run(HWord):
    __slots__ = ("sym", "count")

    def __init__(self, sym, count: int):
        _check_symbol(sym)
        if count <= 0:
            raise ValueError("Run count must be positive")
        self.sym, self.count = sym, count
        self.length = count
        self.counts = {sym: count}
        self._rev = self
        self._fp = None

    def _compute_fp(self):
        bp = pow(_FP_BASE, self.count, _FP_MOD)
        return (_sym_code(self.sym) * _geom(_FP_BASE, self.count) % _FP_MOD, bp)


class Ref(HWord):
    __slots__ = ("level", "id", "target")

    def __init__(self, level: int, id: int, target: HWord):
        self.level, self.id, self.target = level, id, target
        self.length = target.length
        self._counts = None
        self._rev = None
        self._fp = None

    def _compute_counts(self):
        return self.target.counts

    def _compute_fp(self):
        return self.target.fingerprint()


class Cat(HWord):
    __slots__ = ("children", "offsets")

    def __init__(self, children: Sequence[HWord]):
        self.children = tuple(children)
        offs, total = [], 0
        for ch in self.children:
            offs.append(total)
            total += ch.length
        self.offsets = tuple(offs)
        self.length = total
        self._counts = None
        self._rev = None
        self._fp = None

    def _compute_counts(self):
        counts: dict = {}
        for ch in self.children:
            for k, v in ch.counts.items():
                counts[k] = counts.get(k, 0) + v
        return counts

    def _compute_fp(self):
        h, p = 0, 1
        for ch in self.children:
            ch_h, ch_p = ch.fingerprint()
            h = (h + p * ch_h) % _FP_MOD
            p = p * ch_p % _FP_MOD
        return (h, p)


class Pow(HWord):
    __slots__ = ("word", "count")

    def __init__(self, word: HWord, count: int):
        if count <= 0:
            raise ValueError("Pow count must be positive")
        self.word, self.count = word, count
        self.length = word.length * count
        self._counts = None
        self._rev = None
        self._fp = None

    def _compute_counts(self):
        return {k: v * self.count for k, v in self.word.counts.items()}

    def _compute_fp(self):
        h, p = self.word.fingerprint()
        return (h * _geom(p, self.count) % _FP_MOD, pow(p, self.count, _FP_MOD))


EMPTY = Cat(())


# -- smart constructors ------------------------------------------------------

def run(sym, count: int) -> HWord:
    return Run(sym, count) if count > 0 else EMPTY


def letter(sym) -> HWord:
    return Run(sym, 1)


def cat(*parts) -> HWord:
    """Concatenate, dropping empty parts and merging adjacent equal runs.

    Accepts HWords or iterables of HWords.
    """
    items: list = []
    for p in parts:
        if isinstance(p, HWord):
            _push(items, p)
        else:
            for q in p:
                _push(items, q)
    if not items:
        return EMPTY
    if len(items) == 1:
        return items[0]
    return Cat(items)


def _push(items: list, w: HWord):
    if w.length == 0:
        return
    if isinstance(w, Cat):
        for ch in w.children:
            _push(items, ch)
        return
    if items and isinstance(w, Run) and isinstance(items[-1], Run) and items[-1].sym == w.sym:
        items[-1] = Run(w.sym, items[-1].count + w.count)
        return
    items.append(w)


def power(w: HWord, count: int) -> HWord:
    if count < 0:
        raise ValueError("negative power")
    if count == 0 or w.length == 0:
        return EMPTY
    if count == 1:
        return w
    if isinstance(w, Run):
        return Run(w.sym, w.count * count)
    if isinstance(w, Pow):
        return Pow(w.word, w.count * count)
    return Pow(w, count)


def from_seq(seq: Iterable) -> HWord:
    """Compress a flat sequence into runs."""
    out: list = []
    for x in seq:
        if out and out[-1][0] == x:
            out[-1][1] += 1
        else:
            out.append([x, 1])
    return cat(Run(x, c) for x, c in out)


def from_text(text: str) -> HWord:
    """Single-character symbols: digits become letters, b/e spacers."""
    return from_seq(parse_symbol(ch) for ch in text)


def parse_symbol(tok: str):
    if tok in SPACERS:
        return tok
    return int(tok)


def render_symbol(x) -> str:
    return x if isinstance(x, str) else str(x)


def as_hword(w) -> HWord:
    return w if isinstance(w, HWord) else from_seq(w)


# -- basic queries -------------------------------------------------------------

def length(w) -> int:
    return w.length if isinstance(w, HWord) else len(w)


def flatten(w: HWord, cap: int = DEFAULT_CAP) -> tuple:
    """Expand to a tuple of symbols; raises TooLarge beyond ``cap``."""
    if not isinstance(w, HWord):
        return tuple(w)
    if w.length > cap:
        raise TooLarge(f"word of length {w.length} exceeds cap {cap}")
    memo: dict = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        if isinstance(node, Run):
            res = (node.sym,) * node.count
        elif isinstance(node, Ref):
            res = go(node.target)
        elif isinstance(node, Cat):
            res = tuple(s for ch in node.children for s in go(ch))
        else:
            res = go(node.word) * node.count
        memo[key] = (node, res)
        return res

    return go(w)


def to_text(w, cap: int = DEFAULT_CAP) -> str:
    return "".join(render_symbol(x) for x in flatten(as_hword(w), cap))


def rev(w):
    """Reverse a word.  Structural on HWords, cached per node."""
    if not isinstance(w, HWord):
        if isinstance(w, str):
            return w[::-1]
        return type(w)(reversed(w)) if isinstance(w, (tuple, list)) else tuple(reversed(w))
    return _rev(w)


def _rev(w: HWord) -> HWord:
    if w._rev is not None:
        return w._rev
    if isinstance(w, Ref):
        r = _rev(w.target)
    elif isinstance(w, Cat):
        r = Cat([_rev(ch) for ch in reversed(w.children)]) if w.children else w
    else:
        r = Pow(_rev(w.word), w.count)
    w._rev = r
    return r


def count_symbol(x, w) -> int:
    if isinstance(w, HWord):
        return w.counts.get(x, 0)
    return sum(1 for s in w if s == x)


def freq(x, w) -> Fraction:
    n = length(w)
    if n == 0:
        raise ValueError("frequency in the empty word")
    return Fraction(count_symbol(x, w), n)


def symbol_at(w: HWord, i: int):
    if not 0 <= i < w.length:
        raise IndexError(i)
    while True:
        if isinstance(w, Run):
            return w.sym
        if isinstance(w, Ref):
            w = w.target
        elif isinstance(w, Cat):
            k = bisect.bisect_right(w.offsets, i) - 1
            i -= w.offsets[k]
            w = w.children[k]
        else:
            i %= w.word.length
            w = w.word


def slice_word(w: HWord, a: int, b: int) -> HWord:
    """The subword w[a:b] as an HWord, without expanding ``w``."""
    a, b = max(a, 0), min(b, w.length)
    if a >= b:
        return EMPTY
    if a == 0 and b == w.length:
        return w
    if isinstance(w, Run):
        return Run(w.sym, b - a)
    if isinstance(w, Ref):
        return slice_word(w.target, a, b)
    if isinstance(w, Cat):
        lo = bisect.bisect_right(w.offsets, a) - 1
        hi = bisect.bisect_left(w.offsets, b) - 1
        parts = []
        for k in range(lo, hi + 1):
            off = w.offsets[k]
            parts.append(slice_word(w.children[k], a - off, b - off))
        return cat(parts)
    L = w.word.length
    qa, ra = divmod(a, L)
    qb, rb = divmod(b, L)
    if qa == qb:
        return slice_word(w.word, ra, rb)
    return cat(slice_word(w.word, ra, L), power(w.word, qb - qa - 1), slice_word(w.word, 0, rb))


def window_counts(w: HWord, a: int, b: int) -> dict:
    return dict(slice_word(w, a, b).counts)


def words_equal(u, v, cap: int = DEFAULT_CAP) -> bool:
    """Symbol-for-symbol equality; exact when flattenable, fingerprint otherwise."""
    u, v = as_hword(u), as_hword(v)
    if u.length != v.length or u.counts != v.counts:
        return False
    if u.length <= cap:
        return flatten(u, cap) == flatten(v, cap)
    return u.fingerprint() == v.fingerprint()


# -- aligned pair counts ---------------------------------------------------------

def count_aligned_pairs(x, y, w, w2) -> int:
    """r(x, y, w, w2): positions i with w[i] = x and w2[i] = y."""
    if isinstance(w, HWord) or isinstance(w2, HWord):
        return aligned_pair_counts(as_hword(w), as_hword(w2)).get((x, y), 0)
    if len(w) != len(w2):
        raise LengthMismatch(f"{len(w)} != {len(w2)}")
    return sum(1 for s, t in zip(w, w2) if s == x and t == y)


def _scaled(d: Mapping, k: int) -> dict:
    return {key: v * k for key, v in d.items()}


def _add_into(acc: dict, d: Mapping):
    for key, v in d.items():
        acc[key] = acc.get(key, 0) + v


def aligned_pair_counts(u: HWord, v: HWord) -> dict:
    """Histogram of aligned symbol pairs of two equal-length compressed words.

    Works by structural recursion: runs read off counts of the other side,
    commensurable powers are folded to one common period, and a Cat splits
    the other word at its child boundaries.
    """
    if u.length != v.length:
        raise LengthMismatch(f"{u.length} != {v.length}")
    memo: dict = {}
    return _aligned(u, v, memo)


def _aligned(u: HWord, v: HWord, memo: dict) -> dict:
    if u.length == 0:
        return {}
    while isinstance(u, Ref):
        u = u.target
    while isinstance(v, Ref):
        v = v.target
    key = (id(u), id(v))
    hit = memo.get(key)
    if hit is not None:
        return hit[2]
    res = _aligned_uncached(u, v, memo)
    memo[key] = (u, v, res)  # keep nodes alive so ids stay unique
    return res


def _aligned_uncached(u, v, memo) -> dict:
    if isinstance(u, Run):
        return {(u.sym, y): c for y, c in v.counts.items() if c}
    if isinstance(v, Run):
        return {(x, v.sym): c for x, c in u.counts.items() if c}
    if isinstance(u, Pow) and isinstance(v, Pow):
        p1, p2 = u.word.length, v.word.length
        L = u.length
        if p2 % p1 == 0:
            return _scaled(_aligned(power(u.word, p2 // p1), v.word, memo), L // p2)
        if p1 % p2 == 0:
            return _scaled(_aligned(u.word, power(v.word, p1 // p2), memo), L // p1)
        g = p1 * p2 // math.gcd(p1, p2)
        if g < L:
            return _scaled(_aligned(power(u.word, g // p1), power(v.word, g // p2), memo), L // g)
        # incommensurable within one period: unroll the shorter repetition
        if u.count <= v.count:
            return _split_along([u.word] * u.count, v, memo, first=True)
        return _split_along([v.word] * v.count, u, memo, first=False)
    if isinstance(u, Cat):
        return _split_along(u.children, v, memo, first=True)
    if isinstance(v, Cat):
        return _split_along(v.children, u, memo, first=False)
    raise TypeError("unreachable node combination")


def _split_along(pieces, other, memo, first: bool) -> dict:
    acc: dict = {}
    off = 0
    for p in pieces:
        seg = slice_word(other, off, off + p.length)
        part = _aligned(p, seg, memo) if first else _aligned(seg, p, memo)
        _add_into(acc, part)
        off += p.length
    return acc


def ref_counts(w: HWord, level: int | None = None) -> Counter:
    """Occurrences of Ref nodes (by (level, id)) counted with multiplicity.

    Refs are leaves here: we do not descend into their targets.
    """
    memo: dict = {}

    def go(node) -> Counter:
        key = id(node)
        if key in memo:
            return memo[key][1]
        c: Counter = Counter()
        if isinstance(node, Ref):
            if level is None or node.level == level:
                c[(node.level, node.id)] = 1
            else:
                c = go(node.target)
        elif isinstance(node, Cat):
            for ch in node.children:
                c.update(go(ch))
        elif isinstance(node, Pow):
            c = Counter({k: n * node.count for k, n in go(node.word).items()})
        memo[key] = (node, c)
        return c

    return go(w)


# -- collections -----------------------------------------------------------------

class WordCollection:
    """An ordered list of equal-length words forming one level."""

    def __init__(self, level: int, words: Sequence):
        self.level = level
        self.words = tuple(as_hword(w) for w in words)
        lens = {w.length for w in self.words}
        if len(lens) > 1:
            raise LengthMismatch(f"level {level} words have lengths {sorted(lens)}")
        self.word_length = lens.pop() if lens else 0

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __getitem__(self, i):
        return self.words[i]

    def ref(self, i: int) -> Ref:
        return Ref(self.level, i, self.words[i])

    def refs(self) -> list:
        return [self.ref(i) for i in range(len(self.words))]

    def flat(self, cap: int = DEFAULT_CAP) -> list:
        return [flatten(w, cap) for w in self.words]


def _encode_flat(words: Sequence[Sequence]) -> list:
    """Map flat words to str so that substring search runs in C."""
    table: dict = {}
    out = []
    for w in words:
        out.append("".join(table.setdefault(x, chr(0x100 + len(table))) for x in w))
    return out


def check_unique_readability(coll, cap: int = DEFAULT_CAP):
    """Brute force over all (u, v, w) and all interior offsets.

    Returns ``(True, None)`` or ``(False, dict(u=, v=, w=, offset=))`` where
    u, v, w are indices into the collection.
    """
    words = coll.flat(cap) if isinstance(coll, WordCollection) else [flatten(as_hword(w), cap) for w in coll]
    enc = _encode_flat(words)
    for iu, su in enumerate(enc):
        for iv, sv in enumerate(enc):
            uv = su + sv
            for iw, sw in enumerate(enc):
                if not sw:
                    continue
                last = len(uv) - len(sw)
                pos = uv.find(sw, 1)
                while 0 < pos < last:
                    return False, {"u": iu, "v": iv, "w": iw, "offset": pos}
    return True, None


def parse_into_level(segment, level_words: Sequence, cap: int = DEFAULT_CAP):
    """Decompose ``segment`` as u_0 w_1 u_1 ... w_l u_l with spacer runs u_i.

    ``level_words`` are the words of the target level.  Returns a dict with
    ``blocks`` (list of (start, word index)), ``spacers`` (positions) and the
    exact ``spacer_fraction``.  Raises NoParse or Ambiguous.
    """
    seg = flatten(as_hword(segment), cap)
    words = [flatten(as_hword(w), cap) for w in level_words]
    n = len(seg)
    enc = _encode_flat([seg] + words)
    s_enc, w_enc = enc[0], enc[1:]
    # ways[i] counts parses of seg[:i] (capped at 2); back[i] is the last step
    ways = [0] * (n + 1)
    back: list = [None] * (n + 1)
    ways[0] = 1
    for i in range(n):
        if not ways[i]:
            continue
        if is_spacer(seg[i]):
            _relax(ways, back, i + 1, ways[i], (i, None))
        for k, we in enumerate(w_enc):
            if we and s_enc.startswith(we, i):
                _relax(ways, back, i + len(we), ways[i], (i, k))
    if ways[n] == 0:
        raise NoParse("segment is not a concatenation of words and spacers")
    if ways[n] > 1:
        raise Ambiguous("segment parses in more than one way")
    blocks, spacers = [], []
    i = n
    while i > 0:
        start, k = back[i]
        if k is None:
            spacers.append(start)
        else:
            blocks.append((start, k))
        i = start
    blocks.reverse()
    spacers.reverse()
    frac = Fraction(len(spacers), n) if n else Fraction(0)
    return {"blocks": blocks, "spacers": spacers, "spacer_fraction": frac}


def _relax(ways, back, j, add, step):
    ways[j] = min(2, ways[j] + add)
    if back[j] is None:
        back[j] = step


def check_strongly_uniform(lower: Sequence, upper: Sequence, parse: Callable | None = None):
    """Is r(w, w') the same constant for every lower w and upper w'?

    ``parse(upper_word)`` must return a mapping from lower-word index to its
    number of occurrences.  By default a compressed upper word is read
    structurally through its Refs to a :class:`WordCollection` ``lower``, and
    anything else is flattened and parsed.
    Returns ``(ok, c)`` with ``c`` the common count or None.
    """
    if parse is None:
        parse = _default_parser(lower)
    values = set()
    for w2 in upper:
        occ = parse(w2)
        for i in range(len(lower)):
            values.add(occ.get(i, 0))
    if len(values) == 1:
        return True, values.pop()
    return False, None


def _default_parser(lower):
    if isinstance(lower, WordCollection):
        lvl = lower.level

        def by_refs(w2):
            if isinstance(w2, HWord):
                rc = ref_counts(w2, lvl)
                if rc:
                    return {i: n for (l, i), n in rc.items()}
            return _by_flat_parse(lower.words, w2)

        return by_refs
    return lambda w2: _by_flat_parse(lower, w2)


def _by_flat_parse(lower, w2):
    res = parse_into_level(w2, lower)
    return Counter(k for _, k in res["blocks"])


# -- serialization ------------------------------------------------------------------

def to_sexpr(w: HWord) -> str:
    parts: list = []
    _emit(w, parts)
    return "".join(parts)


def _emit(w: HWord, out: list):
    if isinstance(w, Run):
        out.append(f"(run {render_symbol(w.sym)} {w.count})")
    elif isinstance(w, Ref):
        out.append(f"(ref {w.level} {w.id})")
    elif isinstance(w, Cat):
        out.append("(cat")
        for ch in w.children:
            out.append(" ")
            _emit(ch, out)
        out.append(")")
    else:
        out.append("(pow ")
        _emit(w.word, out)
        out.append(f" {w.count})")


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def from_sexpr(text: str, resolve: Callable | Mapping | None = None) -> HWord:
    """Parse one expression.  ``resolve`` maps (level, id) to the target word."""
    if isinstance(resolve, Mapping):
        table = resolve
        resolve = lambda lvl, i: table[(lvl, i)]
    toks = list(_tokens(text))
    pos = 0

    def expr():
        nonlocal pos
        if toks[pos] != "(":
            raise ValueError(f"expected '(' at token {pos}")
        head = toks[pos + 1]
        pos += 2
        if head == "run":
            sym, cnt = parse_symbol(toks[pos]), int(toks[pos + 1])
            pos += 2
            node = Run(sym, cnt)
        elif head == "ref":
            lvl, i = int(toks[pos]), int(toks[pos + 1])
            pos += 2
            if resolve is None:
                raise ValueError("ref without resolver")
            node = Ref(lvl, i, resolve(lvl, i))
        elif head == "cat":
            kids = []
            while toks[pos] != ")":
                kids.append(expr())
            node = Cat(kids)
        elif head == "pow":
            inner = expr()
            cnt = int(toks[pos])
            pos += 1
            node = Pow(inner, cnt)
        else:
            raise ValueError(f"unknown node {head!r}")
        if toks[pos] != ")":
            raise ValueError(f"expected ')' at token {pos}")
        pos += 1
        return node

    node = expr()
    if pos != len(toks):
        raise ValueError("trailing tokens")
    return node


def dump_collection(coll: WordCollection) -> str:
    lines = [f"level={coll.level} count={len(coll)} len={coll.word_length}"]
    lines += [to_sexpr(w) for w in coll.words]
    return "\n".join(lines) + "\n"


def load_collection(text: str, resolve=None) -> WordCollection:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = dict(kv.split("=") for kv in lines[0].split())
    level, count, ln = int(head["level"]), int(head["count"]), int(head["len"])
    words = [from_sexpr(line, resolve) for line in lines[1:]]
    if len(words) != count:
        raise ValueError(f"header says {count} words, found {len(words)}")
    coll = WordCollection(level, words)
    if words and coll.word_length != ln:
        raise LengthMismatch(f"header len {ln} != {coll.word_length}")
    return coll
