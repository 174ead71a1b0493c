"""Twisting coefficients, the index sequences j_i and psi_n, and the
twisting operator with its reversed and composed forms.

Given positive integers (C_n, l_n) the derived numbers are::

    p_0 = 0, q_0 = 1
    k_n     = 2^(n+2) q_n C_n
    q_(n+1) = k_n l_n q_n^2
    p_(n+1) = p_n k_n l_n q_n + 1
    m_n     = C_n l_n q_n            (mixing time)

The twisting operator wraps k_n blocks of length q_n into a word of length
q_(n+1).  For each m < q_n, i < 2^(n+2) q_n and c < C_n it emits the
1-subsection ``b^B w^(l_n - 1) e^E`` with ``E = (psi_n(i) + j_m) mod q_n``
and ``B = q_n - E``, where w is block number i*C_n + c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (BadBlockCount, IndexOutOfRange, NotCoprime, NotTwistShaped,
                     WrongBlockCount, WrongBlockLength)
from .words import (B, E, DEFAULT_CAP, HWord, Ref, Run, Cat, Pow, as_hword, cat, flatten,
                    from_seq, power, rev, run, slice_word, words_equal)


@dataclass(frozen=True)
class TwistParams:
    C: tuple
    l: tuple
    k: tuple
    p: tuple
    q: tuple
    m: tuple
    inv_l_sum: Fraction = field(default=Fraction(0))

    @property
    def levels(self) -> int:
        """Number of levels n for which the operator C_n is defined."""
        return len(self.C)

    def alpha(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])

    def mixing_residue(self, n: int) -> Fraction:
        """m_n * alpha_(n+1) reduced mod 1."""
        x = self.m[n] * self.alpha(n + 1)
        return x - math.floor(x)

    def as_dict(self) -> dict:
        return {"C": list(self.C), "l": list(self.l), "k": list(self.k),
                "p": list(self.p), "q": list(self.q), "m": list(self.m)}


def derive_params(C: Sequence[int], l: Sequence[int], n_max: int | None = None) -> TwistParams:
    """Iterate the recurrences for levels 0..n_max (default: all given)."""
    if len(C) != len(l):
        raise ValueError("C and l must have the same length")
    if n_max is None:
        n_max = len(C) - 1
    if n_max >= len(C):
        raise ValueError(f"need {n_max + 1} coefficients, got {len(C)}")
    Cs, ls = tuple(C[: n_max + 1]), tuple(l[: n_max + 1])
    if any(c < 1 for c in Cs) or any(x < 1 for x in ls):
        raise ValueError("coefficients must be positive")
    p, q, k, m = [0], [1], [], []
    for n in range(n_max + 1):
        kn = 2 ** (n + 2) * q[n] * Cs[n]
        k.append(kn)
        m.append(Cs[n] * ls[n] * q[n])
        q.append(kn * ls[n] * q[n] ** 2)
        p.append(p[n] * kn * ls[n] * q[n] + 1)
    inv = sum((Fraction(1, x) for x in ls), Fraction(0))
    return TwistParams(Cs, ls, tuple(k), tuple(p), tuple(q), tuple(m), inv)


def j_index(p: int, q: int, i: int) -> int:
    """j_i in [0, q) with p * j_i = i (mod q); every j is 0 when q = 1."""
    if q == 1:
        return 0
    if math.gcd(p, q) != 1:
        raise NotCoprime(f"gcd({p}, {q}) != 1")
    return pow(p, -1, q) * i % q


def j_table(p: int, q: int) -> list:
    if q == 1:
        return [0]
    inv = j_index(p, q, 1)
    return [inv * i % q for i in range(q)]


def _psi(i: int, n: int, q: int, jt) -> int:
    lim = 2 ** (n + 1) * q
    if not 0 <= i < 2 * lim:
        raise IndexOutOfRange(f"psi_{n}({i}) needs 0 <= i < {2 * lim}")
    if q == 1:
        return 0
    if i < lim:
        return 0 if i % 2 == 0 else jt[((i + 1) // 2) % q]
    return jt[(i // 2 + 1) % q] if i % 2 == 0 else jt[1]


def psi(n: int, i: int, params: TwistParams) -> int:
    q = params.q[n]
    jt = j_table(params.p[n], q)
    return _psi(i, n, q, jt)


def psi_table(n: int, params: TwistParams) -> list:
    q = params.q[n]
    jt = j_table(params.p[n], q)
    return [_psi(i, n, q, jt) for i in range(2 ** (n + 2) * q)]


def psi_array(n: int, q: int, jt) -> np.ndarray:
    """psi_n(i) for every i < 2^(n+2) q as one array."""
    jt = np.asarray(jt, dtype=np.int64)
    lim = 2 ** (n + 1) * q
    i = np.arange(2 * lim)
    if q == 1:
        return np.zeros(2 * lim, dtype=np.int64)
    low = np.where(i % 2 == 0, 0, jt[((i + 1) // 2) % q])
    high = np.where(i % 2 == 0, jt[(i // 2 + 1) % q], jt[1])
    return np.where(i < lim, low, high)


def check_reflection_identities(p: int, q: int, n: int) -> dict:
    """q - j_i = j_(q-i), j_(q-1-m) = q - j_(m+1) = q - j_m - j_1 (mod q) and
    psi_n(2^(n+2) q - 1 - i) = j_1 - psi_n(i) (mod q), over every index.

    Vectorized over the index.
    """
    jt = (j_index(p, q, 1) * np.arange(q, dtype=np.int64)) % q
    i = np.arange(1, q)
    j_ok = bool(np.all((q - jt[i]) == jt[q - i])) if q > 1 else True
    m = np.arange(q)
    lhs = jt[(q - 1 - m) % q] % q
    mid = (q - jt[(m + 1) % q]) % q
    rhs = (q - jt[m] - jt[1 % q]) % q
    jm_ok = bool(np.all(lhs == mid) and np.all(mid == rhs))
    pt = psi_array(n, q, jt)
    psi_ok = bool(np.all(pt[::-1] % q == (jt[1 % q] - pt) % q))
    return {"p": p, "q": q, "n": n, "eq_j": j_ok, "eq_j_shift": jm_ok, "eq_psi": psi_ok,
            "ok": j_ok and jm_ok and psi_ok}


def spacer_exponents(n: int, m: int, i: int, params: TwistParams, tilde: bool = False,
                     _tables=None):
    """(leading run length, trailing run length) of one 1-subsection.

    For the forward operator the leading run is b and the trailing run e;
    for the tilde operator the roles swap.  Both always sum to q_n, the
    trailing run lies in [0, q_n) and the leading one in (0, q_n].
    """
    q = params.q[n]
    if _tables is None:
        jt = j_table(params.p[n], q)
        ps = _psi(i, n, q, jt)
    else:
        jt, pt = _tables
        ps = pt[i]
    if tilde:
        lead_e = (q - ps - jt[m]) % q
        return lead_e, q - lead_e
    tail_e = (ps + jt[m]) % q
    return q - tail_e, tail_e


def map_letters(w: HWord, image, memo: dict | None = None) -> HWord:
    """Apply the substitution letter -> image(letter) to a compressed word."""
    if memo is None:
        memo = {}

    def go(node):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        if isinstance(node, Run):
            res = power(image(node.sym), node.count)
        elif isinstance(node, Ref):
            res = go(node.target)
        elif isinstance(node, Cat):
            res = cat([go(ch) for ch in node.children])
        else:
            res = power(go(node.word), node.count)
        memo[key] = (node, res)
        return res

    return go(w)


def _normalize_blocks(n, blocks, params):
    """Return (preword over block indices, block table)."""
    if isinstance(blocks, tuple) and len(blocks) == 2 and isinstance(blocks[0], HWord) \
            and not isinstance(blocks[1], HWord):
        pw, table = blocks
    else:
        table = [as_hword(b) for b in blocks]
        pw = from_seq(range(len(table)))
    if pw.length != params.k[n]:
        raise WrongBlockCount(f"level {n} needs {params.k[n]} blocks, got {pw.length}")
    q = params.q[n]
    for x in pw.counts:
        if table[x].length != q:
            raise WrongBlockLength(f"block {x} has length {table[x].length}, need {q}")
    return pw, table


def _twist(n, blocks, params, tilde):
    pw, table = _normalize_blocks(n, blocks, params)
    q, C, l = params.q[n], params.C[n], params.l[n]
    jt = j_table(params.p[n], q)
    pt = [_psi(i, n, q, jt) for i in range(2 ** (n + 2) * q)]
    powered = {}

    def body(x):
        if x not in powered:
            powered[x] = power(table[x], l - 1)
        return powered[x]

    lead_sym, trail_sym = (E, B) if tilde else (B, E)
    runs: dict = {}

    def spacer(sym, count):
        key = (sym, count)
        if key not in runs:
            runs[key] = Run(sym, count)
        return runs[key]

    n_win = len(pt)
    small = C <= 64
    if small:
        letters = [flatten(slice_word(pw, i * C, (i + 1) * C)) for i in range(n_win)]
    else:
        windows = [slice_word(pw, i * C, (i + 1) * C) for i in range(n_win)]
    memos: dict = {}
    shared: dict = {}  # identical 1-subsections share one node
    two_subsections = []
    for m in range(q):
        ones = []
        for i in range(n_win):
            lead, trail = spacer_exponents(n, m, i, params, tilde, (jt, pt))
            if small:
                key = (letters[i], lead)
                node = shared.get(key)
                if node is None:
                    parts = []
                    for x in letters[i]:
                        if lead:
                            parts.append(spacer(lead_sym, lead))
                        parts.append(body(x))
                        if trail:
                            parts.append(spacer(trail_sym, trail))
                    node = shared[key] = Cat(parts)
                ones.append(node)
                continue
            key = (lead, trail)
            if key not in memos:
                img = lambda x, a=lead, z=trail: cat(run(lead_sym, a), body(x), run(trail_sym, z))
                memos[key] = (img, {})
            img, memo = memos[key]
            ones.append(map_letters(windows[i], img, memo))
        two_subsections.append(Cat(ones))
    return Cat(two_subsections)


def twist_op(n: int, blocks, params: TwistParams) -> HWord:
    """The twisting operator C_n applied to k_n blocks of length q_n.

    ``blocks`` is either a list of k_n words or a pair
    ``(preword, table)`` where the preword is a compressed word whose
    letters index into ``table``; the latter form handles huge k_n.
    """
    return _twist(n, blocks, params, tilde=False)


def tilde_twist_op(n: int, blocks, params: TwistParams) -> HWord:
    """The operator with the roles of b and e interchanged."""
    return _twist(n, blocks, params, tilde=True)


def check_rev_identity(n: int, blocks, params: TwistParams, cap: int = DEFAULT_CAP) -> bool:
    """rev(C_n(w_0..w_last)) == tilde C_n(rev w_last, ..., rev w_0)."""
    blocks = [as_hword(b) for b in blocks]
    lhs = rev(twist_op(n, blocks, params))
    rhs = tilde_twist_op(n, [rev(b) for b in reversed(blocks)], params)
    return words_equal(lhs, rhs, cap)


def block_ratio(m: int, n: int, params: TwistParams) -> int:
    """k_m k_(m+1) ... k_(n-1): blocks of level m inside one of level n."""
    r = 1
    for t in range(m, n):
        r *= params.k[t]
    return r


def composed_twist(m: int, n: int, blocks, params: TwistParams, tilde: bool = False) -> HWord:
    """C_(m,n): nest C_m, ..., C_(n-1) over consecutive groups of blocks."""
    if n <= m:
        raise BadBlockCount("composed operator needs n > m")
    blocks = [as_hword(b) for b in blocks]
    need = block_ratio(m, n, params)
    if len(blocks) != need:
        raise BadBlockCount(f"C_({m},{n}) needs {need} blocks, got {len(blocks)}")
    op = tilde_twist_op if tilde else twist_op
    if n == m + 1:
        return op(m, blocks, params)
    size = need // params.k[n - 1]
    inner = [composed_twist(m, n - 1, blocks[g * size:(g + 1) * size], params, tilde)
             for g in range(params.k[n - 1])]
    return op(n - 1, inner, params)


def check_composed_rev_identity(m: int, n: int, blocks, params: TwistParams,
                                cap: int = DEFAULT_CAP) -> bool:
    blocks = [as_hword(b) for b in blocks]
    lhs = rev(composed_twist(m, n, blocks, params))
    rhs = composed_twist(m, n, [rev(b) for b in reversed(blocks)], params, tilde=True)
    return words_equal(lhs, rhs, cap)


# -- subscales -------------------------------------------------------------------

@dataclass(frozen=True)
class OneSubsection:
    start: int
    lead: int      # leading spacer run
    trail: int     # trailing spacer run
    block: int     # index i*C_n + c of the repeated block


@dataclass
class SubsectionTree:
    n: int
    q: int
    l: int
    two: list      # q_n lists of OneSubsection
    tilde: bool = False

    @property
    def length(self) -> int:
        return sum(len(t) for t in self.two) * self.l * self.q

    @property
    def boundary_size(self) -> int:
        return sum(o.lead + o.trail for t in self.two for o in t)

    @property
    def interior_size(self) -> int:
        return self.length - self.boundary_size

    def boundary_positions(self) -> list:
        """Half-open intervals covering the spacer portion."""
        out = []
        for t in self.two:
            for o in t:
                if o.lead:
                    out.append((o.start, o.start + o.lead))
                end = o.start + self.l * self.q
                if o.trail:
                    out.append((end - o.trail, end))
        return out


def parse_subscales(w: HWord, n: int, params: TwistParams, tilde: bool = False) -> SubsectionTree:
    """Split a level n+1 word into its 2-, 1- and 0-subsections.

    Raises NotTwistShaped when the word does not have the spacer pattern
    forced by the parameters or a 0-subsection is not a power.
    """
    q, C, l = params.q[n], params.C[n], params.l[n]
    if w.length != params.q[n + 1]:
        raise NotTwistShaped(f"length {w.length} != q_{n + 1} = {params.q[n + 1]}")
    jt = j_table(params.p[n], q)
    pt = [_psi(i, n, q, jt) for i in range(2 ** (n + 2) * q)]
    lead_sym, trail_sym = (E, B) if tilde else (B, E)
    one_len = l * q
    two, pos = [], 0
    for m in range(q):
        ones = []
        for i in range(len(pt)):
            lead, trail = spacer_exponents(n, m, i, params, tilde, (jt, pt))
            for c in range(C):
                head = slice_word(w, pos, pos + lead)
                tail = slice_word(w, pos + one_len - trail, pos + one_len)
                if head.counts.get(lead_sym, 0) != lead or tail.counts.get(trail_sym, 0) != trail:
                    raise NotTwistShaped(f"spacer runs wrong in 1-subsection m={m} i={i} c={c}")
                inner = slice_word(w, pos + lead, pos + one_len - trail)
                base = slice_word(inner, 0, q)
                if not words_equal(inner, power(base, l - 1)):
                    raise NotTwistShaped(f"0-subsection m={m} i={i} c={c} is not a power")
                ones.append(OneSubsection(pos, lead, trail, i * C + c))
                pos += one_len
        two.append(ones)
    return SubsectionTree(n, q, l, two, tilde)


def boundary_positions(w: HWord, n: int, params: TwistParams) -> list:
    return parse_subscales(w, n, params).boundary_positions()
