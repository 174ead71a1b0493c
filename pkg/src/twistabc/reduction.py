"""Level-by-level construction over a tree prefix, the clause checks on each level,
factor words, the reversing maps eta_g, and the f-bar bound cascade.

Odometer words
--------------
A level is a list of words, each a row of k_(n-1) indices into the level
below (level 0 is the alphabet).  Every word carries a label
(d_1, ..., d_(s+1)) in mixed radix, most significant digit first; its
Q_r class is the integer formed by the first r digits.  Word index and
label are the same number.

A level n+1 word with label d places at position i the level n word whose
class digits are ``d_r XOR phi_r(i)`` (r <= s(n)) and whose last digit is
read from a per-position table chosen by a "code" digit of d.  The
sequences phi_r are palindromes, which is what makes the label action
``XOR by a generator mask`` agree with the skew diagonal action.  When the
stage opens a new level (Case 2), positions split into the index windows
of (Q4) and the rest; the window code is the new class digit and the
boundary code is the new finest digit.

All choices are drawn from a generator seeded by (seed, stage, part, ...),
so a level depends only on T ∩ {sigma_m : m <= n}.

Twisted words
-------------
kappa_(n+1) applies the twisting operator to the kappa_n images of the
blocks.  Twisted words are materialized on demand; large levels are
serialized through their prewords, which determine them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import gmpy2
import numpy as np

from .errors import (ActionUndefined, EvenParity, LedgerViolation, LevelTooLow,
                     NonPositiveBound, PropagationMismatch, SpecViolation, TooLarge)
from .trees import M_of, TreePrefix, build_group, s_of
from .twist import TwistParams, derive_params, spacer_exponents, j_table, _psi, tilde_twist_op, twist_op
from .words import (HWord, Run, WordCollection, dump_collection, flatten, from_seq, letter, rev,
                    slice_word)

MODES = ("strict", "miniature")


# -- configuration --------------------------------------------------------------------

@dataclass(frozen=True)
class MiniatureConfig:
    """Desk-scale parameters; every stage uses the same p, e, l and J."""
    sigma: int = 4          # alphabet size, a power of 2
    p: int = 3
    e: int = 1
    l: int = 2
    J: int = 1
    R: int = 2              # only reported in the ledger
    seed: int = 0
    max_cells: int = 1 << 24  # bound on (#words) * k for a built level

    def __post_init__(self):
        if self.sigma < 2 or self.sigma & (self.sigma - 1):
            raise ValueError("alphabet size must be a power of 2")
        if self.e < 1 or self.l < 2 or self.J < 1 or self.p < 3:
            raise ValueError("need e >= 1, l >= 2, J >= 1, p >= 3")

    @property
    def digit(self) -> int:
        return 1 << (4 * self.e)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("sigma", "p", "e", "l", "J", "R", "seed", "max_cells")}


# -- levels ---------------------------------------------------------------------------

@dataclass
class ConstructionLevel:
    n: int
    s: int                       # s(n)
    radix: tuple                 # label digit ranges, coarse to fine
    blocks: np.ndarray | None    # (count, k_(n-1)) indices into level n-1
    h: int
    f_prev: int | None = None    # f_(n-1)
    J: dict = field(default_factory=dict)      # s -> J_(s,n) for levels opened here
    groups: dict = field(default_factory=dict)  # s -> InvolutionGroup G_s^n
    masks: dict = field(default_factory=dict)   # generator node -> digit mask
    p: int | None = None         # prime used by (Q4) and (E2) at this level

    @property
    def count(self) -> int:
        return math.prod(self.radix)

    @property
    def k_prev(self) -> int | None:
        return None if self.blocks is None else self.blocks.shape[1]

    def n_classes(self, s: int) -> int:
        if not 0 <= s <= self.s:
            raise ActionUndefined(f"no Q_{s} at level {self.n}")
        return math.prod(self.radix[:s])

    def classes(self, s: int) -> np.ndarray:
        """Declared Q_s class of every word."""
        if not 0 <= s <= self.s:
            raise ActionUndefined(f"no Q_{s} at level {self.n}")
        return np.arange(self.count) // math.prod(self.radix[s:])

    def generator_perm(self, s: int, node) -> np.ndarray:
        """Permutation of Q_s classes induced by one generator of length s."""
        if len(node) != s or node not in self.masks:
            raise ActionUndefined(f"{node} is not a generator of G_{s}^{self.n}")
        x = 0
        for r in range(1, s + 1):
            x = x * self.radix[r - 1] + self.masks[node[:r]]
        return np.arange(self.n_classes(s)) ^ x

    def perm(self, s: int, g) -> np.ndarray:
        out = np.arange(self.n_classes(s))
        for v in g:
            out = self.generator_perm(s, v)[out]
        return out

    def action_table(self, s: int) -> dict:
        grp = self.groups.get(s)
        if grp is None:
            return {}
        return {_elem_name(g): self.perm(s, g).tolist() for g in grp.elements()}

    def class_table(self, s: int) -> dict:
        cls = self.classes(s)
        out: dict = {}
        for w, c in enumerate(cls.tolist()):
            out.setdefault(c, []).append(w)
        return out


def _elem_name(g) -> str:
    return "+".join(" ".join(map(str, v)) for v in sorted(g)) or "id"


def _masks(prefix: TreePrefix, n: int, digit: int) -> dict:
    """Bit mask per generator node: one bit per node of the same length,
    in enumeration order."""
    seen: dict = {}
    out = {}
    for v in prefix.nodes_upto(n):
        if not v:
            continue
        b = seen.get(len(v), 0)
        seen[len(v)] = b + 1
        if 1 << b >= digit:
            raise LedgerViolation(
                f"G_{len(v)}^{n} has more than {digit.bit_length() - 1} generators; raise e")
        out[v] = 1 << b
    return out


def init_level0(cfg: MiniatureConfig | None = None) -> ConstructionLevel:
    cfg = cfg or MiniatureConfig()
    return ConstructionLevel(n=0, s=0, radix=(cfg.sigma,), blocks=None, h=1)


def _rng(cfg: MiniatureConfig, *key) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, *key])


def window_mask(k: int, p: int, J: int) -> np.ndarray:
    """Positions i with k/(2pJ) <= i mod (k/J) < k/J - k/(2pJ)."""
    if k % (2 * J * p * p):
        raise SpecViolation("Q4", f"2 J p^2 = {2 * J * p * p} does not divide k = {k}")
    period, edge = k // J, k // (2 * p * J)
    r = np.arange(k) % period
    return (r >= edge) & (r < period - edge)


def _choose_k(lvl: ConstructionLevel, q: int, case2: bool, cfg: MiniatureConfig) -> int:
    n, count, p = lvl.n, lvl.count, cfg.p
    D = 2 ** (n + 2) * q
    # each part splits into prefix classes (assigned in mirror pairs), and
    # each of those is tiled by the finest digit
    P = math.prod(lvl.radix[:lvl.s])
    unit = math.lcm(P * lvl.radix[-1], 2 * P if lvl.s else 1)
    for x in range(64):
        f = p * p << x
        k = f * count
        if k % D:
            continue
        if case2:
            if k % (2 * cfg.J * p * p):
                continue
            sizes = (k - k // p, k // p)
        else:
            sizes = (k,)
        if all(sz % unit == 0 for sz in sizes):
            return k
    raise LedgerViolation(f"no admissible k at stage {n}")


def build_next_level(lvl: ConstructionLevel, prefix: TreePrefix, cfg: MiniatureConfig,
                     q: int, mode: str = "miniature") -> ConstructionLevel:
    """Level n+1 from level n.  ``q`` is q_n, the twisted word length."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "strict":
        raise TooLarge("strict parameters make k_n astronomically large; "
                       "use the ledger and bound cascade instead")
    n, S = lvl.n, lvl.s
    S1 = s_of(prefix, n + 1)
    case2 = S1 == S + 1
    E = cfg.digit
    if S and any(r != E for r in lvl.radix):
        raise LedgerViolation("class digits must match 2^(4e)")
    F = lvl.radix[-1]
    k = _choose_k(lvl, q, case2, cfg)
    new_count = E ** (S1 + 1)
    if new_count * k > cfg.max_cells:
        raise TooLarge(f"level {n + 1}: {new_count} words of {k} blocks")
    stage = n + 1

    if case2:
        win = window_mask(k, cfg.p, cfg.J)
        parts = [np.flatnonzero(win), np.flatnonzero(~win)]
    else:
        parts = [np.arange(k)]

    # old class digits: a palindrome, balanced over prefixes inside each part
    P = math.prod(lvl.radix[:S])
    phi = np.zeros(k, dtype=np.int64)
    if S:
        for pid, pos in enumerate(parts):
            firsts = pos[pos < k - 1 - pos]
            vals = _rng(cfg, stage, pid, 0).permutation(np.tile(np.arange(P), len(firsts) // P))
            phi[firsts] = vals
            phi[k - 1 - firsts] = vals

    # finest digit tables, one per (part, code)
    tables = []
    for pid, pos in enumerate(parts):
        per_code, seen = [], set()
        groups = [pos[phi[pos] == c] for c in range(P)]
        for code in range(E):
            attempt = 0
            while True:
                t = np.zeros(k, dtype=np.int64)
                for c, grp in enumerate(groups):
                    base = np.tile(np.arange(F), len(grp) // F)
                    t[grp] = _rng(cfg, stage, pid, 1, c, code, attempt).permutation(base)
                key = t[pos].tobytes()
                if key not in seen:
                    break
                attempt += 1
            seen.add(key)
            per_code.append(t)
        tables.append(np.stack(per_code))

    idx = np.arange(new_count)
    old = idx // E ** (S1 + 1 - S)           # first S digits
    rows = (old[:, None] ^ phi[None, :]) * F
    if case2:
        rows = rows + tables[0][(idx // E) % E] + tables[1][idx % E]
    else:
        rows = rows + tables[0][idx % E]
    rows = rows.astype(np.int32)

    masks = _masks(prefix, stage, E)
    groups = {s: build_group(prefix, s, stage) for s in range(1, S1 + 1)}
    out = ConstructionLevel(
        n=stage, s=S1, radix=(E,) * (S1 + 1), blocks=rows, h=lvl.h * k,
        f_prev=k // lvl.count, groups=groups, masks=masks, p=cfg.p,
        J={S1: cfg.J} if case2 else {},
    )
    return out


# -- verification ---------------------------------------------------------------------

def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    na = len(np.unique(a))
    return na == len(np.unique(b)) == len(np.unique(a.astype(np.int64) * (int(b.max()) + 1) + b))


def _row_classes(rows: np.ndarray) -> np.ndarray:
    return np.unique(np.ascontiguousarray(rows), axis=0, return_inverse=True)[1].ravel()


def _is_p2_times_pow2(f: int, p: int) -> bool:
    if f % (p * p):
        return False
    r = f // (p * p)
    return r & (r - 1) == 0


def shifted_prefix_hits(rows: np.ndarray, L: int) -> list:
    """All (word, shift, other) with rows[word, i:i+L] == rows[other, :L] and
    1 <= i <= k - L.  Polynomial hashes locate candidates; each is confirmed
    by direct comparison."""
    N, k = rows.shape
    if L <= 0 or L > k:
        return []
    r = rows.astype(np.uint64) + np.uint64(1)
    base = np.uint64(0x100000001B3)
    top = np.uint64(pow(int(base), L - 1, 1 << 64))
    hits = []
    with np.errstate(over="ignore"):
        h = np.zeros(N, dtype=np.uint64)
        for j in range(L):
            h = h * base + r[:, j]
        order = np.argsort(h, kind="stable")
        keys = h[order]
        for i in range(1, k - L + 1):
            h = (h - r[:, i - 1] * top) * base + r[:, i + L - 1]
            pos = np.searchsorted(keys, h)
            cand = np.flatnonzero((pos < N) & (keys[np.minimum(pos, N - 1)] == h))
            for w in cand:
                j = pos[w]
                while j < N and keys[j] == h[w]:
                    o = order[j]
                    if np.array_equal(rows[w, i:i + L], rows[o, :L]):
                        hits.append((int(w), i, int(o)))
                    j += 1
    return hits


def verify_specs(levels: list, prefix: TreePrefix, n: int, raise_on_fail: bool = False) -> dict:
    """Check (E1)-(E3), (Q4)-(Q6) and (A7)-(A8) on level n.

    ``levels`` holds levels 0..n.  Returns a report with one verdict per
    clause; with ``raise_on_fail`` the first failing clause raises
    SpecViolation naming it.
    """
    lvl = levels[n]
    out: dict = {}

    def put(clause, ok, detail=""):
        out.setdefault(clause, {"ok": True, "details": []})
        if not ok:
            out[clause]["ok"] = False
            out[clause]["details"].append(detail)
            if raise_on_fail:
                raise SpecViolation(clause, detail)

    count = lvl.count
    put("E1", count & (count - 1) == 0, f"|W_{n}| = {count} not a power of 2")
    if n == 0:
        put("E1", lvl.h == 1, "letters have length 1")
    else:
        prev = levels[n - 1]
        rows = lvl.blocks
        put("E1", rows.shape == (count, rows.shape[1]) and lvl.h == prev.h * rows.shape[1],
            "lengths disagree with h_(n-1) * k_(n-1)")
        # (E2)
        k = rows.shape[1]
        flat = (rows.astype(np.int64) + np.arange(count)[:, None] * prev.count).ravel()
        occ = np.bincount(flat, minlength=count * prev.count).reshape(count, prev.count)
        f = k // prev.count
        put("E2", k == f * prev.count and bool((occ == f).all()),
            f"occurrence counts range {occ.min()}..{occ.max()}, want {f}")
        put("E2", _is_p2_times_pow2(f, lvl.p), f"f = {f} is not p^2 times a power of 2")
        # (E3)
        hits = shifted_prefix_hits(rows, k // 2)
        put("E3", not hits, f"{len(hits)} shifted prefix occurrences, first {hits[:1]}")
    # (Q4) / (Q5) / (Q6)
    for s in range(1, lvl.s + 1):
        m = M_of(prefix, s)
        declared = lvl.classes(s)
        if m == n:
            J = lvl.J.get(s)
            k = lvl.k_prev
            if J is None:
                put("Q4", False, f"no J recorded for Q_{s}")
                continue
            if k % (2 * J * lvl.p ** 2):
                put("Q4", False, f"2 J p^2 does not divide k = {k}")
                continue
            win = window_mask(k, lvl.p, J)
            put("Q4", _same_partition(_row_classes(lvl.blocks[:, win]), declared),
                f"Q_{s}: window agreement differs from declared classes")
        else:
            seq = levels[n - 1].classes(s)[lvl.blocks]
            put("Q5", _same_partition(_row_classes(seq), declared),
                f"Q_{s}: product relation differs from declared classes")
    for s in range(0, lvl.s):
        fine, coarse = lvl.classes(s + 1), lvl.classes(s)
        ok = len(np.unique(coarse.astype(np.int64) * lvl.count + fine)) == len(np.unique(fine))
        put("Q6", ok, f"Q_{s + 1} does not refine Q_{s}")
        per = np.unique(fine)
        kids = np.bincount(coarse[np.unique(fine, return_index=True)[1]])
        want = lvl.radix[s]
        put("Q6", bool((kids == want).all()) and want == 1 << (4 * _e_of(lvl)),
            f"Q_{s} classes hold {sorted(set(kids.tolist()))} Q_{s + 1} classes, want {want}")
        del per
    # (A7)
    for s, grp in lvl.groups.items():
        gens = [lvl.generator_perm(s, v) for v in grp.generators]
        Q = lvl.n_classes(s)
        ident = np.arange(Q)
        for a, pa in enumerate(gens):
            put("A7", np.array_equal(pa[pa], ident), f"generator {grp.generators[a]} not an involution")
            for pb in gens[a + 1:]:
                put("A7", np.array_equal(pa[pb], pb[pa]), "generators do not commute")
        for g in grp.elements():
            if g:
                pg = lvl.perm(s, g)
                put("A7", not (pg == ident).any(), f"{_elem_name(g)} has a fixed class on Q_{s}")
        if s > 1:
            up = lvl.classes(s - 1)[np.unique(lvl.classes(s), return_index=True)[1]]
            for v in grp.generators:
                lhs = up[lvl.generator_perm(s, v)]
                rhs = lvl.generator_perm(s - 1, v[:s - 1])[up]
                put("A7", np.array_equal(lhs, rhs), f"{v} not subordinate to {v[:s - 1]}")
    # (A8)
    if n >= 1:
        prev = levels[n - 1]
        for s, grp in lvl.groups.items():
            m = M_of(prefix, s)
            if m is None or n <= m:
                continue
            cls = lvl.classes(s)
            reps = np.unique(cls, return_index=True)[1]
            seqs = prev.classes(s)[lvl.blocks[reps]]
            for v in prefix.nodes_upto(n - 1):
                if len(v) != s:
                    continue
                moved = prev.generator_perm(s, v)[seqs[:, ::-1]]
                target = seqs[lvl.generator_perm(s, v)]
                put("A8", np.array_equal(moved, target),
                    f"{v}: skew diagonal action disagrees on Q_{s}^{n}")
    for c in ("E1", "E2", "E3", "Q4", "Q5", "Q6", "A7", "A8"):
        out.setdefault(c, {"ok": True, "details": []})
    out["ok"] = all(v["ok"] for v in out.values() if isinstance(v, dict))
    return out


def _e_of(lvl: ConstructionLevel) -> int:
    return (lvl.radix[0].bit_length() - 1) // 4


def e3_flat(words: list) -> list:
    """(E3) on flat symbol sequences by direct comparison of every
    (word, other, length, shift)."""
    if not words:
        return []
    k = len(words[0])
    prefixes = {}
    hits = []
    for L in range(k // 2, k):
        prefixes = {}
        for o, w in enumerate(words):
            prefixes.setdefault(tuple(w[:L]), []).append(o)
        for wi, w in enumerate(words):
            for i in range(1, k - L + 1):
                for o in prefixes.get(tuple(w[i:i + L]), ()):
                    hits.append((wi, i, L, o))
    return hits


# -- the whole build ---------------------------------------------------------------------

class Build:
    """Levels 0..n over a tree prefix, with twisted words on demand."""

    def __init__(self, prefix: TreePrefix, levels: int, cfg: MiniatureConfig | None = None,
                 mode: str = "miniature"):
        if levels > prefix.n_max:
            from .errors import LevelBeyondPrefix
            raise LevelBeyondPrefix(f"need sigma_0..sigma_{levels}, window ends at {prefix.n_max}")
        self.cfg = cfg or MiniatureConfig()
        self.prefix = prefix
        self.mode = mode
        self.levels = [init_level0(self.cfg)]
        self.C: list = []
        q = 1
        for n in range(levels):
            nxt = build_next_level(self.levels[-1], prefix, self.cfg, q, mode)
            k = nxt.k_prev
            D = 2 ** (n + 2) * q
            self.C.append(k // D)
            q = k * self.cfg.l * q * q
            self.levels.append(nxt)
        self._cache: dict = {}

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    @cached_property
    def params(self) -> TwistParams | None:
        if not self.C:
            return None
        return derive_params(self.C, [self.cfg.l] * len(self.C))

    def q(self, n: int) -> int:
        return 1 if n == 0 else self.params.q[n]

    # twisted words
    def twisted(self, n: int, i: int) -> HWord:
        key = (n, i)
        if key in self._cache:
            return self._cache[key]
        if n == 0:
            w = letter(i + 1)
        else:
            table = self.twisted_table(n - 1)
            pw = from_seq(self.levels[n].blocks[i].tolist())
            w = twist_op(n - 1, (pw, table), self.params)
        if n <= 1:
            self._cache[key] = w
        return w

    def twisted_table(self, n: int) -> list:
        lvl = self.levels[n]
        if lvl.count * self.q(n) > self.cfg.max_cells:
            raise TooLarge(f"level {n} twisted words are too large to tabulate")
        return [self.twisted(n, i) for i in range(lvl.count)]

    def twisted_collection(self, n: int) -> WordCollection:
        return WordCollection(n, self.twisted_table(n))

    def verify(self, n: int | None = None) -> dict:
        todo = range(self.top + 1) if n is None else [n]
        return {m: verify_specs(self.levels, self.prefix, m) for m in todo}


# -- serialization ------------------------------------------------------------------------

def serialize_odometer(lvl: ConstructionLevel) -> str:
    head = f"level={lvl.n} count={lvl.count} len={lvl.h} s={lvl.s} radix={','.join(map(str, lvl.radix))}"
    if lvl.blocks is None:
        return head + "\n" + "\n".join(str(i + 1) for i in range(lvl.count)) + "\n"
    lines = [head] + [" ".join(map(str, r)) for r in lvl.blocks.tolist()]
    return "\n".join(lines) + "\n"


def serialize_twisted(build: Build, n: int) -> str:
    """S-expressions when the level is small; otherwise one preword per line
    (block indices into level n-1), which determines each word."""
    lvl = build.levels[n]
    if lvl.count * build.q(n) <= build.cfg.max_cells:
        return dump_collection(build.twisted_collection(n))
    head = f"level={n} count={lvl.count} len={build.q(n)} form=preword"
    return "\n".join([head] + [" ".join(map(str, r)) for r in lvl.blocks.tolist()]) + "\n"


def serialize_build(build: Build) -> dict:
    """File name -> contents for every level, class table and action table."""
    files = {}
    for lvl in build.levels:
        n = lvl.n
        files[f"level{n}.odometer.txt"] = serialize_odometer(lvl)
        files[f"level{n}.twisted.txt"] = serialize_twisted(build, n)
        files[f"level{n}.classes.json"] = json.dumps(
            {str(s): {str(c): ws for c, ws in lvl.class_table(s).items()}
             for s in range(1, lvl.s + 1)}, sort_keys=True)
        files[f"level{n}.actions.json"] = json.dumps(
            {str(s): lvl.action_table(s) for s in range(1, lvl.s + 1)}, sort_keys=True)
    return files


def load_level_blocks(text: str) -> tuple:
    """Parse :func:`serialize_odometer` output into (header, rows)."""
    lines = text.splitlines()
    head = dict(kv.split("=") for kv in lines[0].split())
    if int(head["level"]) == 0:
        return head, None
    rows = np.array([[int(x) for x in ln.split()] for ln in lines[1:] if ln.strip()], dtype=np.int32)
    return head, rows


# -- propagation ---------------------------------------------------------------------------

def _read_blocks(build: Build, n: int, w: HWord, subsections: Iterable[int] | None = None) -> list:
    """Recover the twisted level n-1 words inside a twisted level n word by
    reading the base of every 0-subsection at its computed position.

    Every 2-subsection holds all k_(n-1) blocks; ``subsections`` picks which
    ones to read (default: the first and the last).
    """
    params = build.params
    m = n - 1
    q, C, l = params.q[m], params.C[m], params.l[m]
    lookup = {tuple(flatten(x)): i for i, x in enumerate(build.twisted_table(m))}
    jt = j_table(params.p[m], q)
    pt = [_psi(i, m, q, jt) for i in range(2 ** (m + 2) * q)]
    span = params.k[m] * l * q
    if subsections is None:
        subsections = sorted({0, q - 1})
    blocks = [None] * params.k[m]
    for mm in subsections:
        flat = flatten(slice_word(w, mm * span, (mm + 1) * span))
        pos = 0
        for i in range(len(pt)):
            lead, _ = spacer_exponents(m, mm, i, params, False, (jt, pt))
            for c in range(C):
                base = tuple(flat[pos + lead:pos + lead + q])
                if base not in lookup:
                    raise PropagationMismatch(
                        f"0-subsection at {mm * span + pos + lead} is not a level {m} word")
                got = lookup[base]
                if blocks[i * C + c] is None:
                    blocks[i * C + c] = got
                elif blocks[i * C + c] != got:
                    raise PropagationMismatch(f"block {i * C + c} read inconsistently")
                pos += l * q
    return blocks


def propagate(build: Build, n: int, sample: Iterable[int] | None = None) -> dict:
    """Compare the relations carried over by kappa_n with the intrinsic
    componentwise definition, and check closure of the twisted skew diagonal
    action on class sequences.

    The intrinsic route reads blocks back out of twisted words, so at large
    levels it runs on ``sample`` (word indices); the default is every word
    when the level is tabulable and the first and last word otherwise.
    """
    lvl = build.levels[n]
    if n == 0:
        return {"ok": True, "checked": 0, "closure": True}
    prev = build.levels[n - 1]
    small = lvl.count * build.q(n) <= build.cfg.max_cells
    if sample is None:
        sample = range(lvl.count) if small else [0, lvl.count - 1]
    sample = list(sample)
    read = {w: _read_blocks(build, n, build.twisted(n, w)) for w in sample}
    for w, blocks in read.items():
        if blocks != lvl.blocks[w].tolist():
            raise PropagationMismatch(f"word {w}: prewords disagree with kappa")
    report = {"checked": len(sample), "relations": {}, "closure": True}
    for s in range(1, lvl.s + 1):
        m = M_of(build.prefix, s)
        declared = lvl.classes(s)
        if m == n:
            report["relations"][s] = "defined through kappa"
            continue
        pc = prev.classes(s)
        intrinsic = {}
        for w in sample:
            intrinsic.setdefault(tuple(pc[read[w]].tolist()), set()).add(int(declared[w]))
        if any(len(v) != 1 for v in intrinsic.values()) or \
                len({next(iter(v)) for v in intrinsic.values()}) != len(intrinsic):
            raise PropagationMismatch(f"Q_{s}^{n}: intrinsic and propagated classes differ")
        report["relations"][s] = "agree"
        # twisted skew diagonal action on class sequences, generators of G_s^(n-1)
        reps = np.unique(declared, return_index=True)[1]
        seqs = {tuple(r) for r in pc[lvl.blocks[reps]].tolist()}
        for v in build.prefix.nodes_upto(n - 1):
            if len(v) != s:
                continue
            perm = prev.generator_perm(s, v)
            for sq in list(seqs)[:64]:
                if tuple(perm[list(reversed(sq))].tolist()) not in seqs:
                    report["closure"] = False
    if not report["closure"]:
        raise PropagationMismatch("twisted skew diagonal action leaves the class words")
    report["ok"] = True
    return report


# -- factor words and eta_g -----------------------------------------------------------------

def class_sequences(build: Build, s: int, n: int) -> tuple:
    """(m, sequences): the Q_s^m class of each level m block of every Q_s^n
    class representative, with m = M(s).  Row c belongs to class c."""
    m = M_of(build.prefix, s)
    if m is None:
        raise ActionUndefined(f"no level {s} classes at stage {n}")
    if n < m:
        raise LevelTooLow(f"n = {n} < M({s}) = {m}")
    if s > build.levels[n].s:
        raise ActionUndefined(f"no level {s} classes at stage {n}")
    lvl = build.levels[n]
    cls = lvl.classes(s)
    reps = np.unique(cls, return_index=True)[1]
    if n == m:
        return m, np.arange(len(reps))[:, None]
    if n != m + 1:
        raise TooLarge("class words beyond M(s)+1 are not materialized")
    return m, build.levels[m].classes(s)[lvl.blocks[reps]]


def _class_table(build: Build, s: int, m: int) -> list:
    q = build.q(m)
    return [Run(c + 1, q) for c in range(build.levels[m].n_classes(s))]


def class_word(build: Build, s: int, n: int, seq, tilde: bool = False) -> HWord:
    """C_(m,n) of class-letter runs (letters 1..Q_s^m) for m = M(s)."""
    m = M_of(build.prefix, s)
    seq = [int(x) for x in seq]
    if n == m:
        return Run(seq[0] + 1, build.q(m))
    op = tilde_twist_op if tilde else twist_op
    return op(m, (from_seq(seq), _class_table(build, s, m)), build.params)


def factor_project(build: Build, s: int, n: int, w: int) -> HWord:
    """(W_n)_s* word of word index w: blocks of level M(s) replaced by class
    runs, later spacers kept."""
    m, seqs = class_sequences(build, s, n)
    c = int(build.levels[n].classes(s)[w])
    return class_word(build, s, n, seqs[c])


def nu_s(build_or_ledger, s: int, n: int) -> Fraction:
    """nu_s(<[w]_s, k>) with the tail sum over the l_i that are known."""
    if isinstance(build_or_ledger, Build):
        b = build_or_ledger
        q, Q = b.q(n), b.levels[n].n_classes(s)
        ls = [b.cfg.l] * len(b.C)
    else:
        q, Q = build_or_ledger.rows[n].q, build_or_ledger.rows[n].Q(s)
        ls = [r.l for r in build_or_ledger.rows if r.l is not None]
    tail = sum((Fraction(1, x) for x in ls[n:]), Fraction(0))
    return Fraction(1, q * Q) * (1 - tail)


def nu_bad_bound(p_n: int, ls: list, n: int) -> Fraction:
    """1/p_n + sum_(m >= n) 1/l_(m-1) over the given l's."""
    return Fraction(1, p_n) + sum((Fraction(1, ls[m - 1]) for m in range(max(n, 1), len(ls) + 1)),
                                  Fraction(0))


def odd_elements(prefix: TreePrefix, s: int, n: int) -> list:
    grp = build_group(prefix, s, n)
    return [g for g in grp.elements() if len(g) % 2]


def eta_g(build: Build, s: int, g, n: int | None = None) -> dict:
    """The map C_(m,n)(c_0..) -> tilde C_(m,n)(g c_0, ..) on (W_n)_s*.

    Returns the table {class: image class sequence} plus fingerprints of
    every image and every word of rev((W_n)_s*), and
    the verdicts ``in_rev`` (every image is a reversed class word) and
    ``bijection``.
    """
    g = frozenset(tuple(v) for v in g)
    m = M_of(build.prefix, s)
    if m is None:
        raise EvenParity(f"no node of length {s}: G_{s} is trivial, nothing has odd parity")
    n = build.top if n is None else n
    if len(g) % 2 == 0:
        raise EvenParity(f"{_elem_name(g)} has even parity")
    stage = max(build.prefix.index[v] for v in g) if all(v in build.prefix for v in g) else None
    if stage is None or any(len(v) != s for v in g):
        raise ActionUndefined(f"{_elem_name(g)} is not in G_{s}")
    m = max(m, stage)
    if n <= m:
        raise LevelTooLow(f"need n > m = {m}")
    if n != m + 1:
        raise TooLarge("eta is materialized only one level above its base")
    base = build.levels[m]
    perm = base.perm(s, g)
    lvl = build.levels[n]
    cls = lvl.classes(s)
    reps = np.unique(cls, return_index=True)[1]
    seqs = base.classes(s)[lvl.blocks[reps]]
    img_fp, rev_fp, table = {}, {}, {}
    for c, sq in enumerate(seqs):
        word = class_word(build, s, n, sq)
        rev_fp[c] = rev(word).fingerprint()
        img = perm[sq]
        table[c] = img
        img_fp[c] = class_word(build, s, n, img, tilde=True).fingerprint()
    rev_set = set(rev_fp.values())
    in_rev = all(fp in rev_set for fp in img_fp.values())
    bij = len(set(img_fp.values())) == len(img_fp) and set(img_fp.values()) == rev_set
    # which reversed class word each image equals
    where = {fp: c for c, fp in rev_fp.items()}
    target = {c: where.get(fp) for c, fp in img_fp.items()}
    # the reverse-side map tilde C(y) -> C(g y) undoes eta at sequence level
    back = all(np.array_equal(perm[table[c]], seqs[c]) for c in table)
    return {"s": s, "m": m, "n": n, "g": _elem_name(g), "table": table, "target": target,
            "image_fp": img_fp, "rev_fp": rev_fp,
            "in_rev": in_rev, "bijection": bij, "involution": back, "perm": perm}


def eta_coherence(build: Build, s: int, g_big, eta_small: dict) -> dict:
    """pi_(s+1,s) o eta_(g') == eta_g o pi_(s+1,s) for rho(g') = g, at the
    level n = M(s+1) where (W_n)_(s+1)* words are constant runs.

    eta_(g') sends the run of class c to the run of g'c; on the reversed
    side pi_(s+1,s) sends it to rev of the class-s word of g'c.  The other
    way round sends c to eta_g of the class-s word of c.
    """
    n = eta_small["n"]
    lvl = build.levels[n]
    t = s + 1
    if M_of(build.prefix, t) != n:
        raise ActionUndefined(f"coherence check needs M({t}) = {n}")
    g_big = frozenset(tuple(v) for v in g_big)
    if len(g_big) % 2 == 0:
        raise EvenParity(f"{_elem_name(g_big)} has even parity")
    big = lvl.perm(t, g_big)
    down = lvl.classes(s)[np.unique(lvl.classes(t), return_index=True)[1]]
    bad = []
    for c in range(lvl.n_classes(t)):
        lhs = eta_small["rev_fp"][int(down[big[c]])]
        rhs = eta_small["image_fp"][int(down[c])]
        if lhs != rhs:
            bad.append(c)
    return {"checked": lvl.n_classes(t), "failures": bad, "ok": not bad}


# -- parameter ledger -----------------------------------------------------------------------

@dataclass
class LedgerRow:
    n: int
    p: int | None = None
    R: int | None = None
    e: int | None = None
    l: int | None = None
    C: int | None = None
    k: int | None = None
    q: int | None = None
    s_count: int | None = None
    h: int | None = None
    Rc: int | None = None
    J: dict = field(default_factory=dict)
    s_level: int | None = None
    classes: dict = field(default_factory=dict)

    def Q(self, s: int) -> int:
        return self.classes[s]

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("n", "p", "R", "e", "l", "C", "k", "q", "s_count",
                                           "h", "Rc", "s_level")}
        d = {k: (int_text(v) if isinstance(v, int) else v) for k, v in d.items()}
        d["J"] = {str(a): b for a, b in self.J.items()}
        return d


def int_text(v: int):
    """JSON form of an integer: itself when a double holds it exactly,
    decimal text up to 3000 bits, and beyond that a rounded summary with
    the bit length (the exact value is recomputable from the ledger inputs)."""
    if abs(v) < 1 << 53:
        return v
    if v.bit_length() <= 3000:
        return str(v)
    e = math.log10(abs(v))
    mant = 10 ** (e - math.floor(e))
    return f"{'-' if v < 0 else ''}~{mant:.6f}e+{math.floor(e)} ({v.bit_length()} bits)"


@dataclass
class ParamLedger:
    mode: str
    beta0: Fraction
    rows: list
    notes: list = field(default_factory=list)

    def row(self, n: int) -> LedgerRow:
        while len(self.rows) <= n:
            self.rows.append(LedgerRow(len(self.rows)))
        return self.rows[n]

    def as_dict(self) -> dict:
        return {"mode": self.mode, "beta0": str(self.beta0),
                "rows": [r.as_dict() for r in self.rows], "notes": list(self.notes)}


def _next_prime(x: int) -> int:
    return int(gmpy2.next_prime(x))


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _rc(rows, n: int) -> int:
    if n <= 1:
        return rows[n].R
    a = rows[n - 2]
    return math.isqrt(a.l * a.k * a.q * a.q)


def strict_ledger(prefix: TreePrefix, n_max: int, beta0=Fraction(1, 16), sigma_bits: int = 12) -> ParamLedger:
    """Smallest primes p, radii R, exponents e and lengths l meeting the
    growth inequalities stage by stage, with C_n = s_n^2 and
    R_0 = ceil(7/beta_0).

    The inequalities, by the names :func:`check_ledger` reports:

    * prime_above_4R:   p_(n+1) > 4 R_n
    * R_next_vs_prime:  R_(n+1) >= 40 p_(n+1) / beta_n
    * R_vs_beta:        R_n >= 7 / beta_n
    * e_growth:         2^e(n+1) > max(10 R_(n+1), max |G_s^(n+1)|), e(n+1) > e(n)
    * prime_two_ahead:  p_(n+2) > 4 R_(n+1)
    * R_two_ahead:      R_(n+2) > 1600 p_(n+2) p_(n+1) / beta_n
    * l_growth:         l_n >= max(4 R_(n+2)^2, 9 l_(n-1)^2)
    """
    beta0 = Fraction(beta0)
    if prefix.n_max < n_max + 1:
        from .errors import LevelBeyondPrefix
        raise LevelBeyondPrefix(f"need the prefix window through {n_max + 1}")
    led = ParamLedger("strict", beta0, [])
    r0 = led.row(0)
    r0.R = _ceil(7 / beta0)
    r0.e = sigma_bits // 4
    r0.q, r0.h, r0.s_level = 1, 1, 0
    r0.s_count = 1 << sigma_bits
    led.row(1).p = _next_prime(max(2, 4 * r0.R))
    led.row(1).R = max(40 * led.rows[1].p, _ceil(40 * led.rows[1].p / beta0))
    beta = {0: beta0}
    alpha: dict = {}
    l_prev = 0
    for n in range(n_max + 1):
        cur, nxt = led.row(n), led.row(n + 1)
        S, S1 = s_of(prefix, n), s_of(prefix, n + 1)
        cur.s_level, nxt.s_level = S, S1
        gmax = max((build_group(prefix, s, n + 1).order for s in range(1, S1 + 1)), default=1)
        need = max(10 * nxt.R, gmax)
        e = cur.e + 1
        while 1 << e <= need:
            e += 1
        nxt.e = e
        two = led.row(n + 2)
        two.p = _next_prime(4 * nxt.R)
        two.R = math.floor(Fraction(1600 * two.p * nxt.p) / beta[n]) + 1
        cur.l = max(4 * two.R ** 2, 9 * l_prev ** 2)
        l_prev = cur.l
        if n:
            cur.s_count = 1 << (4 * cur.e * (S + 1))
        cur.C = cur.s_count ** 2
        cur.k = 2 ** (n + 2) * cur.q * cur.C
        nxt.q = cur.k * cur.l * cur.q ** 2
        nxt.h = cur.k * cur.h
        cur.Rc = _rc(led.rows, n)
        if S1 == S + 1:
            nxt.J = {S1: 1 << (2 * nxt.R ** 2).bit_length()}
        beta[n + 1], new_alpha = cascade_step(
            S1 == S + 1, S, beta[n], {s: alpha[(s, n)] for s in range(1, S + 1)},
            cur.R, nxt.R, cur.Rc, cur.l, nxt.p)
        for s, v in new_alpha.items():
            alpha[(s, n + 1)] = v
    led.notes.append("C_n = s_n^2, the least multiple of s_n^2")
    led.notes.append("R_0 = ceil(7/beta_0) and R_0^c = R_0 start the step from level 0")
    led.notes.append("2/sqrt(l_n) is bounded above by 2/isqrt(l_n)")
    return led


def miniature_ledger(build: Build) -> ParamLedger:
    cfg = build.cfg
    led = ParamLedger("miniature", Fraction(1, 16), [])
    top = build.top
    for n, lvl in enumerate(build.levels):
        r = led.row(n)
        r.p = cfg.p if n else None
        r.R = cfg.R
        r.e = cfg.e if n else (cfg.sigma.bit_length() - 1) / 4
        r.s_count = lvl.count
        r.h = lvl.h
        r.q = build.q(n)
        r.s_level = lvl.s
        r.J = dict(lvl.J)
        r.classes = {s: lvl.n_classes(s) for s in range(lvl.s + 1)}
        if n < top:
            r.l = cfg.l
            r.C = build.C[n]
            r.k = build.levels[n + 1].k_prev
    for n in range(top + 1):
        r = led.rows[n]
        if n <= 1 or led.rows[n - 2].k is not None:
            r.Rc = _rc(led.rows, n)
    return led


def check_ledger(led: ParamLedger, prefix: TreePrefix, n_max: int | None = None) -> list:
    """One verdict per (inequality, n) that the ledger can evaluate."""
    rows = led.rows
    top = len(rows) - 1 if n_max is None else n_max
    casc = bound_cascade(led, prefix, min(top, _cascade_top(led)), strict=False)
    beta = casc.beta
    out = []

    def add(name, n, ok):
        out.append({"clause": name, "n": n, "holds": bool(ok)})

    def have(*xs):
        return all(x is not None for x in xs)

    for n in range(top + 1):
        r = rows[n]
        r1 = rows[n + 1] if n + 1 < len(rows) else LedgerRow(n + 1)
        r2 = rows[n + 2] if n + 2 < len(rows) else LedgerRow(n + 2)
        if have(r1.p, r.R) and n >= 1:
            add("prime_above_4R", n, r1.p > 4 * r.R)
        if have(r1.R, r1.p) and n in beta:
            add("R_next_vs_prime", n, beta[n] > 0 and r1.R >= 40 * r1.p / beta[n])
        if r.R is not None and n in beta and n >= 1:
            add("R_vs_beta", n, beta[n] > 0 and r.R >= 7 / beta[n])
        if have(r1.e, r1.R, r.e):
            gmax = max((build_group(prefix, s, n + 1).order
                        for s in range(1, s_of(prefix, min(n + 1, prefix.n_max)) + 1)), default=1)
            add("e_growth", n, 2 ** r1.e > max(10 * r1.R, gmax) and r1.e > r.e)
        if have(r2.p, r1.R):
            add("prime_two_ahead", n, r2.p > 4 * r1.R)
        if have(r2.R, r2.p, r1.p) and n in beta:
            add("R_two_ahead", n, beta[n] > 0 and r2.R > Fraction(1600 * r2.p * r1.p) / beta[n])
        if have(r.l, r2.R):
            lp = rows[n - 1].l if n >= 1 and rows[n - 1].l is not None else 0
            add("l_growth", n, r.l >= max(4 * r2.R ** 2, 9 * lp ** 2))
    return out


# -- bound cascade ----------------------------------------------------------------------

def cascade_step(case2: bool, S: int, beta: Fraction, alpha: dict, R_n: int, R_n1: int,
                 Rc_n: int, l_n: int, p_n1: int) -> tuple:
    """Lower bounds at level n+1 from those at level n (Case 1 or Case 2)."""
    a = Fraction(2, R_n)
    if not case2:
        cut = a + Fraction(3, R_n1)
        return beta - cut, {s: v - cut for s, v in alpha.items()}
    cut = a + Fraction(4, R_n1)
    new = {s: v - cut for s, v in alpha.items()}
    new[S + 1] = beta - cut
    inner = beta - Fraction(1, Rc_n) - Fraction(2, math.isqrt(l_n))
    return inner / (2 * p_n1) - Fraction(3, R_n1), new


@dataclass
class BoundCascade:
    beta: dict          # n -> Fraction
    alpha: dict         # (s, n) -> Fraction
    floors: dict        # s -> alpha_(s, M(s)) / 2
    checks: list

    @property
    def ok(self) -> bool:
        return all(c["holds"] for c in self.checks)

    def as_dict(self) -> dict:
        return {"beta": {str(n): str(v) for n, v in self.beta.items()},
                "alpha": {f"{s},{n}": str(v) for (s, n), v in self.alpha.items()},
                "floors": {str(s): str(v) for s, v in self.floors.items()},
                "checks": [{**c, "value": str(c.get("value"))} for c in self.checks],
                "ok": self.ok}


def _cascade_top(led: ParamLedger) -> int:
    n = 0
    rows = led.rows
    while n + 1 < len(rows) and all(x is not None for x in
                                    (rows[n].R, rows[n + 1].R, rows[n].l, rows[n + 1].p)) \
            and (rows[n].Rc is not None):
        n += 1
    return n


def bound_cascade(led: ParamLedger, prefix: TreePrefix, n_max: int, strict: bool = True) -> BoundCascade:
    """beta_n and alpha_(s,n) for n = 0..n_max by the case-split recurrences.

    With ``strict`` a non-positive bound raises NonPositiveBound.
    """
    rows = led.rows
    beta = {0: Fraction(led.beta0)}
    alpha: dict = {}
    checks = []
    for n in range(n_max):
        S, S1 = s_of(prefix, n), s_of(prefix, n + 1)
        r, r1 = rows[n], rows[n + 1]
        if any(x is None for x in (r.R, r1.R, r.Rc, r.l, r1.p)):
            raise LedgerViolation(f"ledger row {n} incomplete for the cascade")
        b, al = cascade_step(S1 == S + 1, S, beta[n], {s: alpha[(s, n)] for s in range(1, S + 1)},
                             r.R, r1.R, r.Rc, r.l, r1.p)
        beta[n + 1] = b
        for s, v in al.items():
            alpha[(s, n + 1)] = v
    for n, b in beta.items():
        checks.append({"check": "beta>0", "n": n, "holds": b > 0, "value": b})
    for (s, n), v in sorted(alpha.items()):
        checks.append({"check": "alpha>0", "s": s, "n": n, "holds": v > 0, "value": v})
    floors = {}
    for s in range(1, s_of(prefix, n_max) + 1):
        m = M_of(prefix, s)
        if m is None or m > n_max:
            continue
        a0 = alpha[(s, m)]
        floors[s] = a0 / 2
        checks.append({"check": "alpha_M>beta/2", "s": s, "n": m,
                       "holds": a0 > beta[m - 1] / 2, "value": a0})
        for n in range(m, n_max + 1):
            checks.append({"check": "floor", "s": s, "n": n,
                           "holds": alpha[(s, n)] > a0 / 2, "value": alpha[(s, n)]})
    for n in range(1, n_max + 1):
        chain = [alpha[(s, n)] for s in range(1, s_of(prefix, n) + 1)] + [beta[n]]
        ordered = chain[0] < Fraction(1, 8) and all(x > y for x, y in zip(chain, chain[1:]))
        checks.append({"check": "ordering", "n": n, "holds": ordered, "value": None})
    casc = BoundCascade(beta, alpha, floors, checks)
    if strict:
        bad = [c for c in checks if c["check"] in ("beta>0", "alpha>0") and not c["holds"]]
        if bad:
            raise NonPositiveBound(f"first non-positive bound: {bad[0]}")
    return casc
