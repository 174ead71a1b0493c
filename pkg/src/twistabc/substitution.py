"""One substitution step: refine words over coarse classes into words over fine classes.

Setting.  X/P has N = 2^(nu+N') coarse classes, numbered 0..N-1.  Each
coarse class i splits into 2^(4e) fine classes, coded i * 2^(4e) + j.  A
group G of involutions acts freely on the coarse classes, a group H acts
freely on the fine classes, and a homomorphism rho: H -> G makes the fine
action lie over the coarse one.  H0 = ker rho has 2^t elements.

Input: a collection Omega of words over coarse classes, each a concatenation
of U1 Feldman patterns.  Output: Omega' = H S where S substitutes, for each
orbit representative r and each j < K, a Feldman pattern over a tuple of
fine classes into every T1-block of r.  The choice of tuple alternates
between two sequences psi and phi on even and odd segments so that the next
step's pair-count condition holds.

Groups are F_2 vector spaces; an element is a bit mask over the generators.
The skew diagonal action of a generator reverses the word and acts on every
letter, so an element reverses iff it has odd parity.

Words are compressed HWords throughout; with the literal parameters they
have length far beyond anything that could be listed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import ActionUndefined, BConditionFailed, InvariantViolated, NotIntegral
from .feldman import FeldmanSpec, pattern
from .twist import map_letters
from .words import HWord, aligned_pair_counts, cat, letter, rev, slice_word, symbol_at, words_equal

WAIVABLE = ("U1.floor", "M2.floor", "e.floor", "b2.distinct")


# -- groups and actions ---------------------------------------------------------------

@dataclass(frozen=True)
class GroupAction:
    """(Z_2)^rank acting on range(size); generator b acts by the involution generators[b]."""
    size: int
    generators: tuple = ()

    def __post_init__(self):
        gens = tuple(tuple(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        for b, g in enumerate(gens):
            if sorted(g) != list(range(self.size)):
                raise ActionUndefined(f"generator {b} is not a permutation of {self.size} points")
            if any(g[g[x]] != x for x in range(self.size)):
                raise ActionUndefined(f"generator {b} is not an involution")
        for a in range(len(gens)):
            for b in range(a):
                ga, gb = gens[a], gens[b]
                if any(ga[gb[x]] != gb[ga[x]] for x in range(self.size)):
                    raise ActionUndefined(f"generators {a} and {b} do not commute")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def order(self) -> int:
        return 1 << self.rank

    def elements(self) -> range:
        return range(self.order)

    @staticmethod
    def parity(mask: int) -> int:
        return bin(mask).count("1") % 2

    def _check(self, mask: int):
        if not 0 <= mask < self.order:
            raise ActionUndefined(f"element {mask:#b} outside a group of rank {self.rank}")

    def perm(self, mask: int) -> tuple:
        self._check(mask)
        return self._perms[mask]

    @cached_property
    def _perms(self) -> list:
        out = [tuple(range(self.size))]
        for mask in range(1, self.order):
            low = (mask & -mask).bit_length() - 1
            g, rest = self.generators[low], out[mask & (mask - 1)]
            out.append(tuple(g[rest[x]] for x in range(self.size)))
        return out

    def act(self, mask: int, x: int) -> int:
        if not 0 <= x < self.size:
            raise ActionUndefined(f"point {x} outside 0..{self.size - 1}")
        return self.perm(mask)[x]

    def is_free(self) -> bool:
        return all(all(p[x] != x for x in range(self.size)) for p in self._perms[1:])


def standard_actions(nu: int, N_prime: int, e: int, g_rank: int, rho: Sequence[int]):
    """Free actions in coordinates.

    Coarse class i: generator b of G flips bit b of i.  Fine class
    i * 2^(4e) + j: generator b of H moves i by rho(b) and flips bit b of j,
    so H acts freely and lies over G.  Returns (G, H).
    """
    N = 1 << (nu + N_prime)
    if g_rank > nu + N_prime:
        raise InvariantViolated("GroupTooLarge", f"G of rank {g_rank} cannot act freely on {N} classes")
    G = GroupAction(N, [tuple(i ^ (1 << b) for i in range(N)) for b in range(g_rank)])
    sub = 1 << (4 * e)
    if len(rho) > 4 * e:
        raise InvariantViolated("GroupTooLarge", f"H of rank {len(rho)} exceeds 4e = {4 * e}")
    gens = []
    for b, m in enumerate(rho):
        if not 0 <= m < G.order:
            raise ActionUndefined(f"rho of generator {b} is {m:#b}, outside G")
        p = G.perm(m)
        gens.append(tuple(p[c // sub] * sub + ((c % sub) ^ (1 << b)) for c in range(N * sub)))
    return G, GroupAction(N * sub, gens)


def skew_diagonal(action: GroupAction, g: int, w):
    """(x_1, ..., x_k) -> (g x_k, ..., g x_1) for a generator; even elements do not reverse."""
    perm = action.perm(g)

    def image(x):
        if not isinstance(x, int) or not 0 <= x < action.size:
            raise ActionUndefined(f"letter {x!r} is not a class of this action")
        return perm[x]

    if isinstance(w, HWord):
        out = map_letters(w, lambda x: letter(image(x)))
        return rev(out) if action.parity(g) else out
    seq = [image(x) for x in w]
    return tuple(reversed(seq)) if action.parity(g) else tuple(seq)


# -- input data ------------------------------------------------------------------------

@dataclass(frozen=True)
class SubstInput:
    nu: int
    N_prime: int
    e: int
    t: int
    K: int
    T2: int
    R_tilde: int
    D: int
    M1: int
    U1: int
    M2: int
    G: GroupAction
    H: GroupAction
    rho: tuple                 # G-mask of each H generator
    P_count: int | None = None  # |Omega|; filled in from the collection when None
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    waive: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(self.rho))
        object.__setattr__(self, "waive", frozenset(self.waive))
        unknown = self.waive - set(WAIVABLE)
        if unknown:
            raise InvariantViolated("UnknownWaiver", ", ".join(sorted(unknown)))

    @property
    def N(self) -> int:
        return 1 << (self.nu + self.N_prime)

    @property
    def sub(self) -> int:
        """Fine classes per coarse class."""
        return 1 << (4 * self.e)

    @property
    def tuple_len(self) -> int:
        return 1 << (4 * self.e - self.t)

    def rho_of(self, h: int) -> int:
        out = 0
        for b, m in enumerate(self.rho):
            if h >> b & 1:
                out ^= m
        return out

    def kernel(self) -> list:
        return [h for h in self.H.elements() if self.rho_of(h) == 0]

    def image(self) -> list:
        return sorted({self.rho_of(h) for h in self.H.elements()})

    def coarse(self, c: int) -> int:
        return c // self.sub


@dataclass(frozen=True)
class SubstParams:
    T1: int
    U2: int
    k: int
    U3: int
    V_tilde: int
    unit: int          # T2 2^(8e-2t): the repetition unit of the output
    checks: dict       # constraint name -> (holds, waived)

    def as_dict(self) -> dict:
        return {"T1": self.T1, "U2": self.U2, "k": self.k, "U3": self.U3,
                "V_tilde": self.V_tilde, "unit": self.unit,
                "checks": {n: {"holds": h, "waived": w} for n, (h, w) in self.checks.items()}}


def derive_subst_params(inp: SubstInput) -> SubstParams:
    """T1, U2 and k, after checking every constraint on the input.

    Waivable constraints that fail are recorded; any other failure raises
    InvariantViolated naming the constraint.
    """
    nu, e, t = inp.nu, inp.e, inp.t
    N = inp.N
    fe = nu * (2 * inp.M1 + 3)
    T1 = inp.T2 * 2 ** ((4 * e - t) * (2 * inp.M2 + 3))
    U2 = inp.U1 * 2 ** fe
    k = U2 * T1
    U3 = U2 * 2 ** ((4 * e - t) * (2 * inp.M2 + 3))
    checks: dict = {}

    def need(name, ok, detail=""):
        checks[name] = (ok, False)
        if not ok:
            raise InvariantViolated(name, detail)

    def soft(name, ok):
        waived = name in inp.waive
        checks[name] = (ok, waived and not ok)
        if not ok and not waived:
            raise InvariantViolated(name, "set it in waive= to run anyway")

    need("PositiveConstants", min(inp.K, inp.T2, inp.M1, inp.M2, inp.U1, inp.D) >= 1 and nu >= 0
         and inp.N_prime >= 0 and t >= 0)
    need("DEven", inp.D % 2 == 0, f"D = {inp.D}")
    need("RTildeAtLeast2", inp.R_tilde >= 2)
    need("NuFloor", fe >= 2 * (nu + inp.N_prime), f"nu(2M1+3) = {fe} < 2(nu+N')")
    need("U1NotMultiple", inp.U1 % (inp.D * 4 ** t) == 0, f"U1 = {inp.U1}, D 2^(2t) = {inp.D * 4 ** t}")
    need("TupleFits", 4 * e > t)
    need("GSize", inp.G.size == N, f"G acts on {inp.G.size} points, need {N}")
    need("HSize", inp.H.size == N * inp.sub, f"H acts on {inp.H.size} points, need {N * inp.sub}")
    need("RhoRank", len(inp.rho) == inp.H.rank)
    need("RhoRange", all(0 <= m < inp.G.order for m in inp.rho))
    need("GFree", inp.G.is_free())
    need("HFree", inp.H.is_free())
    need("Subordinate", all(inp.coarse(inp.H.act(1 << b, c)) == inp.G.act(inp.rho[b], inp.coarse(c))
                            for b in range(inp.H.rank) for c in range(inp.H.size)))
    need("KernelSize", len(inp.kernel()) == 1 << t, f"|H0| = {len(inp.kernel())}, 2^t = {1 << t}")
    soft("e.floor", e >= max(2, t))
    soft("U1.floor", inp.U1 >= 2 * inp.R_tilde ** 2)
    if inp.P_count is not None:
        soft("M2.floor", inp.M2 >= inp.K * inp.P_count * U2)
    need("KMultipleOfN2", k % (N * N) == 0)
    V = Fraction(U2, N * inp.D)
    return SubstParams(T1, U2, k, U3, int(V) if V.denominator == 1 else 0,
                       inp.T2 * 2 ** (8 * e - 2 * t), checks)


def psi_phi_sequences(t: int, V: int) -> tuple:
    """psi_v = v mod 2^t and phi_v = floor(v / 2^t) mod 2^t for v = 1..V."""
    if V <= 0 or V % (1 << t):
        raise NotIntegral(f"sequence length {V} is not a positive multiple of 2^t = {1 << t}")
    m = 1 << t
    psi = tuple(v % m for v in range(1, V + 1))
    phi = tuple((v // m) % m for v in range(1, V + 1))
    return psi, phi


def pair_coverage(t: int, windows: int = 4) -> dict:
    """Each block of 2^(2t) consecutive v pairs (psi_v, phi_v) hits every pair once.

    Blocks start at v = 1 + w 2^(2t), which is how the substitution meets
    them: a run of T1 2^(2t) symbols of one class covers 2^(2t) consecutive
    occurrences starting right after a multiple of 2^(2t).  Both orders
    (psi over phi and phi over psi) are checked.
    """
    m, W = 1 << t, 1 << (2 * t)
    psi, phi = psi_phi_sequences(t, W * windows)
    want = Counter((a, b) for a in range(m) for b in range(m))
    failures = []
    for w in range(windows):
        lo = w * W
        fwd = Counter(zip(psi[lo:lo + W], phi[lo:lo + W]))
        bwd = Counter(zip(phi[lo:lo + W], psi[lo:lo + W]))
        if fwd != want or bwd != want:
            failures.append(w)
    return {"ok": not failures, "t": t, "windows": windows, "failures": failures}


# -- tuple layout ------------------------------------------------------------------------

def tuple_layout(inp: SubstInput) -> list:
    """layout[i][u] is the ordered tuple of fine classes number u inside coarse class i.

    Take the least unprocessed coarse class A.  Its first tuple collects, in
    increasing order, the least member of each H0-orbit of fine classes in A;
    tuple u is the image of tuple 0 under the u-th element of H0.  For each
    coset of H0 (represented by its least element h) the tuples of rho(h) A
    are the images of the tuples of A under h.  Repeat until every class is
    covered.
    """
    N, sub, L = inp.N, inp.sub, inp.tuple_len
    H0 = inp.kernel()
    reps: dict = {}
    for h in inp.H.elements():
        reps.setdefault(inp.rho_of(h), h)
    layout: list = [None] * N
    for A in range(N):
        if layout[A] is not None:
            continue
        seen, first = set(), []
        for c in range(A * sub, (A + 1) * sub):
            if c in seen:
                continue
            first.append(c)
            seen.update(inp.H.act(h0, c) for h0 in H0)
        if len(first) != L:
            raise InvariantViolated("TupleLayout", f"{len(first)} H0-orbits in class {A}, need {L}")
        tuples = [tuple(inp.H.act(h0, c) for c in first) for h0 in H0]
        for g, h in sorted(reps.items(), key=lambda kv: kv[1]):
            B = inp.G.act(g, A)
            if layout[B] is None:
                layout[B] = [tuple(inp.H.act(h, c) for c in tup) for tup in tuples]
    return layout


# -- Omega -------------------------------------------------------------------------------

def block_sequence(w: HWord, block: int, count: int) -> list:
    """Letters of ``w`` read at block granularity; raises if a block is not constant."""
    out = []
    for x in range(count):
        c = slice_word(w, x * block, (x + 1) * block).counts
        if len(c) != 1:
            raise BConditionFailed(f"block {x} of size {block} is not a single class")
        out.append(next(iter(c)))
    return out


def omega_from_patterns(inp: SubstInput, specs: Sequence) -> HWord:
    """Concatenate U1 coarse Feldman patterns.

    ``specs`` lists (k, tuple of 2^nu coarse classes) per pattern; k is the
    pattern number 1..M1.
    """
    T1 = derive_subst_params(inp).T1
    if len(specs) != inp.U1:
        raise BConditionFailed(f"need {inp.U1} patterns, got {len(specs)}")
    parts = []
    for k, tup in specs:
        fs = FeldmanSpec(T1, 1 << inp.nu, inp.M1, tuple(letter(i) for i in tup))
        parts.append(pattern(fs, k).word)
    return cat(parts)


def omega_from_orders(inp: SubstInput, orders: str) -> HWord:
    """Two coarse classes: '+' is pattern 1 over (0, 1) and '-' the same over (1, 0)."""
    if inp.N != 2:
        raise BConditionFailed("order strings describe two coarse classes only")
    table = {"+": (1, (0, 1)), "-": (1, (1, 0))}
    try:
        return omega_from_patterns(inp, [table[c] for c in orders])
    except KeyError as exc:
        raise BConditionFailed(f"order strings use + and -, got {exc}") from None


def _fp_index(words: Sequence[HWord]) -> dict:
    return {w.fingerprint(): i for i, w in enumerate(words)}


def check_B_conditions(omega: Sequence[HWord], inp: SubstInput) -> dict:
    """Closure, Feldman structure and the segment pair counts of the input words."""
    par = derive_subst_params(inp)
    T1, U2, k, N, D, t = par.T1, par.U2, par.k, inp.N, inp.D, inp.t
    report: dict = {"failures": []}
    fail = report["failures"].append
    if any(w.length != k for w in omega):
        fail({"check": "length", "want": k})
        report.update(B1=False, B2=False, B2_distinct=False, B3=False, ok=False)
        return report

    # (B1) closure under the skew action of every generator of G
    index = _fp_index(omega)
    b1 = True
    for i, w in enumerate(omega):
        for b in range(inp.G.rank):
            if skew_diagonal(inp.G, 1 << b, w).fingerprint() not in index:
                b1 = False
                fail({"check": "B1", "omega": i, "generator": b})
    # a generator of H whose rho image has the other parity reverses without G's help
    mixed = [b for b, m in enumerate(inp.rho) if inp.G.parity(m) != 1]
    rev_ok = True
    if mixed:
        for i, w in enumerate(omega):
            if rev(w).fingerprint() not in index:
                rev_ok = False
                fail({"check": "reversal", "omega": i})
    report["B1"] = b1
    report["reversal_compatible"] = rev_ok

    # (B2) U1 Feldman patterns over 2^nu distinct coarse classes
    nN = 1 << inp.nu
    plen = T1 * nN ** (2 * inp.M1 + 3)
    b2, found = True, []
    for i, w in enumerate(omega):
        pats = []
        for p in range(inp.U1):
            piece = slice_word(w, p * plen, (p + 1) * plen)
            hit = None
            for kk in range(1, inp.M1 + 1):
                step = T1 * nN ** (2 * kk)
                tup = tuple(symbol_at(piece, j * step) for j in range(nN))
                if len(set(tup)) != nN:
                    continue
                fs = FeldmanSpec(T1, nN, inp.M1, tuple(letter(x) for x in tup))
                if words_equal(piece, pattern(fs, kk).word):
                    hit = (kk, tup)
                    break
            if hit is None:
                b2 = False
                fail({"check": "B2", "omega": i, "piece": p})
            pats.append(hit)
        found.append(pats)
    distinct = all(len(set(p)) == len(p) for p in found) and len(index) == len(omega)
    report["B2"] = b2
    report["B2_distinct"] = distinct
    report["patterns"] = found

    # (B3) pair counts between segment d and segment d+1 at 2^(2t) T1 granularity
    blk = T1 * 4 ** t
    n_units = U2 // 4 ** t
    seg = n_units // D
    want = U2 // (N * N * D * 4 ** t)
    b3 = True
    for i, w in enumerate(omega):
        try:
            kseq = block_sequence(w, blk, n_units)
        except BConditionFailed as exc:
            b3 = False
            fail({"check": "B3", "omega": i, "detail": str(exc)})
            continue
        for d in range(D):
            cnt = Counter((kseq[d * seg + x], kseq[((d + 1) * seg + x) % n_units]) for x in range(seg))
            for i1 in range(N):
                for i2 in range(N):
                    if cnt.get((i1, i2), 0) != want:
                        b3 = False
                        fail({"check": "B3", "omega": i, "d": d, "pair": (i1, i2),
                              "got": cnt.get((i1, i2), 0), "want": want})
    report["B3"] = b3
    report["B3_target"] = want
    report["ok"] = b1 and rev_ok and b2 and b3 and (distinct or "b2.distinct" in inp.waive)
    return report


# -- the substitution ----------------------------------------------------------------------

@dataclass
class SubstResult:
    params: SubstParams
    layout: list
    orbits: list          # lists of Omega indices
    upsilon: list         # Omega index of each orbit representative
    S: list               # HWords over fine classes, ordered by (r, j)
    omega_prime: list     # HWords
    provenance: list      # (h mask, index into S) per element of omega_prime
    assignment: dict      # (r, j) -> list of (class, tuple number, pattern number)

    def manifest(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "orbits": self.orbits,
            "upsilon": self.upsilon,
            "S": len(self.S),
            "omega_prime": [{"h": h, "s": s} for h, s in self.provenance],
            "assignment": {f"{r},{j}": v for (r, j), v in self.assignment.items()},
        }


def substitute(omega: Sequence[HWord], inp: SubstInput) -> SubstResult:
    if inp.P_count is None:
        inp = _with_count(inp, len(omega))
    par = derive_subst_params(inp)
    rep = check_B_conditions(omega, inp)
    if not rep["ok"]:
        raise BConditionFailed(f"input fails its conditions: {rep['failures'][:3]}")
    T1, U2, D, t = par.T1, par.U2, inp.D, inp.t
    psi, phi = psi_phi_sequences(t, par.V_tilde)
    layout = tuple_layout(inp)
    index = _fp_index(omega)

    # step 1: G' orbits and their lexicographically least members
    seqs = [block_sequence(w, T1, U2) for w in omega]
    orbit_of: dict = {}
    orbits = []
    for i, w in enumerate(omega):
        if i in orbit_of:
            continue
        members = set()
        for g in inp.image():
            j = index.get(skew_diagonal(inp.G, g, w).fingerprint())
            if j is None:
                raise BConditionFailed(f"orbit of element {i} leaves the collection")
            members.add(j)
        orb = sorted(members)
        for j in orb:
            orbit_of[j] = len(orbits)
        orbits.append(orb)
    upsilon = [min(orb, key=lambda j: seqs[j]) for orb in orbits]

    # steps 2-6
    pat_cache: dict = {}

    def fine_pattern(i0, u, idx):
        key = (i0, u, idx)
        if key not in pat_cache:
            fs = FeldmanSpec(inp.T2, inp.tuple_len, inp.M2, tuple(letter(c) for c in layout[i0][u]))
            pat_cache[key] = pattern(fs, idx).word
        return pat_cache[key]

    seg = U2 // D
    S, assignment = [], {}
    for r_pos, r in enumerate(upsilon):
        iseq = seqs[r]
        for j in range(inp.K):
            seen: Counter = Counter()
            parts, record = [], []
            for ell in range(U2):
                d = ell // seg
                if ell % seg == 0:
                    seen = Counter()
                i0 = iseq[ell]
                seen[i0] += 1
                m = seen[i0]
                u = psi[m - 1] if d % 2 == 0 else phi[m - 1]
                idx = ((r_pos * inp.K + j) * U2 + ell) % inp.M2 + 1
                parts.append(fine_pattern(i0, u, idx))
                record.append((i0, u, idx))
            S.append(cat(parts))
            assignment[(r, j)] = record

    # Omega' = H S
    omega_prime, provenance, fps = [], [], set()
    for si, s in enumerate(S):
        for h in inp.H.elements():
            w = skew_diagonal(inp.H, h, s)
            fp = w.fingerprint()
            if fp not in fps:
                fps.add(fp)
                omega_prime.append(w)
                provenance.append((h, si))
    return SubstResult(par, layout, orbits, upsilon, S, omega_prime, provenance, assignment)


def _with_count(inp: SubstInput, P: int) -> SubstInput:
    from dataclasses import replace
    return replace(inp, P_count=P)


def project(inp: SubstInput, w: HWord) -> HWord:
    """Collapse fine classes to the coarse classes containing them."""
    return map_letters(w, lambda c: letter(inp.coarse(c)))


def verify_substitution(result: SubstResult, omega: Sequence[HWord], inp: SubstInput) -> dict:
    """Closure under H, instance multiplicity and the fine segment pair counts."""
    par = result.params
    N, D, sub = inp.N, inp.D, inp.sub
    out = result.omega_prime
    fps = _fp_index(out)

    closure_failures = [(i, b) for i, w in enumerate(out) for b in range(inp.H.rank)
                        if skew_diagonal(inp.H, 1 << b, w).fingerprint() not in fps]

    want_mult = inp.K * len(inp.kernel())
    proj = Counter(project(inp, w).fingerprint() for w in out)
    mult = [proj.get(w.fingerprint(), 0) for w in omega]
    src = {w.fingerprint() for w in omega}
    stray = sum(c for fp, c in proj.items() if fp not in src)

    unit = par.unit
    L = par.k // D
    target = Fraction(par.U3, D * 2 ** (8 * inp.e - 2 * inp.t) * N * N * sub * sub)
    classes = range(N * sub)
    n_pairs = (N * sub) ** 2
    want_raw = target * unit
    part3_failures, not_blocked, consistency = [], 0, True
    lo = hi = None
    for i, w in enumerate(out):
        for d in range(D):
            a = slice_word(w, d * L, (d + 1) * L)
            b = slice_word(w, ((d + 1) % D) * L, ((d + 1) % D + 1) * L)
            cnt = aligned_pair_counts(a, b)
            rows: Counter = Counter()
            for (x, y), c in cnt.items():
                rows[x] += c
            if any(rows[x] != a.counts.get(x, 0) for x in a.counts):
                consistency = False
            # work in raw symbol counts; absent pairs count zero
            inside = [c for (x, y), c in cnt.items() if x in classes and y in classes]
            absent = n_pairs - len(inside)
            not_blocked += sum(1 for c in cnt.values() if c % unit)
            if absent:
                inside.append(0)
            lo = min(lo, min(inside)) if lo is not None else min(inside)
            hi = max(hi, max(inside)) if hi is not None else max(inside)
            bad = sum(1 for c in inside if c != want_raw) - (1 if absent else 0)
            bad += absent if want_raw != 0 else 0
            bad += len(cnt) - (len(inside) - (1 if absent else 0))
            if bad:
                part3_failures.append({"omega_prime": i, "d": d, "mismatched_pairs": bad})
    part1 = not closure_failures
    part2 = all(m == want_mult for m in mult) and stray == 0
    part3 = not part3_failures and not_blocked == 0
    return {
        "part1": part1,
        "closure_failures": closure_failures,
        "part2": part2,
        "multiplicity": mult,
        "multiplicity_target": want_mult,
        "stray_projections": stray,
        "part3": part3,
        "part3_target": target,
        "part3_range": (Fraction(lo, unit), Fraction(hi, unit)),
        "part3_failures": part3_failures,
        "unaligned_counts": not_blocked,
        "row_sums_consistent": consistency,
        "size": len(out),
        "ok": part1 and part2 and part3 and consistency,
    }


# -- a desk-scale instance --------------------------------------------------------------

MINIATURE_ORDERS = "++--+-+-"


def miniature_input(M2: int = 1, **overrides) -> SubstInput:
    """nu=1, N'=0, e=2, t=1, M1=1, T2=1, D=2, K=1, U1=8 with G = Z_2, H = Z_2^2.

    Both generators of H map onto the generator of G, so H0 = {0, 0b11}
    has 2 = 2^t elements.  The magnitude constraints that cannot hold at
    this size are waived.
    """
    G, H = standard_actions(1, 0, 2, 1, (1, 1))
    kw = dict(nu=1, N_prime=0, e=2, t=1, K=1, T2=1, R_tilde=2, D=2, M1=1, U1=8, M2=M2,
              G=G, H=H, rho=(1, 1), waive=frozenset({"U1.floor", "M2.floor", "b2.distinct"}))
    kw.update(overrides)
    return SubstInput(**kw)


def miniature_omega(inp: SubstInput, orders: str = MINIATURE_ORDERS) -> list:
    """A word and its image under the generator of G."""
    w = omega_from_orders(inp, orders)
    return [w, skew_diagonal(inp.G, 1, w)]
