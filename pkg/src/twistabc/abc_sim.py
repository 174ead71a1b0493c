"""Exact simulation of one stage of the twisted approximation-by-conjugation
construction on rational grids.

The unit square is cut into a grid of r columns and s levels; cell (i, j) is
[i/r, (i+1)/r) x [j/s, (j+1)/s).  All maps used by one stage permute such
cells, so we store them as integer arrays on flat cell indices
``col * s + level`` and measure sets by counting cells.

Conventions at stage n (q = q_n, k = k_n, C = C_n, D = 2^(n+2) q):

* a column i < k q decomposes as i = i1 k + i2 C + i3 (i1 < q, i2 < D, i3 < C);
  columns i1 k .. (i1+1) k - 1 form fundamental domain i1;
* h1 shifts the domain of column i by a_n(i2);
* R^(m_n) for alpha_(n+1) shifts every column by C;
* h2 moves fine cells (resolution k q by s_(n+1)) inside their fundamental
  domain so that cell (i2 C + c, s) lands in vertical band b_n(i2, c, s),
  band t being the levels t S/s_n .. (t+1) S/s_n - 1 with S = s_(n+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (IndexOutOfRange, NotCoprime, NotDivisible, PrereqViolated,
                     R2Violated)
from .twist import TwistParams, j_table, twist_op
from .words import B, E, HWord, flatten, from_seq


# -- grids and permutations ---------------------------------------------------

@dataclass(frozen=True)
class Grid:
    r: int
    s: int

    @property
    def size(self) -> int:
        return self.r * self.s

    @property
    def cell_measure(self) -> Fraction:
        return Fraction(1, self.size)

    def index(self, i: int, j: int) -> int:
        if not (0 <= i < self.r and 0 <= j < self.s):
            raise IndexOutOfRange(f"cell ({i}, {j}) outside {self.r}x{self.s}")
        return i * self.s + j


class GridPermutation:
    """A bijection of the cells of a grid, as an index array."""

    def __init__(self, grid: Grid, image: np.ndarray):
        image = np.asarray(image, dtype=np.int64)
        if image.shape != (grid.size,):
            raise ValueError("image array has the wrong size")
        self.grid = grid
        self.image = image

    @classmethod
    def from_columns(cls, grid: Grid, col_image: np.ndarray) -> "GridPermutation":
        """Lift a permutation of columns to all levels."""
        cols = np.repeat(np.asarray(col_image, dtype=np.int64), grid.s)
        levels = np.tile(np.arange(grid.s, dtype=np.int64), grid.r)
        return cls(grid, cols * grid.s + levels)

    @classmethod
    def identity(cls, grid: Grid) -> "GridPermutation":
        return cls(grid, np.arange(grid.size, dtype=np.int64))

    def __call__(self, cell: int) -> int:
        return int(self.image[cell])

    def is_bijection(self) -> bool:
        return len(np.unique(self.image)) == self.grid.size

    def inverse(self) -> "GridPermutation":
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(self.grid.size, dtype=np.int64)
        return GridPermutation(self.grid, inv)

    def then(self, other: "GridPermutation") -> "GridPermutation":
        """Apply self first, then other."""
        return GridPermutation(self.grid, other.image[self.image])

    def __matmul__(self, other: "GridPermutation") -> "GridPermutation":
        # (f @ g)(x) = f(g(x))
        return other.then(self)

    def power(self, e: int) -> "GridPermutation":
        out = GridPermutation.identity(self.grid)
        base = self
        while e:
            if e & 1:
                out = out.then(base)
            base = base.then(base)
            e >>= 1
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, GridPermutation) and self.grid == other.grid \
            and bool(np.array_equal(self.image, other.image))

    def columns_image(self) -> np.ndarray:
        """Column map, assuming self moves whole columns."""
        return self.image[:: self.grid.s] // self.grid.s


def rotation(alpha, grid: Grid) -> GridPermutation:
    """Horizontal rotation by alpha = p/q; needs q | r."""
    alpha = Fraction(alpha) % 1
    if grid.r % alpha.denominator:
        raise NotDivisible(f"{alpha.denominator} does not divide {grid.r}")
    shift = grid.r * alpha.numerator // alpha.denominator
    cols = (np.arange(grid.r, dtype=np.int64) + shift) % grid.r
    return GridPermutation.from_columns(grid, cols)


def commutes_with(f: GridPermutation, g: GridPermutation) -> bool:
    return f.then(g) == g.then(f)


# -- the twist map h1 ---------------------------------------------------------

def a_n(i2: int, n: int, q: int) -> int:
    """Horizontal shift (in fundamental domains) applied to stripe i2."""
    half = 2 ** (n + 1) * q
    if not 0 <= i2 < 2 * half:
        raise IndexOutOfRange(f"a_{n}({i2}) needs 0 <= i2 < {2 * half}")
    if i2 < half:
        return 0 if i2 % 2 == 0 else ((i2 + 1) // 2) % q
    return (i2 // 2 + 1) % q if i2 % 2 == 0 else 1 % q


def a_table(n: int, params: TwistParams) -> list:
    q = params.q[n]
    return [a_n(i, n, q) for i in range(2 ** (n + 2) * q)]


def h1_columns(n: int, params: TwistParams) -> np.ndarray:
    q, k, C = params.q[n], params.k[n], params.C[n]
    cols = np.arange(k * q, dtype=np.int64)
    i1, rest = cols // k, cols % k
    a = np.asarray(a_table(n, params), dtype=np.int64)
    return ((i1 + a[rest // C]) % q) * k + rest


def build_h1(n: int, params: TwistParams, s_vertical: int = 1) -> GridPermutation:
    grid = Grid(params.k[n] * params.q[n], s_vertical)
    return GridPermutation.from_columns(grid, h1_columns(n, params))


def stage_rotation(n: int, params: TwistParams, s_vertical: int = 1) -> GridPermutation:
    """R_(alpha_(n+1))^(m_n) on the k_n q_n by s grid (a shift by C_n columns)."""
    grid = Grid(params.k[n] * params.q[n], s_vertical)
    return rotation(params.mixing_residue(n), grid)


def displacement_histogram(n: int, params: TwistParams) -> dict:
    """Displacement histogram of h1 R^(m_n) h1^(-1) on the D q stripes.

    Stripe j D + i2 (C columns wide) is carried into fundamental domain
    j + d; we count stripes per displacement d for every source domain j.
    """
    q, k, C = params.q[n], params.k[n], params.C[n]
    D = 2 ** (n + 2) * q
    h1 = build_h1(n, params)
    f = h1.inverse().then(stage_rotation(n, params)).then(h1)
    cols = f.columns_image()
    per_domain = []
    for j in range(q):
        hist = [0] * q
        for i2 in range(D):
            dest = int(cols[j * k + i2 * C]) // k
            hist[(dest - j) % q] += 1
        per_domain.append(hist)
    hist = per_domain[0]
    uniform = all(h == hist for h in per_domain)
    if q == 1:
        want = [D]
    else:
        want = [2 ** (n + 2) - 1, 2 ** (n + 2) + 1] + [2 ** (n + 2)] * (q - 2)
    stripe = Fraction(1, D * q)
    target = Fraction(1, q * q)
    bound = Fraction(1, 2 ** (n + 2)) * target
    devs = [abs(c * stripe - target) for c in hist]
    return {
        "histogram": {d: c for d, c in enumerate(hist)},
        "total": sum(hist),
        "same_for_every_domain": uniform,
        "matches_expected": hist == want,
        "max_deviation": max(devs),
        "bound": bound,
        "within_bound": all(d <= bound for d in devs),
        "strictly_within_bound": all(d < bound for d in devs),
        "ok": uniform and hist == want and all(d <= bound for d in devs),
    }


def render_h1(n: int, params: TwistParams) -> str:
    """CSV table: stripe i2, its shift a_n(i2), and where R^(m_n) sends it."""
    q = params.q[n]
    D = 2 ** (n + 2) * q
    a = a_table(n, params)
    lines = ["i2,a_n,next_stripe,displacement"]
    for i2 in range(D):
        nxt = (i2 + 1) % D
        d = (a[nxt] - a[i2] + (1 if nxt == 0 else 0)) % q if q > 1 else 0
        lines.append(f"{i2},{a[i2]},{nxt},{d}")
    return "\n".join(lines) + "\n"


# -- b-tuples and h2 ------------------------------------------------------------------

@dataclass
class BTuples:
    """b_n(i, c, s) as an integer array of shape (D, C_n, s_(n+1))."""

    n: int
    s_n: int
    table: np.ndarray

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.int64)
        if self.table.ndim != 3:
            raise ValueError("table must have shape (D, C, S)")
        if self.table.size and (self.table.min() < 0 or self.table.max() >= self.s_n):
            raise ValueError(f"entries must lie in [0, {self.s_n})")

    @property
    def D(self) -> int:
        return self.table.shape[0]

    @property
    def C(self) -> int:
        return self.table.shape[1]

    @property
    def s_next(self) -> int:
        return self.table.shape[2]

    def row(self, s: int) -> np.ndarray:
        """The concatenation b(0, s) b(1, s) ... as a flat array."""
        return self.table[:, :, s].reshape(-1)

    @classmethod
    def from_rows(cls, n: int, s_n: int, rows: Sequence[Sequence[Sequence[int]]]) -> "BTuples":
        """rows[s][i] is the C-tuple b(i, s)."""
        arr = np.asarray(rows, dtype=np.int64)  # (S, D, C)
        return cls(n, s_n, np.transpose(arr, (1, 2, 0)))


def validate_R2(bt: BTuples) -> bool:
    want = bt.D * bt.C // bt.s_n
    if bt.D * bt.C % bt.s_n:
        return False
    for s in range(bt.s_next):
        counts = np.bincount(bt.row(s), minlength=bt.s_n)
        if not np.all(counts == want):
            return False
    return True


def validate_R3(bt: BTuples) -> bool:
    rows = {bt.row(s).tobytes() for s in range(bt.s_next)}
    return len(rows) == bt.s_next


def validate_R4(bt: BTuples) -> bool:
    """Adjacent tuples (cyclically in i) meet every pair C/s_n^2 times."""
    sn = bt.s_n
    if bt.C % (sn * sn):
        return False
    want = bt.C // (sn * sn)
    nxt = np.roll(bt.table, -1, axis=0)
    pair = bt.table * sn + nxt  # (D, C, S)
    for i in range(bt.D):
        for s in range(bt.s_next):
            counts = np.bincount(pair[i, :, s], minlength=sn * sn)
            if not np.all(counts == want):
                return False
    return True


def balanced_btuples(n: int, params: TwistParams, s_n: int, s_next: int) -> BTuples:
    """A standalone (R2)+(R3)+(R4) instance.

    Tuple A lists the first coordinates of all pairs (t, u), tuple B the
    second ones, each repeated C/s_n^2 times; A and B alternate along i, so
    both A->B and B->A meet every pair equally often.  Row s relabels
    tuple i by adding the i-th base-s_n digit of s, which keeps the pair
    counts and makes rows distinct.
    """
    C, q = params.C[n], params.q[n]
    D = 2 ** (n + 2) * q
    if C % (s_n * s_n):
        raise NotDivisible(f"C_{n} = {C} is not a multiple of s_n^2 = {s_n * s_n}")
    if s_next % s_n:
        raise NotDivisible("s_(n+1) must be a multiple of s_n")
    if s_n == 1 and s_next > 1 or s_next > s_n ** D:
        raise PrereqViolated("not enough distinct rows for this s_(n+1)")
    rep = C // (s_n * s_n)
    pairs = [(t, u) for t in range(s_n) for u in range(s_n)] * rep
    A = np.array([t for t, _ in pairs], dtype=np.int64)
    Bt = np.array([u for _, u in pairs], dtype=np.int64)
    table = np.empty((D, C, s_next), dtype=np.int64)
    for s in range(s_next):
        x = s
        for i in range(D):
            digit = x % s_n
            x //= s_n
            base = A if i % 2 == 0 else Bt
            table[i, :, s] = (base + digit) % s_n
    return BTuples(n, s_n, table)


def h2_fundamental(bt: BTuples, k: int) -> np.ndarray:
    """Canonical packing of h2 on the fundamental domain.

    Returns the image of every fine cell col * S + level (col < k).  Cells
    sent to band t are taken in (column, level) order and placed onto the
    cells of band t in the same order.
    """
    S, sn, C = bt.s_next, bt.s_n, bt.C
    if S % sn:
        raise NotDivisible("s_(n+1) must be a multiple of s_n")
    if bt.D * C != k:
        raise ValueError("b-tuples do not match k_n")
    if not validate_R2(bt):
        raise R2Violated("some row does not use every band k_n/s_n times")
    h = S // sn
    # band of source cell (col, level); cols run i*C + c
    band = bt.table.reshape(k, S)
    src = np.arange(k * S, dtype=np.int64)
    out = np.empty(k * S, dtype=np.int64)
    flat_band = band.reshape(-1)
    cols = np.arange(k, dtype=np.int64)
    for t in range(sn):
        sources = src[flat_band == t]  # already in (col, level) order
        levels = np.arange(t * h, (t + 1) * h, dtype=np.int64)
        targets = (cols[:, None] * S + levels[None, :]).reshape(-1)
        out[sources] = targets
    return out


def build_h2(n: int, bt: BTuples, params: TwistParams) -> GridPermutation:
    q, k = params.q[n], params.k[n]
    S = bt.s_next
    base = h2_fundamental(bt, k)
    grid = Grid(k * q, S)
    offs = np.arange(q, dtype=np.int64)[:, None] * (k * S)
    return GridPermutation(grid, (base[None, :] + offs).reshape(-1))


def verify_mixing_inequality(n: int, bt: BTuples, params: TwistParams) -> dict:
    """Exact measures of h R^(m_n) h^(-1)(cell) ∩ cell' on the q_n x s_n grid.

    h = h2 h1.  Every measure must lie within relative deviation 1/2^(n+2)
    of (1/(q_n s_n))^2.  Also checks that at stripe resolution every
    intersection is 0 or (1/s_n^2)(1/(2^(n+2) q_n^2)).
    """
    if not validate_R4(bt):
        raise PrereqViolated("b-tuples fail the adjacent pair condition")
    q, k, C = params.q[n], params.k[n], params.C[n]
    S, sn = bt.s_next, bt.s_n
    D = 2 ** (n + 2) * q
    h = build_h1(n, params, S).then(build_h2(n, bt, params))
    f = h.inverse().then(stage_rotation(n, params, S)).then(h)
    cells = np.arange(k * q * S, dtype=np.int64)
    img = f.image
    hb = S // sn

    def coarse(x):
        return (x // S // k) * sn + (x % S) // hb

    nc = q * sn
    counts = np.bincount(coarse(cells) * nc + coarse(img), minlength=nc * nc).reshape(nc, nc)
    total = k * q * S
    target = Fraction(1, (q * sn) ** 2)
    bound = Fraction(1, 2 ** (n + 2)) * target
    table = {}
    worst = Fraction(0)
    for a in range(nc):
        for b in range(nc):
            lam = Fraction(int(counts[a, b]), total)
            table[(a // sn, a % sn, b // sn, b % sn)] = lam
            worst = max(worst, abs(lam - target))
    row_ok = all(sum(Fraction(int(c), total) for c in counts[a]) == Fraction(1, q * sn)
                 for a in range(nc))

    # stripe-level structure
    def stripe(x):
        return (x // S // C) * sn + (x % S) // hb

    ns = D * q * sn
    key = stripe(cells).astype(np.int64) * ns + stripe(img)
    uniq, cnt = np.unique(key, return_counts=True)
    unit = Fraction(1, sn * sn) * Fraction(1, 2 ** (n + 2) * q * q)
    stripe_ok = all(Fraction(int(c), total) == unit for c in cnt)
    return {
        "measures": table,
        "target": target,
        "max_deviation": worst,
        "bound": bound,
        "ok": worst <= bound and row_ok and stripe_ok,
        "rows_conserve": row_ok,
        "stripe_structure": stripe_ok,
        "nonzero_stripe_pairs": int(len(uniq)),
    }


# -- orderings and names ------------------------------------------------------------

def dynamical_ordering(p: int, q: int) -> list:
    """Geometric indices of I^0, R I^0, R^2 I^0, ... for rotation by p/q."""
    if math.gcd(p, q) != 1:
        raise NotCoprime(f"gcd({p}, {q}) != 1")
    return [t * p % q for t in range(q)]


def omega(n: int, j: int, params: TwistParams) -> list:
    """Columns of the ordered set omega_j at resolution k_n q_n."""
    q, k, p = params.q[n], params.k[n], params.p[n]
    return [j + (t * p % q) * k for t in range(q)]


def raw_symbolic_name(n: int, params: TwistParams) -> list:
    """Column (at resolution k_n q_n) visited by h1 R^m (J) for m < q_(n+1)."""
    q, l = params.q[n], params.l[n]
    Q, P = params.q[n + 1], params.p[n + 1]
    cols = h1_columns(n, params)
    return [int(cols[(m * P % Q) // (l * q)]) for m in range(Q)]


def derive_symbolic_name(n: int, params: TwistParams) -> HWord:
    """The name of J = [0, 1/q_(n+1)) with spacer labels.

    The orbit is read in consecutive segments of l_n q_n steps.  Within a
    segment the visited columns all lie in one omega_j; if the first one is
    the d-th element of omega_j, the first q_n - d steps are labelled b,
    the next (l_n - 1) q_n steps run through omega_j in order, and the last
    d steps are labelled e.  Anything else raises.
    """
    q, k, l, p = params.q[n], params.k[n], params.l[n], params.p[n]
    inv = j_table(p, q)[1] if q > 1 else 0
    raw = raw_symbolic_name(n, params)
    seg = l * q
    out = []
    for start in range(0, len(raw), seg):
        block = raw[start:start + seg]
        j = block[0] % k
        pos = [(inv * (c // k)) % q for c in block]
        if any(c % k != j for c in block) or any(
                pos[t] != (pos[0] + t) % q for t in range(seg)):
            raise PrereqViolated(f"segment at step {start} is not an omega traversal")
        d = pos[0]
        out.extend([B] * ((q - d) if d else q))
        out.extend(block[(q - d) if d else q: seg - d])
        out.extend([E] * d)
    return from_seq(out)


def omega_blocks(n: int, params: TwistParams) -> list:
    return [from_seq(omega(n, j, params)) for j in range(params.k[n])]


def name_matches_twist(n: int, params: TwistParams) -> bool:
    name = flatten(derive_symbolic_name(n, params))
    return name == flatten(twist_op(n, omega_blocks(n, params), params))


def _check_tower_prereqs(bt: BTuples, prior_names):
    if len(prior_names) != bt.s_n:
        raise PrereqViolated(f"need {bt.s_n} prior names, got {len(prior_names)}")
    if not validate_R2(bt):
        raise PrereqViolated("b-tuples fail (R2)")


def tower_name(n: int, bt: BTuples, prior_names: Sequence, s_star: int,
               params: TwistParams) -> HWord:
    """Name of tower s* at stage n+1: the twisting operator applied to the
    n-words w_j = u_(b(j div C, j mod C, s*)) selected by h2."""
    _check_tower_prereqs(bt, prior_names)
    C = params.C[n]
    blocks = [prior_names[int(bt.table[j // C, j % C, s_star])] for j in range(params.k[n])]
    return twist_op(n, blocks, params)


def simulate_tower_name(n: int, bt: BTuples, prior_names: Sequence, s_star: int,
                        params: TwistParams) -> list:
    """The same name read off the orbit of the tower base.

    Step m visits fine cell (m p_(n+1) mod q_(n+1), s*); h1 then h2 carry
    it into fundamental domain d and band t, which contributes symbol
    number p_n^(-1) d mod q_n of the prior name u_t.  Spacer steps come
    from :func:`derive_symbolic_name`.
    """
    _check_tower_prereqs(bt, prior_names)
    q, k, l, S = params.q[n], params.k[n], params.l[n], bt.s_next
    Q, P = params.q[n + 1], params.p[n + 1]
    inv = j_table(params.p[n], q)[1] if q > 1 else 0
    h = build_h1(n, params, S).then(build_h2(n, bt, params))
    labels = flatten(derive_symbolic_name(n, params))
    names = [flatten(u) for u in prior_names]
    hb = S // bt.s_n
    out = []
    for m, lab in enumerate(labels):
        if lab in (B, E):
            out.append(lab)
            continue
        col = (m * P % Q) // (l * q)
        cell = h(col * S + s_star)
        dom, level = (cell // S) // k, cell % S
        out.append(names[level // hb][(inv * dom) % q])
    return out
