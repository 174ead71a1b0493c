import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from twistabc.errors import NotCoprime, NotTwistShaped, WrongBlockCount, WrongBlockLength
from twistabc.twist import (_psi, check_composed_rev_identity, composed_twist, derive_params,
                            j_index, j_table, map_letters, parse_subscales, psi_array, psi_table,
                            spacer_exponents, tilde_twist_op, twist_op)
from twistabc.words import flatten, from_seq, run

P = derive_params((1, 1), (2, 2))


def flat_twist(n, blocks, params, tilde=False):
    """The operator written out letter by letter from its definition."""
    q, C, l, p = params.q[n], params.C[n], params.l[n], params.p[n]
    j = [0] * q if q == 1 else [pow(p, -1, q) * i % q for i in range(q)]
    half = 2 ** (n + 1) * q

    def ps(i):
        if q == 1:
            return 0
        if i < half:
            return 0 if i % 2 == 0 else j[((i + 1) // 2) % q]
        return j[(i // 2 + 1) % q] if i % 2 == 0 else j[1]

    out = []
    for m in range(q):
        for i in range(2 * half):
            for c in range(C):
                if tilde:
                    a = (q - ps(i) - j[m]) % q
                    head, tail = ["e"] * a, ["b"] * (q - a)
                else:
                    z = (ps(i) + j[m]) % q
                    head, tail = ["b"] * (q - z), ["e"] * z
                out += head + list(blocks[i * C + c]) * (l - 1) + tail
    return tuple(out)


def random_blocks(rng, n, params):
    return [tuple(rng.choice((1, 2, 3)) for _ in range(params.q[n])) for _ in range(params.k[n])]


def test_derived_numbers():
    assert P.k == (4, 64) and P.q == (1, 8, 8192) and P.p == (0, 1, 1025)
    Q = derive_params((1, 4), (2, 2))
    for n in range(2):
        assert Q.k[n] == 2 ** (n + 2) * Q.q[n] * Q.C[n]
        assert Q.q[n + 1] == Q.k[n] * Q.l[n] * Q.q[n] ** 2
        assert math.gcd(Q.p[n + 1], Q.q[n + 1]) == 1
    with pytest.raises(ValueError):
        derive_params((1,), (2, 2))
    with pytest.raises(ValueError):
        derive_params((0,), (2,))


@pytest.mark.parametrize("n,C", [(0, (1, 1)), (1, (1, 1)), (0, (3, 1)), (1, (2, 1))])
def test_operator_matches_letterwise_definition(n, C):
    params = derive_params(C, (2, 3))
    rng = random.Random(n * 10 + C[0])
    blocks = random_blocks(rng, n, params)
    for tilde in (False, True):
        op = tilde_twist_op if tilde else twist_op
        w = op(n, [from_seq(b) for b in blocks], params)
        assert flatten(w) == flat_twist(n, blocks, params, tilde)
        assert w.length == params.q[n + 1]


def test_large_window_path_agrees():
    # C_n > 64 uses map_letters over window slices
    params = derive_params((65,), (2,))
    rng = random.Random(0)
    blocks = random_blocks(rng, 0, params)
    assert flatten(twist_op(0, [from_seq(b) for b in blocks], params)) == flat_twist(0, blocks, params)


def test_preword_form():
    table = [from_seq([1]), from_seq([2])]
    pw = from_seq([0, 1, 1, 0])
    w = twist_op(0, (pw, table), P)
    assert flatten(w) == flat_twist(0, [(1,), (2,), (2,), (1,)], P)


def test_spacer_runs():
    for m in range(P.q[1]):
        for i in range(2 ** 3 * P.q[1]):
            lead, trail = spacer_exponents(1, m, i, P)
            assert lead + trail == P.q[1] and 0 <= trail < P.q[1]
            a, b = spacer_exponents(1, m, i, P, tilde=True)
            assert a + b == P.q[1] and 0 <= a < P.q[1]


def test_j_and_psi_tables():
    assert j_table(3, 7) == [i * 5 % 7 for i in range(7)]
    with pytest.raises(NotCoprime):
        j_index(2, 4, 1)
    for n in (0, 1):
        q = P.q[n]
        jt = j_table(P.p[n], q)
        assert list(psi_array(n, q, jt)) == psi_table(n, P) == [_psi(i, n, q, jt) for i in range(2 ** (n + 2) * q)]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(0, 1), st.data())
def test_psi_reflection(q, n, data):
    p = data.draw(st.integers(1, q).filter(lambda x: math.gcd(x, q) == 1))
    jt = j_table(p, q)
    size = 2 ** (n + 2) * q
    for i in range(size):
        assert (_psi(size - 1 - i, n, q, jt) - (jt[1 % q] - _psi(i, n, q, jt))) % q == 0


def test_composed_reverse_identity():
    rng = random.Random(5)
    blocks = [from_seq(b) for b in random_blocks(rng, 0, P) for _ in range(P.k[1])][: P.k[0] * P.k[1]]
    assert check_composed_rev_identity(0, 2, blocks, P)
    w = composed_twist(0, 2, blocks, P)
    assert w.length == P.q[2]


def test_block_errors():
    with pytest.raises(WrongBlockCount):
        twist_op(0, [from_seq([1])] * 3, P)
    with pytest.raises(WrongBlockLength):
        twist_op(1, [from_seq([1])] * 64, P)


def test_parse_subscales_round_trip():
    rng = random.Random(9)
    blocks = [from_seq(b) for b in random_blocks(rng, 1, P)]
    w = twist_op(1, blocks, P)
    tree = parse_subscales(w, 1, P)
    assert tree.length == w.length
    assert [o.block for t in tree.two for o in t] == list(range(64)) * 8
    flat = flatten(w)
    covered = sum(b - a for a, b in tree.boundary_positions())
    assert covered == tree.boundary_size
    assert all(flat[x] in "be" for a, b in tree.boundary_positions() for x in range(a, b))
    with pytest.raises(NotTwistShaped):
        parse_subscales(from_seq([1] * P.q[2]), 1, P)


def test_map_letters():
    w = from_seq([1, 2, 1])
    assert flatten(map_letters(w, lambda x: run("b", x))) == ("b",) * 4
