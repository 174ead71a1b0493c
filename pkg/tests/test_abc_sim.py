from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistabc import abc_sim
from twistabc.abc_sim import (BTuples, Grid, GridPermutation, a_n, balanced_btuples, build_h1,
                              commutes_with, dynamical_ordering, rotation, stage_rotation,
                              validate_R2, validate_R3, validate_R4)
from twistabc.errors import IndexOutOfRange, NotDivisible, PrereqViolated
from twistabc.twist import derive_params

P = derive_params((1, 1), (2, 2))


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(12)), st.permutations(range(12)))
def test_permutation_algebra(a, b):
    g = Grid(4, 3)
    f, h = GridPermutation(g, a), GridPermutation(g, b)
    assert f.then(f.inverse()) == GridPermutation.identity(g)
    assert (f @ h)(5) == f(h(5))
    assert f.power(5) == f.then(f).then(f).then(f).then(f)


def test_rotation_on_grid():
    g = Grid(8, 2)
    r = rotation(Fraction(3, 4), g)
    assert [r(g.index(i, 1)) for i in range(8)] == [g.index((i + 6) % 8, 1) for i in range(8)]
    assert r.power(4) == GridPermutation.identity(g)
    with pytest.raises(NotDivisible):
        rotation(Fraction(1, 3), g)
    with pytest.raises(IndexOutOfRange):
        g.index(8, 0)


def test_h1_commutes_with_base_rotation():
    # h1 permutes columns inside the fundamental domain grid, so it commutes
    # with rotation by 1/q_n
    for n in (0, 1):
        h1 = build_h1(n, P)
        assert h1.is_bijection()
        assert commutes_with(h1, rotation(Fraction(1, P.q[n]), h1.grid))


def test_stage_rotation_shifts_by_C():
    for n in (0, 1):
        cols = stage_rotation(n, P).columns_image()
        assert list(cols) == [(i + P.C[n]) % len(cols) for i in range(len(cols))]


def test_a_n_values():
    assert [a_n(i, 0, 1) for i in range(4)] == [0, 0, 0, 0]
    assert [a_n(i, 1, 8) for i in range(4)] == [0, 1, 0, 2]
    with pytest.raises(IndexOutOfRange):
        a_n(64, 1, 8)


def test_histogram_level_zero_and_one():
    rep0 = abc_sim.displacement_histogram(0, P)
    assert rep0["histogram"] == {0: 4} and rep0["ok"]
    rep1 = abc_sim.displacement_histogram(1, P)
    assert rep1["same_for_every_domain"] and rep1["matches_expected"] and rep1["within_bound"]
    assert rep1["max_deviation"] == rep1["bound"]


def _pair_counts(bt, s, sn):
    out = {}
    for i in range(bt.D):
        a, b = bt.table[i, :, s], bt.table[(i + 1) % bt.D, :, s]
        for x, y in zip(a, b):
            out[(i, int(x), int(y))] = out.get((i, int(x), int(y)), 0) + 1
    return out


def test_balanced_btuples_by_counting():
    Q = derive_params((1, 4), (2, 2))
    bt = balanced_btuples(1, Q, 2, 2)
    assert validate_R2(bt) and validate_R3(bt) and validate_R4(bt)
    for s in range(bt.s_next):
        counts = _pair_counts(bt, s, 2)
        assert set(counts.values()) == {1}
        assert len(counts) == bt.D * 4
    with pytest.raises(NotDivisible):
        balanced_btuples(1, P, 2, 2)


def test_validators_reject():
    bad = BTuples(0, 2, np.zeros((4, 4, 1), dtype=np.int64))
    assert not validate_R2(bad) and not validate_R4(bad)
    dup = BTuples.from_rows(0, 2, [[[0], [1], [0], [1]]] * 2)
    assert validate_R2(dup) and not validate_R3(dup)
    with pytest.raises(ValueError):
        BTuples(0, 2, np.full((4, 1, 1), 2))


def test_dynamical_ordering_and_names():
    assert dynamical_ordering(3, 8) == [0, 3, 6, 1, 4, 7, 2, 5]
    for n in (0, 1):
        assert abc_sim.name_matches_twist(n, P)
    bt = BTuples.from_rows(0, 2, [[[0], [1], [0], [1]]])
    with pytest.raises(PrereqViolated):
        abc_sim.tower_name(0, bt, [abc_sim.from_seq([1])], 0, P)


def test_render_h1_rows():
    rows = abc_sim.render_h1(1, P).splitlines()
    assert rows[0] == "i2,a_n,next_stripe,displacement" and len(rows) == 65
