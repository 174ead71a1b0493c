import random
from collections import Counter

import pytest

from twistabc.errors import BConditionFailed, InvariantViolated, NotIntegral
from twistabc.substitution import (derive_subst_params, miniature_input, miniature_omega,
                                   pair_coverage, project, psi_phi_sequences, skew_diagonal,
                                   standard_actions, substitute, tuple_layout,
                                   verify_substitution)
from twistabc.words import flatten, from_seq, symbol_at


def test_actions_are_free_involutions():
    G, H = standard_actions(1, 0, 2, 1, (1, 1))
    for act in (G, H):
        assert act.is_free()
        for g in act.elements():
            assert all(act.act(g, act.act(g, x)) == x for x in range(act.size))


def test_skew_diagonal_by_hand():
    G, _ = standard_actions(1, 0, 2, 1, (1, 1))
    w = from_seq([0, 0, 1])
    # odd element: reverse, then act letterwise
    assert flatten(skew_diagonal(G, 1, w)) == tuple(G.act(1, x) for x in reversed((0, 0, 1)))
    assert flatten(skew_diagonal(G, 0, w)) == (0, 0, 1)


def test_psi_phi_sequences():
    psi, phi = psi_phi_sequences(2, 32)
    assert psi[:5] == (1, 2, 3, 0, 1) and phi[:5] == (0, 0, 0, 1, 1)
    with pytest.raises(NotIntegral):
        psi_phi_sequences(2, 6)
    assert pair_coverage(3)["ok"]


def test_layout_partitions_fine_classes():
    inp = miniature_input()
    layout = tuple_layout(inp)
    for A, tuples in enumerate(layout):
        cells = [c for t in tuples for c in t]
        assert sorted(cells) == list(range(A * inp.sub, (A + 1) * inp.sub))
        assert all(len(t) == inp.tuple_len for t in tuples)


def test_waivers_and_constraints():
    with pytest.raises(InvariantViolated, match="U1.floor"):
        derive_subst_params(miniature_input(R_tilde=3, waive=frozenset()))
    with pytest.raises(InvariantViolated):
        miniature_input(waive=frozenset({"no.such.waiver"}))
    with pytest.raises(InvariantViolated, match="DEven"):
        derive_subst_params(miniature_input(D=3))
    par = derive_subst_params(miniature_input(R_tilde=3))
    assert par.checks["U1.floor"] == (False, True)
    assert derive_subst_params(miniature_input()).checks["U1.floor"] == (True, False)
    assert par.k % (miniature_input().N ** 2) == 0


def test_bad_input_collection():
    inp = miniature_input()
    with pytest.raises(BConditionFailed):
        miniature_omega(inp, "+-")
    with pytest.raises(BConditionFailed):
        substitute(miniature_omega(inp)[:1], inp)


def test_miniature_step_parts_one_and_two():
    inp = miniature_input(M2=1)
    omega = miniature_omega(inp)
    res = substitute(omega, inp)
    rep = verify_substitution(res, omega, inp)
    assert rep["part1"] and rep["part2"] and rep["row_sums_consistent"]
    # projections recovered by an independent letterwise collapse
    rng = random.Random(8)
    for w in res.omega_prime[:2]:
        pw = project(inp, w)
        for x in (rng.randrange(w.length) for _ in range(200)):
            assert symbol_at(pw, x) == symbol_at(w, x) // inp.sub
    assert Counter(project(inp, w).fingerprint() for w in res.omega_prime).keys() \
        == {w.fingerprint() for w in omega}


def test_all_three_parts_hold_at_M2_3():
    # the segment pair counts equalize once M2 is large enough for the
    # pattern cycles to divide the segments
    inp = miniature_input(M2=3)
    omega = miniature_omega(inp)
    rep = verify_substitution(substitute(omega, inp), omega, inp)
    assert rep["ok"]
    lo, hi = rep["part3_range"]
    assert lo == hi == rep["part3_target"]
