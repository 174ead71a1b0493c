import itertools

import pytest
from hypothesis import given, settings, strategies as st

from twistabc.errors import LevelBeyondPrefix, NotClosed
from twistabc.trees import (M_of, TreePrefix, build_group, canonical_enumeration, index_of,
                            kernel_size, odd_parity_chain, rho, s_of, sigma)


def brute_enumeration(limit):
    """All sequences with length + sum <= limit, sorted by (length + sum, lex)."""
    out = []
    for length in range(limit + 1):
        for seq in itertools.product(range(limit + 1), repeat=length):
            if length + sum(seq) <= limit:
                out.append(seq)
    return sorted(out, key=lambda s: (len(s) + sum(s), s))


def test_enumeration_against_brute_force():
    brute = brute_enumeration(7)
    assert canonical_enumeration(len(brute) - 1) == brute
    assert [sigma(i) for i in range(len(brute))] == brute
    assert [index_of(v) for v in brute] == list(range(len(brute)))


@settings(deadline=None, max_examples=50)
@given(st.lists(st.integers(0, 2), max_size=4))
def test_initial_segments_come_first(v):
    v = tuple(v)
    assert all(index_of(v[:k]) < index_of(v) for k in range(len(v)))


def test_prefix_validation():
    with pytest.raises(NotClosed):
        TreePrefix([(0, 0)], 5)
    with pytest.raises(LevelBeyondPrefix):
        TreePrefix([(0,), (0, 0)], 1)
    p = TreePrefix.from_text("-\n0\n0 0\n1\n", 3)
    assert TreePrefix.from_text(p.to_text(), 3).nodes == p.nodes
    assert M_of(p, 2) == 2 and M_of(p, 3) is None
    assert [s_of(p, n) for n in range(4)] == [0, 1, 2, 2]


def test_groups_and_rho():
    p = TreePrefix.full(7)
    g2 = build_group(p, 2, 7)
    assert g2.generators == ((0, 0), (0, 1), (1, 0))
    assert g2.order == 8
    assert rho(2, 1, {(0, 0), (0, 1)}) == frozenset()
    assert rho(2, 1, {(0, 0), (1, 0)}) == {(0,), (1,)}
    # kernel size by enumerating the group
    brute = sum(1 for g in g2.elements() if not rho(2, 1, g))
    assert kernel_size(p, 2, 1, 7) == brute == 2
    chain = odd_parity_chain(p, 2)
    assert [rho(2, 1, chain[1])] == [chain[0]]
    assert odd_parity_chain(TreePrefix([(0,)], 1), 2) is None


def test_masks_round_trip():
    g = build_group(TreePrefix.full(7), 1, 7)
    for e in g.elements():
        assert g.from_mask(g.to_mask(e)) == e
