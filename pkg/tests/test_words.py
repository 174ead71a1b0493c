from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from twistabc.errors import Ambiguous, LengthMismatch, NoParse
from twistabc.words import (B, E, Cat, Pow, Run, WordCollection, aligned_pair_counts, cat,
                            check_strongly_uniform, check_unique_readability, dump_collection,
                            flatten, from_seq, from_sexpr, letter, load_collection, parse_into_level,
                            power, ref_counts, rev, slice_word, symbol_at, to_sexpr, words_equal)

symbols = st.sampled_from([1, 2, 3, B, E])
flat_words = st.lists(symbols, min_size=1, max_size=40)


@st.composite
def hwords(draw, depth=3):
    """Random compressed words, with their flat expansion."""
    if depth == 0 or draw(st.booleans()):
        seq = draw(flat_words)
        return from_seq(seq), tuple(seq)
    kind = draw(st.sampled_from(["cat", "pow"]))
    if kind == "pow":
        w, f = draw(hwords(depth - 1))
        k = draw(st.integers(1, 4))
        return power(w, k), f * k
    parts = [draw(hwords(depth - 1)) for _ in range(draw(st.integers(1, 3)))]
    return cat(p for p, _ in parts), sum((f for _, f in parts), ())


@given(hwords())
def test_flatten_matches_construction(wf):
    w, f = wf
    assert flatten(w) == f
    assert w.length == len(f)
    assert dict(w.counts) == dict(Counter(f))


@given(hwords())
def test_rev_is_structural_reversal(wf):
    w, f = wf
    assert flatten(rev(w)) == f[::-1]
    assert flatten(rev(rev(w))) == f


@given(hwords(), st.data())
def test_slice_and_index(wf, data):
    w, f = wf
    a = data.draw(st.integers(0, len(f)))
    b = data.draw(st.integers(a, len(f)))
    assert flatten(slice_word(w, a, b)) == f[a:b]
    if f:
        i = data.draw(st.integers(0, len(f) - 1))
        assert symbol_at(w, i) == f[i]


@given(hwords(), hwords())
def test_fingerprint_and_equality(u, v):
    (wu, fu), (wv, fv) = u, v
    assert words_equal(wu, wv) == (fu == fv)
    if fu == fv:
        assert wu.fingerprint() == wv.fingerprint()
    assert words_equal(wu, from_seq(fu), cap=0)  # fingerprint route


@settings(max_examples=60)
@given(st.integers(1, 30), st.data())
def test_aligned_pairs_against_zip(n, data):
    a = data.draw(st.lists(symbols, min_size=n, max_size=n))
    b = data.draw(st.lists(symbols, min_size=n, max_size=n))
    wa = power(from_seq(a), 3)
    wb = cat(from_seq(b), from_seq(b), from_seq(b))
    assert aligned_pair_counts(wa, wb) == Counter(zip(a * 3, b * 3))


@given(hwords())
def test_sexpr_round_trip(wf):
    w, f = wf
    assert flatten(from_sexpr(to_sexpr(w))) == f


def test_collection_round_trip_and_lengths():
    coll = WordCollection(1, [from_seq([1, 2, B]), from_seq([2, 2, E])])
    back = load_collection(dump_collection(coll))
    assert [flatten(w) for w in back] == [flatten(w) for w in coll]
    with pytest.raises(LengthMismatch):
        WordCollection(1, [from_seq([1]), from_seq([1, 2])])


def test_ref_counts_do_not_descend():
    low = WordCollection(0, [from_seq([1, 2]), from_seq([2, 1])])
    r0, r1 = low.refs()
    w = cat(power(r0, 3), r1, power(cat(r0, r1), 2))
    assert ref_counts(w, 0) == Counter({(0, 0): 5, (0, 1): 3})


def test_unique_readability_brute_force():
    ok, _ = check_unique_readability([from_seq([1, 1, 2]), from_seq([1, 2, 2])])
    assert ok
    bad, where = check_unique_readability([from_seq([1, 2]), from_seq([2, 1])])
    assert not bad and where["offset"] == 1


def test_parse_into_level():
    words = [from_seq([1, 2]), from_seq([3, 3])]
    res = parse_into_level(from_seq([B, 1, 2, E, 3, 3, E]), words)
    assert res["blocks"] == [(1, 0), (4, 1)]
    assert res["spacer_fraction"] == pytest.approx(3 / 7)
    with pytest.raises(NoParse):
        parse_into_level(from_seq([1, 3]), words)
    with pytest.raises(Ambiguous):
        parse_into_level(from_seq([1, 1]), [from_seq([1]), from_seq([1, 1])])


def test_strong_uniformity():
    low = WordCollection(0, [from_seq([1]), from_seq([2])])
    r = low.refs()
    ok, c = check_strongly_uniform(low, [cat(r[0], r[1]), cat(r[1], r[0])])
    assert ok and c == 1
    ok, _ = check_strongly_uniform(low, [cat(r[0], r[0])])
    assert not ok


def test_run_node_shapes():
    assert isinstance(from_seq([1, 1, 1]), Run)
    assert isinstance(power(from_seq([1, 2]), 3), Pow)
    assert isinstance(cat(letter(1), letter(2)), Cat)
