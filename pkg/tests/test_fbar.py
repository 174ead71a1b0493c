import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from twistabc.errors import EmptyInputs, NotASubdeletion
from twistabc.fbar import (best_match, check_deletion_bound, fbar, is_match, lcs_length,
                           lcs_length_many, lcs_table)

seqs = st.lists(st.sampled_from("abc"), max_size=12)


def brute_lcs(a, b):
    """Largest index set of a whose symbols form a subsequence of b."""
    for r in range(len(a), -1, -1):
        for idx in itertools.combinations(range(len(a)), r):
            it = iter(b)
            if all(any(a[i] == y for y in it) for i in idx):
                return r
    return 0


@given(seqs, seqs)
def test_lcs_matches_brute_force(a, b):
    n = lcs_length(a, b)
    assert n == brute_lcs(a, b) == lcs_table(a, b)[-1][-1]
    pairs = best_match(a, b)
    assert len(pairs) == n and is_match(a, b, pairs)


@given(seqs, seqs)
def test_fbar_range_and_symmetry(a, b):
    if not a and not b:
        return
    v = fbar(a, b).value
    assert 0 <= v <= 1
    assert v == fbar(b, a).value
    if a:
        assert fbar(a, a).value == 0


@given(st.lists(st.sampled_from("ab"), min_size=1, max_size=30), st.lists(seqs, max_size=8))
def test_batch_kernel(a, bs):
    a = a[:62]
    assert list(lcs_length_many(a, bs)) == [lcs_length(a, b) for b in bs]


def test_examples():
    assert fbar("abc", "abc").value == 0
    assert fbar("aaa", "bbb").value == 1
    assert fbar("abcab", "bacb").value == Fraction(1, 3)
    with pytest.raises(EmptyInputs):
        fbar("", "")


def test_deletion_bound_guards():
    assert check_deletion_bound("abca", "bcab", "bca", "bcab", Fraction(1, 4))["holds"]
    with pytest.raises(NotASubdeletion):
        check_deletion_bound("abc", "abc", "cb", "abc", Fraction(1, 2))
    with pytest.raises(NotASubdeletion):
        check_deletion_bound("abcd", "abcd", "a", "abcd", Fraction(1, 8))
