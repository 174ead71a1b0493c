import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from twistabc import reduction
from twistabc.errors import (ActionUndefined, LevelBeyondPrefix, LevelTooLow, SpecViolation,
                             TooLarge)
from twistabc.reduction import Build, MiniatureConfig
from twistabc.trees import TreePrefix
from twistabc.words import flatten


def test_config_validation():
    with pytest.raises(ValueError):
        MiniatureConfig(sigma=3)
    with pytest.raises(ValueError):
        MiniatureConfig(l=1)
    assert MiniatureConfig().digit == 16


def test_level_sizes(mini_build):
    assert [lvl.count for lvl in mini_build.levels] == [4, 256, 4096]
    assert mini_build.levels[1].k_prev == 36 and mini_build.levels[2].k_prev == 2304
    assert mini_build.C == [9, 4] and mini_build.q(2) == 23887872


def test_build_guards(branch_prefix):
    with pytest.raises(LevelBeyondPrefix):
        Build(branch_prefix, 4)
    with pytest.raises(TooLarge):
        Build(branch_prefix, 1, mode="strict")
    with pytest.raises(TooLarge):
        Build(branch_prefix, 2, MiniatureConfig(max_cells=1000))


def test_window_mask():
    m = reduction.window_mask(36, 3, 1)
    assert m.sum() == 36 - 2 * 6
    with pytest.raises(SpecViolation):
        reduction.window_mask(10, 3, 1)


def test_tampered_levels_name_the_clause(mini_build, branch_prefix):
    lvl = mini_build.levels[1]
    dropped = dataclasses.replace(lvl, blocks=lvl.blocks[:-1])
    levels = [mini_build.levels[0], dropped]
    with pytest.raises(SpecViolation, match="E1"):
        reduction.verify_specs(levels, branch_prefix, 1, raise_on_fail=True)
    rows = lvl.blocks.copy()
    rows[0, 0] = rows[0, 1] if rows[0, 0] != rows[0, 1] else (rows[0, 0] + 1) % 4
    rep = reduction.verify_specs([mini_build.levels[0], dataclasses.replace(lvl, blocks=rows)],
                                 branch_prefix, 1)
    assert not rep["ok"] and not rep["E2"]["ok"]


def test_shift_hits_against_flat_scan():
    rng = np.random.default_rng(3)
    rows = rng.integers(0, 3, size=(12, 8))
    rows[5, 2:6] = rows[7, :4]  # plant one shifted prefix
    fast = set(reduction.shifted_prefix_hits(rows, 4))
    flat = {(w, i, o) for w, i, L, o in reduction.e3_flat(rows.tolist()) if L == 4}
    assert fast == flat and (5, 2, 7) in fast


def test_e3_hash_matches_flat_on_level_one(mini_build):
    rows = mini_build.levels[1].blocks
    assert reduction.shifted_prefix_hits(rows, rows.shape[1] // 2) == []


def test_serialization_round_trip(mini_build):
    files = reduction.serialize_build(mini_build)
    for n in (1, 2):
        head, rows = reduction.load_level_blocks(files[f"level{n}.odometer.txt"])
        assert int(head["count"]) == mini_build.levels[n].count
        assert np.array_equal(rows, mini_build.levels[n].blocks)
    assert "form=preword" in files["level2.twisted.txt"].splitlines()[0]
    assert reduction.load_level_blocks(files["level0.odometer.txt"])[1] is None


def test_twisted_words(mini_build):
    w = mini_build.twisted(1, 3)
    assert w.length == mini_build.q(1)
    assert set(flatten(w)) <= {1, 2, 3, 4, "b", "e"}


def test_propagation(mini_build):
    assert reduction.propagate(mini_build, 1)["ok"]
    rep = reduction.propagate(mini_build, 2, sample=[0])
    assert rep["ok"] and rep["checked"] == 1


def test_class_words(mini_build):
    with pytest.raises(LevelTooLow):
        reduction.class_sequences(mini_build, 2, 1)
    with pytest.raises(ActionUndefined):
        reduction.class_sequences(mini_build, 3, 2)
    m, seqs = reduction.class_sequences(mini_build, 1, 2)
    assert m == 1 and seqs.shape == (16, 2304)
    w = reduction.class_word(mini_build, 1, 2, seqs[0])
    assert w.length == mini_build.q(2)
    assert reduction.factor_project(mini_build, 1, 2, 0).fingerprint() == w.fingerprint()


def test_generator_errors(mini_build):
    with pytest.raises(ActionUndefined):
        mini_build.levels[1].generator_perm(1, (1,))
    with pytest.raises(ActionUndefined):
        mini_build.levels[1].classes(5)


def test_nu_s(mini_build):
    v = reduction.nu_s(mini_build, 1, 1)
    q, Q = mini_build.q(1), mini_build.levels[1].n_classes(1)
    # tail sum over l_1 = 2 only, the last level built
    assert v == Fraction(1, q * Q) * (1 - Fraction(1, 2))
    assert reduction.nu_bad_bound(5, [2, 4], 1) == Fraction(1, 5) + Fraction(3, 4)


def test_ledger_and_cascade():
    prefix = TreePrefix.full(5)
    led = reduction.strict_ledger(prefix, 4)
    casc = reduction.bound_cascade(led, prefix, 4)
    assert casc.ok
    betas = [casc.beta[n] for n in sorted(casc.beta)]
    assert betas == sorted(betas, reverse=True)
    assert all(r["holds"] for r in reduction.check_ledger(led, prefix, 4))
