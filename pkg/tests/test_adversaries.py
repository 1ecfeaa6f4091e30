import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import dpope.adversaries as adv
from dpope.accounting import ParameterError, UsageError


def test_loss_vector_range_checked():
    adv.LossVector(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ParameterError):
        adv.LossVector(np.array([1.5]))
    with pytest.raises(ParameterError):
        adv.LossVector(np.array([-0.1]))


def test_oblivious_zero_matrix():
    spec = adv.zeros(3, 5)
    for t in range(1, 6):
        assert np.array_equal(
            adv.next_loss(spec, t, [0] * (t - 1)).values, np.zeros(3)
        )


def test_next_loss_history_length_checked():
    spec = adv.zeros(2, 4)
    with pytest.raises(UsageError):
        adv.next_loss(spec, 2, [])
    with pytest.raises(UsageError):
        adv.next_loss(spec, 5, [0] * 4)


def test_stochastic_bernoulli_mean():
    spec = adv.stochastic_bernoulli(np.full(4, 0.5), 10 ** 5, seed=3)
    m = adv.materialize(spec)
    assert np.all(np.abs(m.mean(axis=0) - 0.5) < 0.005)
    assert set(np.unique(m)) <= {0.0, 1.0}


def test_stochastic_replay_and_run_independence():
    spec = adv.stochastic_uniform(3, 50, seed=9)
    a = adv.materialize(spec, run_index=0)
    b = adv.materialize(spec, run_index=0)
    c = adv.materialize(spec, run_index=1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # row t is a pure function of (seed, run, t), matching next_loss
    assert np.array_equal(adv.next_loss(spec, 7, [0] * 6).values, a[6])


def test_one_low_mean_descriptor():
    spec = adv.stochastic_one_low_mean(8, 2 ** 12, j=2, mu_j=0.1, mu_rest=0.5, seed=1)
    m = adv.materialize(spec)
    means = m.mean(axis=0)
    assert means[2] < 0.15
    assert np.all(means[np.arange(8) != 2] > 0.45)
    with pytest.raises(ParameterError):
        adv.stochastic_one_low_mean(4, 10, j=0, mu_j=0.5, mu_rest=0.4)


def test_adaptive_punish_last():
    spec = adv.adaptive("punish-last", 4, 10)
    row = adv.next_loss(spec, 3, [0, 2]).values
    assert row[2] == 1.0 and row.sum() == 1.0
    assert adv.next_loss(spec, 1, []).values.sum() == 0.0


def test_adaptive_punish_frequent():
    spec = adv.adaptive("punish-frequent", 4, 10)
    row = adv.next_loss(spec, 5, [1, 3, 1, 0]).values
    assert row[1] == 1.0 and row.sum() == 1.0


@settings(max_examples=40)
@given(
    t=st.integers(1, 8),
    h1=st.lists(st.integers(0, 2), min_size=7, max_size=7),
    h2=st.lists(st.integers(0, 2), min_size=7, max_size=7),
)
def test_oblivious_specs_history_independent(t, h1, h2):
    rng = np.random.default_rng(5)
    spec = adv.oblivious(rng.random((8, 3)))
    a = adv.next_loss(spec, t, h1[: t - 1])
    b = adv.next_loss(spec, t, h2[: t - 1])
    assert np.array_equal(a.values, b.values)


def test_hide_expert_construction():
    spec = adv.realizable_hide_expert(2, 1.0, 10, j=1)
    m = spec.payload["matrix"]
    assert adv.hide_expert_tail_rounds(2, 1.0) == 1
    assert np.all(m[:9] == 0)
    assert np.array_equal(m[9], [1.0, 0.0])
    # best expert has zero loss, all others exactly k
    assert m.sum(axis=0)[1] == 0.0
    assert m.sum(axis=0)[0] == 1.0


def test_hide_expert_column_sums_general():
    d, eps, T, j = 5, 0.4, 50, 3
    spec = adv.realizable_hide_expert(d, eps, T, j=j)
    k = adv.hide_expert_tail_rounds(d, eps)
    sums = spec.payload["matrix"].sum(axis=0)
    assert sums[j] == 0.0
    assert all(sums[x] == k for x in range(d) if x != j)


def test_hide_expert_tail_formula():
    assert adv.hide_expert_tail_rounds(1024, 0.1) == 35  # ceil(ln 1024 / 0.2)


def test_hide_expert_rejects_short_horizon():
    with pytest.raises(ParameterError):
        adv.realizable_hide_expert(1024, 0.1, 10, j=0)


def test_drifting_good_set_invariants():
    spec = adv.drifting_good_set(16, 400, seed=2)
    m = spec.payload["matrix"]
    col_sums = m.sum(axis=0)
    assert (col_sums == 0).sum() == 1  # exactly one zero-loss expert
    # epochs: distinct rounds where a previously-zero column starts losing
    starts = {int(np.argmax(m[:, j] > 0)) for j in range(16) if col_sums[j] > 0}
    assert len(starts) >= math.ceil(math.log2(16))
    # once eliminated, loss stays 1
    for j in range(16):
        if col_sums[j] > 0:
            s = int(np.argmax(m[:, j] > 0))
            assert np.all(m[s:, j] == 1.0)


def test_drifting_no_eliminations_all_zero():
    spec = adv.drifting_good_set(2, 20, eliminations_per_epoch=0, seed=0)
    assert spec.payload["matrix"].sum() == 0.0


def test_drifting_deterministic_golden():
    m = adv.drifting_good_set(64, 5000, seed=31).payload["matrix"]
    m2 = adv.drifting_good_set(64, 5000, seed=31).payload["matrix"]
    assert np.array_equal(m, m2)
    digest = hashlib.sha256(np.ascontiguousarray(m).tobytes()).hexdigest()
    assert digest == GOLDEN_DRIFTING_SHA256


GOLDEN_DRIFTING_SHA256 = "77c6247f9ef1ab6af2bba8d2edff23261d6e05354ddd509ddebf9684ff42c1e9"


def test_load_loss_matrix_roundtrip(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("0,1\n1,0\n", encoding="utf-8")
    spec = adv.load_loss_matrix(path)
    assert spec.horizon_T == 2 and spec.d == 2
    assert np.array_equal(spec.payload["matrix"], [[0.0, 1.0], [1.0, 0.0]])


def test_load_loss_matrix_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1,1.5\n", encoding="utf-8")
    with pytest.raises(ParameterError, match="row 2 column 2"):
        adv.load_loss_matrix(bad)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("0,1\n1\n", encoding="utf-8")
    with pytest.raises(ParameterError, match="row 2"):
        adv.load_loss_matrix(ragged)
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ParameterError, match="empty"):
        adv.load_loss_matrix(empty)
    junk = tmp_path / "junk.csv"
    junk.write_text("0,x\n", encoding="utf-8")
    with pytest.raises(ParameterError, match="not a decimal"):
        adv.load_loss_matrix(junk)
