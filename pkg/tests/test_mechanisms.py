import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dpope.accounting import ParameterError, PrivacyParams, UsageError
from dpope.mechanisms import (
    above_threshold_init,
    above_threshold_query,
    binary_tree_add,
    binary_tree_init,
    exponential_mechanism,
    exponential_mechanism_log_probs,
    sample_bernoulli,
    sample_laplace,
    svt_accuracy_alpha,
    tree_levels,
    tree_nodes_combined,
)
from dpope.rng import run_stream


# --------------------------------------------------------------------- samplers


def test_bernoulli_degenerate():
    rng = run_stream(1)
    assert all(sample_bernoulli(0.0, rng) == 0 for _ in range(200))
    assert all(sample_bernoulli(1.0, rng) == 1 for _ in range(200))
    with pytest.raises(ParameterError):
        sample_bernoulli(1.5, rng)


def test_bernoulli_mean():
    rng = run_stream(2)
    draws = np.array([sample_bernoulli(0.45, rng) for _ in range(10 ** 6)])
    assert abs(draws.mean() - 0.45) < 0.002  # 3-sigma band ~0.0015


def test_laplace_moments():
    rng = run_stream(3)
    x = sample_laplace(1.0, rng, size=10 ** 6)
    assert x.var() == pytest.approx(2.0, rel=0.02)  # Var Lap(b) = 2 b^2
    assert abs(np.median(x)) < 0.01
    with pytest.raises(ParameterError):
        sample_laplace(0.0, rng)


def test_laplace_tail():
    # P(|X| > b ln 100) = 1/100 exactly
    rng = run_stream(4)
    x = sample_laplace(5.0, rng, size=10 ** 5)
    frac = np.mean(np.abs(x) > 5.0 * math.log(100.0))
    assert abs(frac - 0.01) < 0.003


def test_laplace_scalar_matches_vector_transform():
    assert isinstance(sample_laplace(2.0, run_stream(5)), float)


# --------------------------------------------------- exponential mechanism


def test_exponential_mechanism_uniform_chi2():
    rng = run_stream(6)
    counts = np.zeros(3)
    for _ in range(10 ** 5):
        counts[exponential_mechanism([0.0, 0.0, 0.0], 3.7, rng)] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


def test_exponential_mechanism_two_to_one_ratio():
    # scores (0, 2 ln2 / eta) give probabilities (2/3, 1/3)
    eta = 0.8
    scores = [0.0, 2.0 * math.log(2.0) / eta]
    rng = run_stream(7)
    hits = sum(exponential_mechanism(scores, eta, rng) == 0 for _ in range(10 ** 5))
    assert abs(hits / 10 ** 5 - 2.0 / 3.0) < 0.01


def test_exponential_mechanism_nonuniform_chi2():
    # frequencies must track softmax(-eta s / 2) for arbitrary finite scores
    eta, scores = 1.3, np.array([0.0, 1.0, 2.5, 0.4])
    probs = np.exp(exponential_mechanism_log_probs(scores, eta))
    rng = run_stream(66)
    counts = np.zeros(4)
    for _ in range(10 ** 5):
        counts[exponential_mechanism(scores, eta, rng)] += 1
    assert stats.chisquare(counts, probs * 10 ** 5).pvalue > 1e-3


def test_exponential_mechanism_dominant_entry():
    rng = run_stream(8)
    scores = np.array([0.0, -1e6, 3.0])
    assert all(
        exponential_mechanism(scores, 1.0, rng) == 1 for _ in range(10 ** 4)
    )


def test_exponential_mechanism_validation():
    rng = run_stream(9)
    with pytest.raises(ParameterError):
        exponential_mechanism([], 1.0, rng)
    with pytest.raises(ParameterError):
        exponential_mechanism([np.inf, 0.0], 1.0, rng)
    with pytest.raises(ParameterError):
        exponential_mechanism([0.0], 0.0, rng)


@settings(max_examples=60)
@given(
    scores=st.lists(st.integers(0, 10), min_size=1, max_size=6),
    eta=st.floats(0.1, 2.0),
    flips=st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=6),
)
def test_exponential_mechanism_exact_privacy(scores, eta, flips):
    # 1-sensitive integer scores: log-prob ratio bounded by eta, no sampling
    s = np.array(scores, dtype=float)
    s2 = s + np.resize(flips, s.shape)
    lp, lp2 = (
        exponential_mechanism_log_probs(v, eta) for v in (s, s2)
    )
    assert np.max(np.abs(lp - lp2)) <= eta * (1.0 + 1e-9)


# --------------------------------------------------------- AboveThreshold


def test_above_threshold_noiseless_sequence():
    st8 = above_threshold_init(
        PrivacyParams(1.0), threshold_L=5.0, horizon_T=10, beta=0.05,
        noise_override="zero",
    )
    assert st8.noisy_threshold == 5.0
    assert above_threshold_query(st8, 1.0) is False
    assert above_threshold_query(st8, 3.0) is False
    assert above_threshold_query(st8, 6.0) is True
    with pytest.raises(UsageError):
        above_threshold_query(st8, 0.0)


def test_above_threshold_noiseless_never_halts_below():
    st8 = above_threshold_init(
        PrivacyParams(0.7), 5.0, 20, 0.05, noise_override="zero"
    )
    assert not any(above_threshold_query(st8, 4.9) for _ in range(20))
    with pytest.raises(UsageError):  # horizon exhausted
        above_threshold_query(st8, 0.0)


def test_above_threshold_requires_pure_dp():
    with pytest.raises(ParameterError):
        above_threshold_init(PrivacyParams(1.0, 1e-6), 0.0, 5, 0.1, run_stream(1))


def test_above_threshold_threshold_noise_scale():
    # noisy threshold = L + Lap(2/eps); std = (2/eps) sqrt(2)
    rng = run_stream(10)
    eps, L = 0.5, 10.0
    draws = np.array(
        [
            above_threshold_init(PrivacyParams(eps), L, 5, 0.1, rng).noisy_threshold
            for _ in range(10 ** 5)
        ]
    )
    assert draws.std() == pytest.approx((2.0 / eps) * math.sqrt(2.0), rel=0.02)
    assert draws.mean() == pytest.approx(L, abs=0.1)


def test_above_threshold_accuracy_false_halt():
    # all queries at L - alpha: halt anywhere has probability << beta
    eps, beta, T = 1.0, 0.05, 20
    alpha = svt_accuracy_alpha(eps, T, beta)
    rng = run_stream(11)
    false_halts = 0
    for _ in range(10 ** 4):
        st8 = above_threshold_init(PrivacyParams(eps), 10.0, T, beta, rng)
        if any(above_threshold_query(st8, 10.0 - alpha) for _ in range(T)):
            false_halts += 1
    slack = 3.0 * math.sqrt(beta * (1 - beta) / 10 ** 4)
    assert false_halts / 10 ** 4 <= beta + slack


def test_above_threshold_accuracy_missed_halt():
    eps, beta, T = 1.0, 0.05, 20
    alpha = svt_accuracy_alpha(eps, T, beta)
    rng = run_stream(12)
    missed = 0
    for _ in range(10 ** 4):
        st8 = above_threshold_init(PrivacyParams(eps), 10.0, T, beta, rng)
        if not any(above_threshold_query(st8, 10.0 + alpha) for _ in range(T)):
            missed += 1
    slack = 3.0 * math.sqrt(beta * (1 - beta) / 10 ** 4)
    assert missed / 10 ** 4 <= beta + slack


def test_above_threshold_big_query_halts():
    rng = run_stream(13)
    halts = sum(
        above_threshold_query(
            above_threshold_init(PrivacyParams(1.0), 0.0, 1, 0.05, rng), 100.0
        )
        for _ in range(10 ** 4)
    )
    assert halts / 10 ** 4 >= 1.0 - 1e-3


# --------------------------------------------------------- binary tree


def test_tree_levels():
    assert tree_levels(1) == 1
    assert tree_levels(8) == 4
    assert tree_levels(1000) == 11


def test_tree_laplace_scale_value():
    st8 = binary_tree_init(1000, 1, PrivacyParams(1.0), 1.0, run_stream(14))
    assert st8.mode == "laplace-scalar"
    assert st8.noise_scale == pytest.approx(11.0)


def test_tree_gaussian_sigma_value():
    st8 = binary_tree_init(1000, 4, PrivacyParams(1.0, 1e-6), 2.0, run_stream(15))
    assert st8.mode == "gaussian-vector"
    want = 2.0 * math.sqrt(11.0) * math.sqrt(2.0 * math.log(1.25e6))
    assert st8.noise_scale == pytest.approx(want, rel=1e-12)


def test_tree_noiseless_prefix_exact():
    st8 = binary_tree_init(4, 1, PrivacyParams(1.0), 0.0)
    outs = [binary_tree_add(st8, 1.0) for _ in range(4)]
    assert outs == [1.0, 2.0, 3.0, 4.0]


def test_tree_noiseless_vector_stream():
    st8 = binary_tree_init(3, 2, PrivacyParams(1.0), 0.0)
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert np.array_equal(binary_tree_add(st8, e1), [1.0, 0.0])
    assert np.array_equal(binary_tree_add(st8, e2), [1.0, 1.0])
    assert np.array_equal(binary_tree_add(st8, e1), [2.0, 1.0])


def test_tree_noiseless_random_stream_matches_cumsum():
    rng = np.random.default_rng(0)
    vals = rng.random(64)
    st8 = binary_tree_init(64, 1, PrivacyParams(1.0), 0.0)
    outs = np.array([binary_tree_add(st8, v) for v in vals])
    assert np.allclose(outs, np.cumsum(vals), rtol=1e-12, atol=0)


def test_tree_node_count_structural():
    # prefix t combines popcount(t) nodes, never more than levels
    for T in (1, 7, 64, 100):
        levels = tree_levels(T)
        for t in range(1, T + 1):
            assert tree_nodes_combined(t) == bin(t).count("1")
            assert tree_nodes_combined(t) <= levels


def test_tree_horizon_and_clipping():
    st8 = binary_tree_init(2, 1, PrivacyParams(1.0), 1.0, run_stream(16))
    binary_tree_add(st8, 0.5)
    binary_tree_add(st8, 3.0)  # above sensitivity: clipped
    assert st8.clipped
    with pytest.raises(UsageError):
        binary_tree_add(st8, 0.1)


def test_tree_noisy_error_bound():
    # T=256, eps=1, delta=0, stream of 0.5: union bound at beta=0.05
    T, eps, beta = 256, 1.0, 0.05
    levels = tree_levels(T)
    bound = levels ** 2 * math.log(2 * T / beta) / eps
    hits = 0
    runs = 10 ** 3
    for i in range(runs):
        st8 = binary_tree_init(T, 1, PrivacyParams(eps), 1.0, run_stream(17 + i))
        errs = [
            abs(binary_tree_add(st8, 0.5) - 0.5 * (t + 1)) for t in range(T)
        ]
        if max(errs) <= bound:
            hits += 1
    assert hits / runs >= 1.0 - beta


def test_tree_error_is_sum_of_node_noises():
    # noisy mode: c_t minus the exact prefix combines popcount(t) node noises;
    # with the noise sequence injected as zero it must be exact.
    st8 = binary_tree_init(16, 1, PrivacyParams(1.0), 0.0)
    for t in range(1, 17):
        assert binary_tree_add(st8, 1.0) == t
        assert tree_nodes_combined(t) <= st8.levels
