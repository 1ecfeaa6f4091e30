import hashlib
import math

import numpy as np
import pytest

import dpope.adversaries as adv
import dpope.algorithms as alg
from dpope.accounting import ParameterError, PrivacyParams, compose_basic
from dpope.rng import run_stream


def _cfg(eta, p, K, eps=1.0, delta=0.0, B=1):
    return alg.SDConfig(
        eta=eta, p_switch=p, K_budget=K, params=PrivacyParams(eps, delta), batch_size=B
    )


# ------------------------------------------------------------- mw_update


def test_mw_update_example():
    state = alg.ExpertState(log_weights=np.zeros(2), current_expert=0)
    new = alg.mw_update(state, adv.LossVector(np.array([1.0, 0.0])), 0.5)
    probs = new.probabilities()
    assert probs == pytest.approx([1.0 / 3.0, 2.0 / 3.0], rel=1e-12)


def test_mw_update_zero_loss_no_change():
    state = alg.ExpertState(log_weights=np.array([0.3, -0.1]), current_expert=1)
    new = alg.mw_update(state, adv.LossVector(np.zeros(2)), 0.1)
    assert np.array_equal(new.log_weights, state.log_weights)


def test_mw_update_common_loss_cancels():
    state = alg.ExpertState(log_weights=np.array([0.0, 0.5, -0.2]), current_expert=0)
    new = alg.mw_update(state, adv.LossVector(np.ones(3)), 0.1)
    assert np.allclose(new.probabilities(), state.probabilities(), rtol=1e-12)


# ------------------------------------------------------------- sd_step


def test_sd_step_keep_probability(fixed_rng):
    # p=0.1, eta ~ 0.5, prev loss of held expert 1 -> keep prob 0.9*0.5 = 0.45
    # (config requires eta < 1/2 strictly, so sit just below the boundary)
    cfg = _cfg(eta=0.5 - 1e-12, p=0.1, K=10 ** 9, eps=10.0)
    loss = adv.LossVector(np.array([1.0, 0.0]))
    rng = run_stream(100)
    kept = 0
    n = 10 ** 5
    for _ in range(n):
        state = alg.ExpertState(log_weights=np.zeros(2), current_expert=0)
        new, resampled = alg.sd_step(state, cfg, loss, rng)
        kept += not resampled and new.current_expert == 0
    assert abs(kept / n - 0.45) < 0.005


def test_sd_step_zero_loss_keeps_at_one_minus_p(fixed_rng):
    cfg = _cfg(eta=0.3, p=0.2, K=10, eps=10.0)
    loss = adv.LossVector(np.zeros(2))
    # stage-1 uniform just below 1-p keeps; ratio stage is Ber(1) for zero loss
    state = alg.ExpertState(log_weights=np.zeros(2), current_expert=1)
    new, resampled = alg.sd_step(state, cfg, loss, fixed_rng([0.799, 0.999, 0.3]))
    assert not resampled and new.current_expert == 1
    new, resampled = alg.sd_step(state, cfg, loss, fixed_rng([0.801, 0.0, 0.3]))
    assert resampled


def test_sd_step_budget_freeze(fixed_rng):
    cfg = _cfg(eta=0.3, p=0.2, K=3, eps=10.0)
    loss = adv.LossVector(np.array([1.0, 0.0]))
    state = alg.ExpertState(log_weights=np.zeros(2), current_expert=0, switch_count=3)
    # force both Bernoulli stages to fail: without budget the expert persists
    new, resampled = alg.sd_step(state, cfg, loss, fixed_rng([0.999, 0.999, 0.99]))
    assert not resampled and new.current_expert == 0
    assert new.switch_count == 3


def test_sd_step_matches_kernel_game():
    rng_m = np.random.default_rng(17)
    T, d = 30, 4
    matrix = rng_m.random((T, d))
    spec = adv.oblivious(matrix)
    cfg = _cfg(eta=0.05, p=0.3, K=12, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(71, 0), 0)
    # replay step by step from the same stream
    rng = run_stream(71, 0)
    state = alg.initial_expert_state(d, rng)
    experts = [state.current_expert]
    for t in range(2, T + 1):
        state, _ = alg.sd_step(
            state, cfg, adv.LossVector(matrix[t - 2]), rng
        )
        experts.append(state.current_expert)
    assert np.array_equal(np.array(experts), trace.experts)


# ------------------------------------------------------- parameter builders


def test_sd_params_pure_values():
    c = alg.sd_params_pure(10000, 16, 1.0)
    assert c.p == pytest.approx(0.01, rel=1e-12)
    assert c.eta == pytest.approx(5e-4, rel=1e-12)
    assert c.K == 400 and c.B == 1
    assert c.eta <= c.p * c.params.epsilon


def test_sd_params_pure_rejects_small_T():
    with pytest.raises(ParameterError):
        alg.sd_params_pure(4, 8, 1.0)  # p = 1/2 violates p < 1/2
    with pytest.raises(ParameterError):
        alg.sd_params_pure(10 ** 4, 8, 1.5)  # eps <= 1 required


def test_sd_params_approx_values():
    c = alg.sd_params_approx(10 ** 6, 1000, 1.0, 1e-6)
    assert c.p == pytest.approx(0.0041675199451160685, rel=1e-12)
    assert c.epsilon0 == pytest.approx(0.5, rel=1e-12)  # capped at eps/2
    assert c.eta == pytest.approx(0.00010418799862790171, rel=1e-12)
    assert c.K == math.ceil(16670.07978)
    assert c.eta <= c.p * c.params.epsilon


def test_sd_params_approx_rejects_degenerate_delta():
    with pytest.raises(ParameterError):
        alg.sd_params_approx(10 ** 6, 8, 1.0, 1.0)
    with pytest.raises(ParameterError):  # T >= 10 ln(1/delta)
        alg.sd_params_approx(100, 8, 1.0, 1e-6)


def test_sd_params_batched_values():
    # mid-window epsilon chosen so the rounded batch size is exactly 10
    T, d, delta = 10 ** 5, 2 ** 20, 1e-6
    eps = 0.037048169029904804
    c = alg.sd_params_batched(T, d, eps, delta)
    assert c.B == 10
    assert c.p == pytest.approx(0.019343914041109285, rel=1e-12)
    assert c.eta == pytest.approx(0.00017916414927374142, rel=1e-12)
    assert c.K == math.ceil(773.7565616443714)


def test_sd_params_batched_window_check():
    T, d, delta = 10 ** 5, 2 ** 20, 1e-6
    hi = math.log(1 / delta) ** (2 / 3) * math.log(d) / T ** (1 / 3)
    with pytest.raises(ParameterError, match="window"):
        alg.sd_params_batched(T, d, hi * 1.01, delta)


def test_sd_params_batched_clamps_B_to_one():
    # large epsilon near the top of the window gives B formula < 1 -> clamp
    T, d, delta = 10 ** 5, 4, 1e-2
    hi = math.log(1 / delta) ** (2 / 3) * math.log(d) / T ** (1 / 3)
    c = alg.sd_params_batched(T, d, hi, delta)
    assert c.B == 1


# ------------------------------------------------------------- batching


def test_batch_losses_identity():
    m = np.random.default_rng(0).random((7, 3))
    assert batch_is(m, alg.batch_losses(m, 1))


def batch_is(a, b):
    return a.shape == b.shape and np.array_equal(a, b)


def test_batch_losses_means():
    m = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    out = alg.batch_losses(m, 2)
    assert np.array_equal(out, [[0.5, 0.5], [0.5, 0.5]])


def test_batch_losses_partial_tail():
    m = np.arange(10, dtype=float).reshape(5, 2) / 10.0
    out = alg.batch_losses(m, 2)
    assert out.shape == (3, 2)
    assert np.array_equal(out[2], m[4])  # final batch averages a single row


# ------------------------------------------------------------- full games


def test_sd_zero_losses_incur_nothing():
    spec = adv.zeros(4, 200)
    cfg = _cfg(eta=1e-9, p=0.2, K=201, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(5, 0), 0)
    assert trace.losses.sum() == 0.0
    assert alg.regret(trace) == 0.0


def test_sd_budget_freezes_expert():
    rng_m = np.random.default_rng(3)
    spec = adv.oblivious(rng_m.random((300, 3)))
    cfg = _cfg(eta=0.05, p=0.4, K=5, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(6, 0), 0)
    assert trace.extras["resamples"] <= 4  # k starts at 1, stops at K
    frozen = np.flatnonzero(trace.mechanism == 3)
    assert frozen.size > 0
    resample_rounds = np.flatnonzero(trace.mechanism == 2)
    assert frozen.min() > resample_rounds.max()
    # expert never changes after the budget is consumed
    assert np.unique(trace.experts[resample_rounds.max():]).size == 1


def test_sd_ledger_structure_and_composition():
    spec = adv.oblivious(np.random.default_rng(9).random((500, 4)))
    cfg = _cfg(eta=0.004, p=0.1, K=200, eps=1.0, delta=1e-6)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(7, 0), 0)
    events = trace.ledger.events
    assert events[0][0] == pytest.approx(cfg.eta / cfg.p, rel=1e-12)
    assert all(e == pytest.approx(4 * cfg.eta, rel=1e-12) for e, _ in events[1:])
    assert len(events) == 1 + trace.extras["resamples"]
    # composed value stays below the closed-form theorem bound
    assert trace.composed_epsilon <= alg.sd_privacy_bound(cfg, 500)


def test_sd_pure_composition_is_basic():
    spec = adv.oblivious(np.random.default_rng(9).random((100, 3)))
    cfg = _cfg(eta=0.01, p=0.2, K=50, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(8, 0), 0)
    assert trace.composed_epsilon == pytest.approx(
        compose_basic(trace.ledger)[0], rel=1e-12
    )


def test_sd_switch_count_concentration_small():
    # z-events stay under 4Tp whp (quick version of the acceptance check)
    T, p = 400, 0.05
    spec = adv.oblivious(np.random.default_rng(2).random((T, 8)))
    cfg = _cfg(eta=p / 25, p=p, K=T + 1, eps=1.0)
    worst = max(
        alg.run_shrinking_dartboard(cfg, spec, run_stream(9, i), i).extras["resamples"]
        for i in range(100)
    )
    assert worst <= 4 * T * p


def test_sd_golden_trace():
    spec = adv.oblivious(np.random.default_rng(12).random((64, 5)))
    cfg = _cfg(eta=0.02, p=0.25, K=30, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(2024, 3), 3)
    payload = trace.experts.tobytes() + trace.mechanism.tobytes()
    assert hashlib.sha256(payload).hexdigest() == GOLDEN_SD_SHA256


GOLDEN_SD_SHA256 = "c86698503d9ac506842baef60cab6c2f4c489022e6b74c100d5204fddbbb25a4"


def test_sd_batched_expansion():
    T, B = 10, 3
    m = np.random.default_rng(4).random((T, 2))
    spec = adv.oblivious(m)
    cfg = _cfg(eta=0.01, p=0.2, K=20, eps=1.0, delta=1e-6, B=B)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(11, 0), 0)
    assert trace.horizon == T
    # each batch replays one decision for B raw rounds
    for j in range(math.ceil(T / B)):
        seg = trace.experts[j * B: (j + 1) * B]
        assert np.unique(seg).size == 1
    # losses are paid on the raw sequence
    assert np.array_equal(trace.losses, m[np.arange(T), trace.experts])


def test_sd_batched_ledger_scales():
    spec = adv.oblivious(np.random.default_rng(4).random((400, 3)))
    cfg = _cfg(eta=0.002, p=0.1, K=100, eps=1.0, delta=1e-6, B=4)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(13, 0), 0)
    events = trace.ledger.events
    assert events[0][0] == pytest.approx(cfg.eta / (4 * cfg.p), rel=1e-12)
    if len(events) > 1:
        assert events[1][0] == pytest.approx(4 * cfg.eta / 4, rel=1e-12)


def test_sd_adaptive_adversary_runs_on_pure_path():
    spec = adv.adaptive("punish-last", 3, 60)
    cfg = _cfg(eta=0.05, p=0.3, K=61, eps=1.0)
    trace = alg.run_shrinking_dartboard(cfg, spec, run_stream(14, 0), 0)
    assert trace.horizon == 60
    # adaptive punishment: the loss hits the previous round's expert
    for t in range(1, 60):
        prev = trace.experts[t - 1]
        assert trace.cum_losses is not None
        # row t has a single 1 at the previous expert
        row_loss = trace.losses[t]
        assert row_loss in (0.0, 1.0)
        if trace.experts[t] == prev:
            assert row_loss == 1.0


# ------------------------------------------------------------- regret & mw


def test_regret_examples():
    spec = adv.zeros(2, 10)
    eta = 0.1
    trace = alg.run_mw(eta, spec, run_stream(15, 0), 0)
    assert alg.regret(trace) == 0.0
    m = np.array([[1.0, 0.0], [0.0, 1.0]])
    trace = alg.GameTrace(
        experts=np.array([0, 0]),
        losses=m[np.arange(2), [0, 0]],
        switches=np.zeros(2, dtype=np.int8),
        mechanism=np.zeros(2, dtype=np.int8),
        cum_losses=m.sum(axis=0),
        ledger=alg.PrivacyLedger(),
        composed_epsilon=0.0,
        composed_delta=0.0,
    )
    assert alg.regret(trace) == 0.0  # incurred 1, best expert total 1


def test_mw_exact_distributions_match_state_updates():
    rng = np.random.default_rng(21)
    m = rng.random((40, 6))
    eta = 0.13
    dists = alg.mw_exact_distributions(m, eta)
    state = alg.ExpertState(log_weights=np.zeros(6), current_expert=0)
    for t in range(40):
        assert np.allclose(dists[t], state.probabilities(), rtol=1e-12, atol=1e-15)
        state = alg.mw_update(state, adv.LossVector(m[t]), eta)


def test_mw_regret_bound_sample():
    # (1+eta) L* + ln(d)/eta with a 20% margin, one random sequence
    rng = np.random.default_rng(33)
    T, d, eta = 800, 16, 0.05
    m = rng.random((T, d))
    spec = adv.oblivious(m)
    lstar = m.sum(axis=0).min()
    mean_incurred = np.mean(
        [
            alg.run_mw(eta, spec, run_stream(16, i), i).losses.sum()
            for i in range(100)
        ]
    )
    assert mean_incurred <= 1.2 * ((1 + eta) * lstar + math.log(d) / eta)
