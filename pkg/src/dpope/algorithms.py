"""DP prediction-from-experts algorithms.

Contents: the non-private multiplicative-weights baseline, the private
shrinking dartboard (plain and batched), the limited-updates reduction for
stochastic adversaries, and the sparse-vector algorithms for the
(near-)realizable regime (fixed budget and adaptive).  Game loops are run by
the kernels in dpope._kernels; this module owns parameter derivation,
dispatch, privacy ledgers, and traces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import adversaries as adv
from .accounting import (
    ParameterError,
    PrivacyLedger,
    PrivacyParams,
    compose_advanced_heterogeneous,
    compose_advanced_homogeneous,
    compose_basic,
)
from .mechanisms import exponential_mechanism
from ._kernels import active_backend, pure
from ._kernels.pure import (
    MECH_DOUBLE,
    MECH_EM,
    MECH_HOLD,
    MECH_INIT,
    MECH_RESAMPLE,
    categorical_from_logits,
)

# ---------------------------------------------------------------------------
# traces


@dataclass
class GameTrace:
    """Full record of one game: enough to recompute regret and audit it."""

    experts: np.ndarray  # chosen expert per round (0-based)
    losses: np.ndarray  # incurred loss per round
    switches: np.ndarray  # 1 where the sampling mechanism fired
    mechanism: np.ndarray  # MECH_* code per round
    cum_losses: np.ndarray  # final per-expert cumulative losses
    ledger: PrivacyLedger
    composed_epsilon: float
    composed_delta: float
    extras: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.experts)

    @property
    def switch_count(self) -> int:
        return int(self.switches.sum())


def regret(trace: GameTrace) -> float:
    """Incurred loss minus the best single expert's total loss."""
    return float(trace.losses.sum() - trace.cum_losses.min())


_SWITCH_CODES = (MECH_RESAMPLE, MECH_EM, MECH_DOUBLE)


def _switch_flags(mech: np.ndarray) -> np.ndarray:
    return np.isin(mech, _SWITCH_CODES).astype(np.int8)


def _assemble_trace(experts, mech, matrix, ledger, eps, delta, extras) -> GameTrace:
    T = len(experts)
    losses = matrix[np.arange(T), experts]
    return GameTrace(
        experts=experts,
        losses=losses,
        switches=_switch_flags(mech),
        mechanism=mech,
        cum_losses=matrix.sum(axis=0),
        ledger=ledger,
        composed_epsilon=eps,
        composed_delta=delta,
        extras=extras,
    )


class _RowRecorder:
    """Lazily generates adversary rows, recording them for the trace."""

    def __init__(self, spec: adv.AdversarySpec, experts_out, run_index: int):
        self.spec = spec
        self.experts_out = experts_out
        self.run_index = run_index
        self.rows: dict[int, list] = {}

    def __call__(self, t: int) -> list:
        if t not in self.rows:
            history = [int(x) for x in self.experts_out[:t]]
            vec = adv.next_loss(self.spec, t + 1, history, self.run_index)
            self.rows[t] = vec.values.tolist()
        return self.rows[t]

    def matrix(self, T: int) -> np.ndarray:
        return np.array([self(t) for t in range(T)])


# ---------------------------------------------------------------------------
# step-level operations (reference semantics; kernels fuse these)


@dataclass
class ExpertState:
    """Multiplicative-weights state: log weights, held expert, switch counter."""

    log_weights: np.ndarray
    current_expert: int
    switch_count: int = 1
    round: int = 1

    def probabilities(self) -> np.ndarray:
        m = np.max(self.log_weights)
        w = np.exp(self.log_weights - m)
        p = w / w.sum()
        assert abs(p.sum() - 1.0) <= 1e-9
        return p


def initial_expert_state(d: int, rng) -> ExpertState:
    x = categorical_from_logits([0.0] * d, rng.random())
    return ExpertState(log_weights=np.zeros(d), current_expert=x)


def mw_update(state: ExpertState, loss: adv.LossVector, eta: float) -> ExpertState:
    """Decay weights by (1-eta)^loss, in log domain."""
    if not (0.0 < eta < 1.0):
        raise ParameterError("eta must be in (0,1)")
    return ExpertState(
        log_weights=state.log_weights + loss.values * math.log(1.0 - eta),
        current_expert=state.current_expert,
        switch_count=state.switch_count,
        round=state.round,
    )


def sd_step(state: ExpertState, config: "SDConfig", prev_loss: adv.LossVector, rng):
    """One shrinking-dartboard round: weight update, lazy keep, capped resample.

    Keeps the held expert with probability (1-p)(1-eta)^{prev loss of held
    expert}; otherwise resamples from the updated distribution while the
    switch budget lasts.  Always consumes three uniforms, matching the
    kernels' slot layout.  Returns (new state, resampled flag).
    """
    u = rng.random(3)
    ln1e = math.log(1.0 - config.eta)
    new = mw_update(state, prev_loss, config.eta)
    new.round = state.round + 1
    x = state.current_expert
    z = 1 if u[0] < 1.0 - config.p else 0
    if z == 1:
        z = 1 if u[1] < math.exp(prev_loss.values[x] * ln1e) else 0
    resampled = False
    if z == 0 and state.switch_count < config.K_budget:
        new.switch_count = state.switch_count + 1
        new.current_expert = categorical_from_logits(new.log_weights.tolist(), u[2])
        resampled = True
    return new, resampled


# ---------------------------------------------------------------------------
# shrinking dartboard


@dataclass(frozen=True)
class SDConfig:
    """Parameters of the private shrinking dartboard."""

    eta: float
    p_switch: float
    K_budget: int
    params: PrivacyParams
    batch_size: int = 1
    epsilon0: Optional[float] = None

    @property
    def p(self) -> float:
        return self.p_switch

    @property
    def K(self) -> int:
        return self.K_budget

    @property
    def B(self) -> int:
        return self.batch_size

    def __post_init__(self):
        if not (0.0 < self.eta < 0.5):
            raise ParameterError(f"eta must be in (0, 1/2), got {self.eta}")
        if not (0.0 < self.p_switch < 0.5):
            raise ParameterError(f"p must be in (0, 1/2), got {self.p_switch}")
        if self.K_budget < 1 or self.batch_size < 1:
            raise ParameterError("K and B must be >= 1")
        if self.eta > self.p_switch * self.params.epsilon * (1.0 + 1e-12):
            raise ParameterError(
                f"eta={self.eta} violates eta <= p*epsilon = "
                f"{self.p_switch * self.params.epsilon}"
            )


def sd_params_pure(T: int, d: int, epsilon: float) -> SDConfig:
    """p = 1/sqrt(T), eta = p*eps/20, K = 4Tp; pure DP."""
    if not (0.0 < epsilon <= 1.0):
        raise ParameterError("requires 0 < epsilon <= 1")
    p = 1.0 / math.sqrt(T)
    return SDConfig(
        eta=p * epsilon / 20.0,
        p_switch=p,
        K_budget=math.ceil(4.0 * T * p),
        params=PrivacyParams(epsilon, 0.0),
    )


def sd_params_approx(T: int, d: int, epsilon: float, delta: float) -> SDConfig:
    """p = (T log(1/delta))^{-1/3}, eta = p*eps0/20 with the capped eps0."""
    if not (0.0 < epsilon <= 1.0):
        raise ParameterError("requires 0 < epsilon <= 1")
    if not (0.0 < delta < 1.0):
        raise ParameterError("requires 0 < delta < 1")
    log_inv_delta = math.log(1.0 / delta)
    if T < 10.0 * log_inv_delta:
        raise ParameterError(f"requires T >= 10*ln(1/delta) = {10 * log_inv_delta:.1f}")
    eps0 = min(
        epsilon / 2.0,
        log_inv_delta ** (1.0 / 3.0) * math.sqrt(math.log(d)) / T ** (1.0 / 6.0),
    )
    p = (T * log_inv_delta) ** (-1.0 / 3.0)
    return SDConfig(
        eta=p * eps0 / 20.0,
        p_switch=p,
        K_budget=math.ceil(4.0 * T * p),
        params=PrivacyParams(epsilon, delta),
        epsilon0=eps0,
    )


def sd_params_batched(T: int, d: int, epsilon: float, delta: float) -> SDConfig:
    """Batched dartboard for the high-privacy window of epsilon."""
    if not (0.0 < delta < 1.0):
        raise ParameterError("requires 0 < delta < 1")
    lid = math.log(1.0 / delta)
    lo = lid ** (2.0 / 3.0) * math.log(d) / T
    hi = lid ** (2.0 / 3.0) * math.log(d) / T ** (1.0 / 3.0)
    if not (lo <= epsilon <= hi):
        raise ParameterError(
            f"epsilon={epsilon} outside the batched validity window [{lo:.3g}, {hi:.3g}]"
        )
    b_raw = lid ** 0.4 * math.log(d) ** 0.6 / (T ** 0.2 * epsilon ** 0.6)
    B = max(1, round(b_raw))
    p = (B / (T * lid)) ** (1.0 / 3.0)
    return SDConfig(
        eta=B * p * epsilon / 40.0,
        p_switch=p,
        K_budget=math.ceil(4.0 * T * p / B),
        params=PrivacyParams(epsilon, delta),
        batch_size=B,
    )


def batch_losses(matrix: np.ndarray, B: int) -> np.ndarray:
    """Average losses over consecutive batches of B rounds (last may be short)."""
    if B < 1:
        raise ParameterError("B must be >= 1")
    if B == 1:
        return matrix
    T = matrix.shape[0]
    nb = math.ceil(T / B)
    out = np.empty((nb, matrix.shape[1]))
    for j in range(nb):
        out[j] = matrix[j * B: min((j + 1) * B, T)].mean(axis=0)
    return np.ascontiguousarray(out)


def _sd_ledger(config: SDConfig, resamples: int) -> PrivacyLedger:
    ledger = PrivacyLedger()
    ledger.charge(config.eta / (config.B * config.p))
    for _ in range(resamples):
        ledger.charge(4.0 * config.eta / config.B)
    return ledger


def sd_privacy_bound(config: SDConfig, T: int) -> float:
    """Closed-form epsilon guarantee of the dartboard at these parameters."""
    eta, p, B = config.eta, config.p, config.B
    if config.params.delta == 0.0:
        return eta / p + 16.0 * T * p * eta
    lid = math.log(1.0 / config.params.delta)
    if B == 1:
        return (
            5.0 * eta / p
            + 100.0 * T * p * eta * eta
            + 20.0 * eta * math.sqrt(T * p * lid)
        )
    return (
        5.0 * eta / (B * p)
        + 100.0 * T * p * eta * eta / B ** 3
        + 20.0 * eta / B * math.sqrt(12.0 * T * p / B * lid)
    )


def sd_regret_bound(config: SDConfig, T: int, d: int) -> float:
    """eta*T + B ln(d)/eta + 2T exp(-Tp/(3B))."""
    eta, p, B = config.eta, config.p, config.B
    return eta * T + B * math.log(d) / eta + 2.0 * T * math.exp(-T * p / (3.0 * B))


def run_shrinking_dartboard(
    config: SDConfig,
    adversary: adv.AdversarySpec,
    rng,
    run_index: int = 0,
) -> GameTrace:
    """Play the (possibly batched) private shrinking dartboard to the horizon."""
    T, d = adversary.horizon_T, adversary.d
    matrix = adv.materialize(adversary, run_index)
    if config.B > 1 and matrix is None:
        raise ParameterError("batched dartboard needs an oblivious/stochastic adversary")
    backend = active_backend()

    if config.B == 1:
        experts = np.zeros(T, dtype=np.int64)
        mech = np.zeros(T, dtype=np.int8)
        uniforms = rng.random(1 + 3 * (T - 1)) if T > 1 else rng.random(1)
        if matrix is None:
            recorder = _RowRecorder(adversary, experts, run_index)
            resamples = pure.sd_game(
                recorder, T, d, config.eta, config.p, config.K, uniforms, experts, mech
            )
            matrix = recorder.matrix(T)
        elif backend is pure:
            rows = matrix.tolist()
            resamples = pure.sd_game(
                rows.__getitem__, T, d, config.eta, config.p, config.K,
                uniforms, experts, mech,
            )
        else:
            resamples = backend.sd_game(
                matrix, config.eta, config.p, config.K, uniforms, experts, mech
            )
        raw_experts, raw_mech = experts, mech
    else:
        batched = batch_losses(matrix, config.B)
        nb = batched.shape[0]
        experts_b = np.zeros(nb, dtype=np.int64)
        mech_b = np.zeros(nb, dtype=np.int8)
        uniforms = rng.random(1 + 3 * (nb - 1)) if nb > 1 else rng.random(1)
        if backend is pure:
            rows = batched.tolist()
            resamples = pure.sd_game(
                rows.__getitem__, nb, d, config.eta, config.p, config.K,
                uniforms, experts_b, mech_b,
            )
        else:
            resamples = backend.sd_game(
                batched, config.eta, config.p, config.K, uniforms, experts_b, mech_b
            )
        idx = np.arange(T) // config.B
        raw_experts = experts_b[idx]
        raw_mech = np.full(T, MECH_HOLD, dtype=np.int8)
        raw_mech[np.arange(nb) * config.B] = mech_b

    ledger = _sd_ledger(config, resamples)
    if config.params.delta > 0.0:
        eps, _ = compose_advanced_heterogeneous(
            ledger, math.log(1.0 / config.params.delta)
        )
        delta = config.params.delta
    else:
        eps, delta = compose_basic(ledger)
    return _assemble_trace(
        raw_experts, raw_mech, matrix, ledger, eps, delta, {"resamples": resamples}
    )


def run_mw(eta: float, adversary: adv.AdversarySpec, rng, run_index: int = 0) -> GameTrace:
    """Non-private baseline: sample fresh from the MW distribution each round."""
    if not (0.0 < eta < 1.0):
        raise ParameterError("eta must be in (0,1)")
    T, d = adversary.horizon_T, adversary.d
    matrix = adv.materialize(adversary, run_index)
    experts = np.zeros(T, dtype=np.int64)
    uniforms = rng.random(T)
    backend = active_backend()
    if matrix is None:
        recorder = _RowRecorder(adversary, experts, run_index)
        pure.mw_game(recorder, T, d, eta, uniforms, experts)
        matrix = recorder.matrix(T)
    elif backend is pure:
        rows = matrix.tolist()
        pure.mw_game(rows.__getitem__, T, d, eta, uniforms, experts)
    else:
        backend.mw_game(matrix, eta, uniforms, experts)
    mech = np.full(T, MECH_RESAMPLE, dtype=np.int8)
    mech[0] = MECH_INIT
    return _assemble_trace(
        experts, mech, matrix, PrivacyLedger(), math.inf, 0.0, {}
    )


def mw_exact_distributions(matrix: np.ndarray, eta: float) -> np.ndarray:
    """Closed-form MW play distributions P^t for every round of a fixed matrix."""
    T, d = matrix.shape
    cum = np.vstack([np.zeros(d), np.cumsum(matrix[:-1], axis=0)])
    logits = math.log(1.0 - eta) * cum
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# limited updates (stochastic adversaries)


def dp_select_expert(cumulative_losses, n: int, epsilon: float, rng) -> int:
    """Private selection via the exponential mechanism on summed losses.

    Scores are cumulative losses over n samples (sensitivity 1 per sample),
    so sampling proportional to exp(-eps*score/2) is eps-DP and attains the
    standard selection rate for the experts polytope.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    return exponential_mechanism(cumulative_losses, epsilon, rng)


def limited_updates_schedule(T: int) -> list[int]:
    """Update rounds 2, 4, 8, ... up to T (1-based)."""
    out = []
    t = 2
    while t <= T:
        out.append(t)
        t *= 2
    return out


def run_limited_updates(
    adversary: adv.AdversarySpec,
    params: PrivacyParams,
    rng,
    run_index: int = 0,
) -> GameTrace:
    """Update the expert only at rounds 2^l, each update selecting via the
    exponential mechanism on the previous half-window.  Windows are disjoint,
    so parallel composition keeps the whole game at (eps, delta).
    """
    T, d = adversary.horizon_T, adversary.d
    matrix = adv.materialize(adversary, run_index)
    if matrix is None:
        raise ParameterError(
            "limited updates targets stochastic adversaries (oblivious also runs); "
            "adaptive specs are not supported"
        )
    experts = np.zeros(T, dtype=np.int64)
    mech = np.full(T, MECH_HOLD, dtype=np.int8)
    mech[0] = MECH_INIT
    u0 = rng.random()
    x = min(int(u0 * d), d - 1)
    ledger = PrivacyLedger()
    updates = limited_updates_schedule(T)
    prev = 1
    for t in updates:
        experts[prev - 1: t - 1] = x
        window = matrix[t // 2 - 1: t - 1]
        x = dp_select_expert(window.sum(axis=0), window.shape[0], params.epsilon, rng)
        ledger.charge(params.epsilon, params.delta)
        mech[t - 1] = MECH_EM
        prev = t
    experts[prev - 1:] = x
    if ledger.events:
        eps, delta = params.epsilon, params.delta  # parallel composition
    else:
        eps, delta = 0.0, 0.0
    return _assemble_trace(
        experts, mech, matrix, ledger, eps, delta, {"updates": updates}
    )


def limited_updates_regret_bound(T: int, d: int, epsilon: float) -> float:
    """Evaluate sum_i 2^i * Delta_{2^i} with Delta_n = sqrt(ln d/n) + ln d/(n eps)."""
    total = 0.0
    i = 1
    while 2 ** i <= T:
        n = 2 ** i
        total += n * (math.sqrt(math.log(d) / n) + math.log(d) / (n * epsilon))
        i += 1
    return total


# ---------------------------------------------------------------------------
# sparse-vector algorithms for the (near-)realizable regime


@dataclass(frozen=True)
class SVTRealizableConfig:
    """Derived parameters of the fixed-budget sparse-vector experts algorithm."""

    K_switches: int
    eta: float
    L_star: float
    threshold_L: float
    beta: float
    svt_log_term: float  # ln(2 T^2 / beta)
    params: PrivacyParams

    def __post_init__(self):
        if self.K_switches < 1:
            raise ParameterError("K must be >= 1")
        if not (0.0 < self.beta < 0.5):
            raise ParameterError("beta must be in (0, 1/2)")
        expected = self.L_star + 4.0 / self.eta + 8.0 * self.svt_log_term / self.params.epsilon
        if abs(self.threshold_L - expected) > 1e-6 * max(1.0, abs(expected)):
            raise ParameterError("threshold_L inconsistent with the parameter rule")


def svt_params(
    T: int, d: int, epsilon: float, delta: float, beta: float, L_star: float = 0.0
) -> SVTRealizableConfig:
    """Budget K = ceil(6 ceil(log2 d) + 24 ln(1/beta)); eta = eps/2K for pure
    DP, eps/(4 sqrt(2K ln(1/delta))) for approximate."""
    if not (0.0 < beta < 0.5):
        raise ParameterError("beta must be in (0, 1/2)")
    if L_star < 0:
        raise ParameterError("L_star must be nonnegative")
    logd = math.ceil(math.log2(d)) if d > 1 else 0
    K = math.ceil(6.0 * logd + 24.0 * math.log(1.0 / beta))
    if delta == 0.0:
        eta = epsilon / (2.0 * K)
    else:
        eta = epsilon / (4.0 * math.sqrt(2.0 * K * math.log(1.0 / delta)))
    B = math.log(2.0 * T * T / beta)
    return SVTRealizableConfig(
        K_switches=K,
        eta=eta,
        L_star=L_star,
        threshold_L=L_star + 4.0 / eta + 8.0 * B / epsilon,
        beta=beta,
        svt_log_term=B,
        params=PrivacyParams(epsilon, delta),
    )


def svt_switch_budget_value(d: int, beta: float) -> float:
    """Real-valued switch bound 6 ceil(log2 d) + 24 ln(1/beta)."""
    logd = math.ceil(math.log2(d)) if d > 1 else 0
    return 6.0 * logd + 24.0 * math.log(1.0 / beta)


def _run_svt_kernel(
    adversary, rng, run_index, K, eta, eps_svt, lstar, thr_offset,
    adaptive_flag, lap_scale, double_margin, max_doublings,
):
    T, d = adversary.horizon_T, adversary.d
    matrix = adv.materialize(adversary, run_index)
    experts = np.zeros(T, dtype=np.int64)
    mech = np.zeros(T, dtype=np.int8)
    lbar = np.zeros(T)
    uniforms = rng.random(1 + 5 * T)
    backend = active_backend()
    if matrix is None:
        recorder = _RowRecorder(adversary, experts, run_index)
        switches = pure.svt_game(
            recorder, T, d, K, eta, eps_svt, lstar, thr_offset, bool(adaptive_flag),
            lap_scale, double_margin, max_doublings, uniforms, experts, mech, lbar,
        )
        matrix = recorder.matrix(T)
    elif backend is pure:
        rows = matrix.tolist()
        switches = pure.svt_game(
            rows.__getitem__, T, d, K, eta, eps_svt, lstar, thr_offset,
            bool(adaptive_flag), lap_scale, double_margin, max_doublings,
            uniforms, experts, mech, lbar,
        )
    else:
        switches = backend.svt_game(
            matrix, K, eta, eps_svt, lstar, thr_offset, int(adaptive_flag),
            lap_scale, double_margin, max_doublings, uniforms, experts, mech, lbar,
        )
    return matrix, experts, mech, lbar, switches


def run_svt_realizable(
    config: SVTRealizableConfig,
    adversary: adv.AdversarySpec,
    rng,
    run_index: int = 0,
) -> GameTrace:
    """Sparse-vector experts with a fixed loss target L*.

    Each epoch holds one expert and privately tests its epoch loss against
    the threshold at eps/2; on a halt the exponential mechanism (eta per
    fire) picks a new expert.  After K switches the expert freezes.
    """
    matrix, experts, mech, _, switches = _run_svt_kernel(
        adversary, rng, run_index,
        K=config.K_switches, eta=config.eta, eps_svt=config.params.epsilon / 2.0,
        lstar=config.L_star, thr_offset=config.threshold_L - config.L_star,
        adaptive_flag=False, lap_scale=1.0, double_margin=0.0, max_doublings=0,
    )
    ledger = PrivacyLedger()
    ledger.charge(config.params.epsilon / 2.0)  # all epochs' sparse-vector, disjoint data
    for _ in range(switches):
        ledger.charge(config.eta)
    if config.params.delta == 0.0:
        eps, delta = compose_basic(ledger)
    else:
        em_eps, em_delta = (
            compose_advanced_homogeneous(
                config.eta, switches, config.params.delta
            )
            if switches
            else (0.0, 0.0)
        )
        eps, delta = config.params.epsilon / 2.0 + em_eps, em_delta
    return _assemble_trace(
        experts, mech, matrix, ledger, eps, delta, {"switches": switches}
    )


@dataclass(frozen=True)
class SVTAdaptiveConfig:
    """Derived parameters of the doubling (adaptive) sparse-vector algorithm."""

    T: int
    d: int
    beta: float
    params: PrivacyParams
    epsilon0: float
    K_switches: int
    eta: float
    svt_log_term: float
    threshold_offset: float  # threshold = current estimate + this
    laplace_scale: float  # K / eps0
    double_margin: float  # 5 K ln(T/beta) / eps0
    max_epochs: int  # ceil(log2 T) + 1


def svt_adaptive_params(T: int, d: int, epsilon: float, beta: float) -> SVTAdaptiveConfig:
    if not (0.0 < beta < 0.5):
        raise ParameterError("beta must be in (0, 1/2)")
    eps0 = epsilon / (2.0 * max(1.0, math.log2(T)))
    logd = math.log2(d) if d > 1 else 0.0
    K = math.ceil(logd + 2.0 * math.log(T / beta)) if T > 1 else max(1, math.ceil(logd))
    K = max(K, 1)
    eta = eps0 / (2.0 * K)
    B = math.log(2.0 * T * T / beta)
    return SVTAdaptiveConfig(
        T=T,
        d=d,
        beta=beta,
        params=PrivacyParams(epsilon, 0.0),
        epsilon0=eps0,
        K_switches=K,
        eta=eta,
        svt_log_term=B,
        threshold_offset=4.0 / eta + 8.0 * B / eps0,
        laplace_scale=K / eps0,
        double_margin=5.0 * K * math.log(T / beta) / eps0,
        max_epochs=math.ceil(math.log2(T)) + 1 if T > 1 else 1,
    )


def run_svt_adaptive(
    T: int,
    d: int,
    epsilon: float,
    beta: float,
    adversary: adv.AdversarySpec,
    rng,
    run_index: int = 0,
) -> GameTrace:
    """Doubling wrapper around the sparse-vector algorithm (no L* needed).

    Runs the fixed-budget algorithm at eps0 = eps/(2 log2 T) with estimate
    Lbar (starting at 1); after each exponential-mechanism fire a Laplace
    check may double Lbar and restart with a fresh uniform expert.  At most
    ceil(log2 T)+1 epochs.
    """
    if (T, d) != (adversary.horizon_T, adversary.d):
        raise ParameterError("T, d must match the adversary spec")
    cfg = svt_adaptive_params(T, d, epsilon, beta)
    matrix, experts, mech, lbar, switches = _run_svt_kernel(
        adversary, rng, run_index,
        K=cfg.K_switches, eta=cfg.eta, eps_svt=cfg.epsilon0 / 2.0,
        lstar=1.0, thr_offset=cfg.threshold_offset,
        adaptive_flag=True, lap_scale=cfg.laplace_scale,
        double_margin=cfg.double_margin, max_doublings=cfg.max_epochs - 1,
    )
    doublings = int((mech == MECH_DOUBLE).sum())
    ledger = PrivacyLedger()
    for _ in range(doublings + 1):
        ledger.charge(cfg.epsilon0 / 2.0)
    for _ in range(switches):
        ledger.charge(cfg.eta)
        ledger.charge(cfg.epsilon0 / cfg.K_switches)  # the Laplace check
    eps, delta = compose_basic(ledger)
    return _assemble_trace(
        experts, mech, matrix, ledger, eps, delta,
        {
            "switches": switches,
            "doublings": doublings,
            "epochs": doublings + 1,
            "lbar": lbar,
            "config": cfg,
        },
    )


def svt_epoch_records(trace: GameTrace) -> list[dict]:
    """Completed epochs of a sparse-vector trace.

    An epoch spans the rounds a single expert was held and ends at the round
    where the exponential mechanism fired; its loss is the held expert's
    incurred loss over [start, fire-1], which equals the final sparse-vector
    query of the epoch.
    """
    fires = np.flatnonzero(np.isin(trace.mechanism, (MECH_EM, MECH_DOUBLE)))
    out = []
    start = 0
    for f in fires:
        out.append(
            {
                "start": int(start),
                "end": int(f),
                "loss": float(trace.losses[start:f].sum()),
            }
        )
        start = int(f)
    return out
