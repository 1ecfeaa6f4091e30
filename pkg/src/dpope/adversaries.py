"""Loss-sequence generators: oblivious, stochastic, and adaptive adversaries.

Loss values live in [0,1]^d.  Oblivious specs wrap a fixed T x d matrix.
Stochastic specs describe an i.i.d. distribution; round t of run r is a pure
function of (spec.seed, r, t), so fixed seeds replay identical sequences and
different algorithms can be compared on the same draws.  Adaptive rules form
a closed catalog and read only the history of chosen experts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .accounting import ParameterError, UsageError
from .rng import adversary_stream

ADAPTIVE_RULES = ("punish-last", "punish-frequent")
STOCHASTIC_KINDS = ("bernoulli", "uniform", "one-low-mean")


@dataclass(frozen=True)
class LossVector:
    """One round's losses over d experts, entries in [0,1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ParameterError("loss vector must be 1-d")
        if not (np.all(v >= 0.0) and np.all(v <= 1.0)):
            raise ParameterError("loss values must lie in [0,1]")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class AdversarySpec:
    """Declarative loss source.

    kind "oblivious": payload["matrix"] is the full T x d loss matrix.
    kind "stochastic": payload["dist"] in STOCHASTIC_KINDS plus parameters
        ("q" vector for bernoulli; "j", "mu_j", "mu_rest" for one-low-mean).
    kind "adaptive": payload["rule"] in ADAPTIVE_RULES.
    """

    kind: str
    d: int
    horizon_T: int
    payload: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("oblivious", "stochastic", "adaptive"):
            raise ParameterError(f"unknown adversary kind {self.kind!r}")
        if self.d < 1 or self.horizon_T < 1:
            raise ParameterError("d and horizon_T must be >= 1")
        if self.kind == "oblivious":
            m = np.ascontiguousarray(self.payload["matrix"], dtype=float)
            if m.shape != (self.horizon_T, self.d):
                raise ParameterError(
                    f"matrix shape {m.shape} != (T={self.horizon_T}, d={self.d})"
                )
            if not (np.all(m >= 0.0) and np.all(m <= 1.0)):
                raise ParameterError("oblivious matrix entries must lie in [0,1]")
            self.payload["matrix"] = m
        elif self.kind == "stochastic":
            if self.payload.get("dist") not in STOCHASTIC_KINDS:
                raise ParameterError(f"unknown distribution {self.payload.get('dist')!r}")
        elif self.payload.get("rule") not in ADAPTIVE_RULES:
            raise ParameterError(f"unknown adaptive rule {self.payload.get('rule')!r}")


def oblivious(matrix, seed: int = 0) -> AdversarySpec:
    m = np.ascontiguousarray(matrix, dtype=float)
    return AdversarySpec(
        kind="oblivious", d=m.shape[1], horizon_T=m.shape[0], payload={"matrix": m}, seed=seed
    )


def zeros(d: int, horizon_T: int) -> AdversarySpec:
    return oblivious(np.zeros((horizon_T, d)))


def stochastic_bernoulli(q, horizon_T: int, seed: int = 0) -> AdversarySpec:
    q = np.asarray(q, dtype=float)
    if not (np.all(q >= 0) and np.all(q <= 1)):
        raise ParameterError("Bernoulli means must lie in [0,1]")
    return AdversarySpec(
        kind="stochastic", d=q.size, horizon_T=horizon_T,
        payload={"dist": "bernoulli", "q": q}, seed=seed,
    )


def stochastic_uniform(d: int, horizon_T: int, seed: int = 0) -> AdversarySpec:
    return AdversarySpec(
        kind="stochastic", d=d, horizon_T=horizon_T, payload={"dist": "uniform"}, seed=seed
    )


def stochastic_one_low_mean(
    d: int, horizon_T: int, j: int, mu_j: float, mu_rest: float, seed: int = 0
) -> AdversarySpec:
    """Bernoulli coordinates with one low-mean expert j (mu_j < mu_rest)."""
    if not (0 <= j < d):
        raise ParameterError("expert index out of range")
    if not (0 <= mu_j < mu_rest <= 1):
        raise ParameterError("need 0 <= mu_j < mu_rest <= 1")
    return AdversarySpec(
        kind="stochastic", d=d, horizon_T=horizon_T,
        payload={"dist": "one-low-mean", "j": j, "mu_j": mu_j, "mu_rest": mu_rest},
        seed=seed,
    )


def adaptive(rule: str, d: int, horizon_T: int, seed: int = 0) -> AdversarySpec:
    return AdversarySpec(
        kind="adaptive", d=d, horizon_T=horizon_T, payload={"rule": rule}, seed=seed
    )


def _stochastic_means(spec: AdversarySpec) -> np.ndarray:
    p = spec.payload
    if p["dist"] == "bernoulli":
        return np.asarray(p["q"], dtype=float)
    if p["dist"] == "one-low-mean":
        q = np.full(spec.d, p["mu_rest"], dtype=float)
        q[p["j"]] = p["mu_j"]
        return q
    return np.full(spec.d, 0.5)  # uniform[0,1] mean


def _stochastic_row(spec: AdversarySpec, t: int, run_index: int) -> np.ndarray:
    rng = adversary_stream(spec.seed, run_index, t)
    u = rng.random(spec.d)
    if spec.payload["dist"] == "uniform":
        return u
    return (u < _stochastic_means(spec)).astype(float)


def next_loss(spec: AdversarySpec, t: int, history, run_index: int = 0) -> LossVector:
    """Loss vector of round t (1-based); history = chosen experts x_{1:t-1}."""
    if not (1 <= t <= spec.horizon_T):
        raise UsageError(f"round {t} outside horizon {spec.horizon_T}")
    if len(history) != t - 1:
        raise UsageError(f"history length {len(history)} != t-1 = {t - 1}")
    if spec.kind == "oblivious":
        return LossVector(spec.payload["matrix"][t - 1])
    if spec.kind == "stochastic":
        return LossVector(_stochastic_row(spec, t, run_index))
    rule = spec.payload["rule"]
    row = np.zeros(spec.d)
    if rule == "punish-last":
        if history:
            row[history[-1]] = 1.0
    else:  # punish-frequent: unit loss on the modal past choice
        if history:
            counts = np.bincount(np.asarray(history), minlength=spec.d)
            row[int(np.argmax(counts))] = 1.0
    return LossVector(row)


def materialize(spec: AdversarySpec, run_index: int = 0) -> Optional[np.ndarray]:
    """Full T x d loss matrix, or None for adaptive specs (history-dependent)."""
    if spec.kind == "oblivious":
        return spec.payload["matrix"]
    if spec.kind == "adaptive":
        return None
    rows = [_stochastic_row(spec, t, run_index) for t in range(1, spec.horizon_T + 1)]
    return np.ascontiguousarray(np.stack(rows))


def realizable_hide_expert(d: int, epsilon: float, horizon_T: int, j: int) -> AdversarySpec:
    """Hard realizable instance: T-k zero rounds, then k rounds punishing
    everyone but expert j, with k = ceil(ln(d) / (2 epsilon)).
    """
    if not (0 <= j < d):
        raise ParameterError("expert index out of range")
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    k = math.ceil(math.log(d) / (2.0 * epsilon))
    if k > horizon_T:
        raise ParameterError(f"k={k} tail rounds exceed horizon {horizon_T}")
    m = np.zeros((horizon_T, d))
    if k > 0:
        m[horizon_T - k:, :] = 1.0
        m[horizon_T - k:, j] = 0.0
    return oblivious(m)


def hide_expert_tail_rounds(d: int, epsilon: float) -> int:
    return math.ceil(math.log(d) / (2.0 * epsilon))


def drifting_good_set(
    d: int,
    horizon_T: int,
    eliminations_per_epoch: Optional[int] = None,
    seed: int = 0,
) -> AdversarySpec:
    """Stress instance for the realizable algorithms.

    One secret expert keeps zero loss; the rest are eliminated in epochs
    (loss 1 every round once eliminated).  Defaults give ceil(log2 d)
    epochs; eliminations_per_epoch=0 yields the all-zero matrix.
    """
    if d < 2:
        raise ParameterError("need at least 2 experts")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xD21F,)))
    if eliminations_per_epoch == 0:
        return oblivious(np.zeros((horizon_T, d)), seed=seed)
    n_epochs_target = max(1, math.ceil(math.log2(d)))
    if eliminations_per_epoch is None:
        eliminations_per_epoch = max(1, math.ceil((d - 1) / n_epochs_target))
    n_epochs = math.ceil((d - 1) / eliminations_per_epoch)
    if n_epochs + 1 > horizon_T:
        raise ParameterError("horizon too short for the elimination schedule")
    good = int(rng.integers(d))
    order = [i for i in rng.permutation(d) if i != good]
    m = np.zeros((horizon_T, d))
    for e in range(n_epochs):
        start = round(horizon_T * (e + 1) / (n_epochs + 1))
        victims = order[e * eliminations_per_epoch: (e + 1) * eliminations_per_epoch]
        m[start:, victims] = 1.0
    return oblivious(m, seed=seed)


def load_loss_matrix(path) -> AdversarySpec:
    """Parse a loss-matrix CSV: T rows, d comma-separated decimals, no header."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParameterError(
                    f"{path}: row {lineno} has {len(cells)} columns, expected {width}"
                )
            row = []
            for col, cell in enumerate(cells, start=1):
                try:
                    v = float(cell)
                except ValueError as exc:
                    raise ParameterError(
                        f"{path}: row {lineno} column {col}: not a decimal: {cell!r}"
                    ) from exc
                if not (0.0 <= v <= 1.0):
                    raise ParameterError(
                        f"{path}: row {lineno} column {col}: value {v} outside [0,1]"
                    )
                row.append(v)
            rows.append(row)
    if not rows:
        raise ParameterError(f"{path}: empty loss matrix")
    return oblivious(np.array(rows))
