"""Differential-privacy primitives.

Samplers, the exponential mechanism, AboveThreshold (sparse vector), and the
binary tree mechanism for private prefix sums.  Every stochastic operation
takes an explicit numpy Generator.  AboveThreshold and the tree support
deterministic noise hooks for tests; the CLI never enables them on a path
labeled private.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .accounting import ParameterError, PrivacyParams, UsageError
from ._kernels.pure import categorical_from_logits, laplace_from_uniform


def sample_bernoulli(q: float, rng: np.random.Generator) -> int:
    """One draw from Bernoulli(q)."""
    if not (0.0 <= q <= 1.0):
        raise ParameterError(f"Bernoulli parameter must be in [0,1], got {q}")
    return 1 if rng.random() < q else 0


def sample_laplace(scale: float, rng: np.random.Generator, size: Optional[int] = None):
    """Laplace(0, scale) draws via the inverse CDF (matches the kernels)."""
    if not (scale > 0):
        raise ParameterError(f"Laplace scale must be positive, got {scale}")
    if size is None:
        return laplace_from_uniform(rng.random(), scale)
    u = rng.random(size)
    v = u - 0.5
    a = np.maximum(1.0 - 2.0 * np.abs(v), 1e-300)
    x = -scale * np.log(a)
    return np.where(v >= 0.0, x, -x)


def exponential_mechanism(scores, eta: float, rng: np.random.Generator) -> int:
    """Sample index x with probability proportional to exp(-eta*scores[x]/2).

    For 1-sensitive scores this is eta-DP.  Computed in log domain with
    max subtraction.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ParameterError("scores must be a nonempty 1-d array")
    if not np.all(np.isfinite(s)):
        raise ParameterError("scores must be finite")
    if not (eta > 0):
        raise ParameterError(f"eta must be positive, got {eta}")
    logits = (-0.5 * eta * s).tolist()
    return categorical_from_logits(logits, rng.random())


def exponential_mechanism_log_probs(scores, eta: float) -> np.ndarray:
    """Exact log-probabilities of the exponential mechanism (no sampling)."""
    s = np.asarray(scores, dtype=float)
    logits = -0.5 * eta * s
    m = np.max(logits)
    return logits - (m + math.log(np.sum(np.exp(logits - m))))


@dataclass
class AboveThresholdState:
    """AboveThreshold with the Dwork--Roth calibration.

    Noisy threshold L + Lap(2/eps) drawn at init; each 1-sensitive query is
    compared with fresh Lap(4/eps) noise.  `noise_override` is a test hook:
    "zero" makes every draw 0, a sequence is consumed in order (threshold
    first, then one value per query).
    """

    epsilon: float
    threshold_L: float
    horizon_T: int
    beta: float
    rng: Optional[np.random.Generator] = None
    noise_override: object = None
    noisy_threshold: float = field(init=False)
    halted: bool = field(default=False, init=False)
    queries_seen: int = field(default=0, init=False)

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ParameterError("epsilon must be positive")
        if self.horizon_T < 1:
            raise ParameterError("horizon_T must be >= 1")
        if isinstance(self.noise_override, (list, tuple, np.ndarray)):
            self.noise_override = iter(self.noise_override)
        self.noisy_threshold = self.threshold_L + self._noise(2.0 / self.epsilon)

    def _noise(self, scale: float) -> float:
        if self.noise_override == "zero":
            return 0.0
        if self.noise_override is not None:
            return float(next(self.noise_override))
        if self.rng is None:
            raise ParameterError("rng required unless a noise override is set")
        return laplace_from_uniform(self.rng.random(), scale)


def above_threshold_init(
    params: PrivacyParams,
    threshold_L: float,
    horizon_T: int,
    beta: float,
    rng: Optional[np.random.Generator] = None,
    noise_override=None,
) -> AboveThresholdState:
    """Fresh AboveThreshold instance; draws a new noisy threshold."""
    if params.delta != 0.0:
        raise ParameterError("AboveThreshold is a pure-DP mechanism (delta=0)")
    return AboveThresholdState(
        epsilon=params.epsilon,
        threshold_L=threshold_L,
        horizon_T=horizon_T,
        beta=beta,
        rng=rng,
        noise_override=noise_override,
    )


def above_threshold_query(state: AboveThresholdState, q_value: float) -> bool:
    """Feed one query value; returns True on Halt (and halts the instance)."""
    if state.halted:
        raise UsageError("AboveThreshold already halted")
    if state.queries_seen >= state.horizon_T:
        raise UsageError("AboveThreshold horizon exhausted")
    state.queries_seen += 1
    if q_value + state._noise(4.0 / state.epsilon) >= state.noisy_threshold:
        state.halted = True
        return True
    return False


def svt_accuracy_alpha(epsilon: float, horizon_T: int, beta: float) -> float:
    """High-probability accuracy width: 8(ln T + ln(2/beta))/epsilon."""
    return 8.0 * (math.log(horizon_T) + math.log(2.0 / beta)) / epsilon


def tree_levels(horizon_T: int) -> int:
    """Number of levels touched by any element: ceil(log2 T) + 1."""
    if horizon_T < 1:
        raise ParameterError("horizon_T must be >= 1")
    return max(1, (horizon_T - 1).bit_length() + 1)


@dataclass
class BinaryTreeState:
    """Streaming binary tree over a length-T stream of dim-vectors.

    Keeps one active node per level; item t creates exactly one new noisy
    node (at the level of t's lowest set bit) and the prefix estimate c_t
    combines the popcount(t) <= ceil(log2 T)+1 active noisy nodes.
    """

    horizon_T: int
    dim: int
    mode: str  # "laplace-scalar" | "gaussian-vector" | "noiseless"
    noise_scale: float
    sensitivity: float
    rng: Optional[np.random.Generator]
    levels: int = field(init=False)
    t: int = field(default=0, init=False)
    clipped: bool = field(default=False, init=False)
    node_sums: np.ndarray = field(init=False)
    node_noisy: np.ndarray = field(init=False)

    def __post_init__(self):
        self.levels = tree_levels(self.horizon_T)
        self.node_sums = np.zeros((self.levels, self.dim))
        self.node_noisy = np.zeros((self.levels, self.dim))


def binary_tree_init(
    horizon_T: int,
    dim: int,
    params: PrivacyParams,
    sensitivity: float,
    rng: Optional[np.random.Generator] = None,
) -> BinaryTreeState:
    """Calibrate a binary tree release of all prefix sums.

    sensitivity = 0 selects the noiseless test mode.  delta = 0 uses
    per-node Laplace(levels * sensitivity / eps) on scalars; delta > 0 uses
    per-node spherical Gaussians with
    sigma = sensitivity * sqrt(levels) * sqrt(2 ln(1.25/delta)) / eps,
    valid because each element touches at most `levels` nodes.
    """
    if sensitivity < 0:
        raise ParameterError("sensitivity must be nonnegative")
    levels = tree_levels(horizon_T)
    if sensitivity == 0:
        mode, scale = "noiseless", 0.0
    elif params.delta == 0:
        if dim != 1:
            raise ParameterError("delta=0 tree supports scalars only (dim=1)")
        mode = "laplace-scalar"
        scale = levels * sensitivity / params.epsilon
    else:
        mode = "gaussian-vector"
        scale = (
            sensitivity
            * math.sqrt(levels)
            * math.sqrt(2.0 * math.log(1.25 / params.delta))
            / params.epsilon
        )
    if mode != "noiseless" and rng is None:
        raise ParameterError("rng required for a noisy tree")
    return BinaryTreeState(
        horizon_T=horizon_T,
        dim=dim,
        mode=mode,
        noise_scale=scale,
        sensitivity=sensitivity,
        rng=rng,
    )


def binary_tree_add(state: BinaryTreeState, value):
    """Ingest element t and return the noisy prefix sum c_t.

    Values with norm above the sensitivity are clipped (and state.clipped is
    set).  Returns a float when dim == 1, else a dim-vector.
    """
    if state.t >= state.horizon_T:
        raise UsageError("binary tree horizon exhausted")
    v = np.atleast_1d(np.asarray(value, dtype=float)).copy()
    if v.shape != (state.dim,):
        raise ParameterError(f"expected a vector of dim {state.dim}")
    if state.sensitivity > 0:
        norm = float(np.linalg.norm(v))
        if norm > state.sensitivity * (1.0 + 1e-12):
            v *= state.sensitivity / norm
            state.clipped = True
    state.t += 1
    t = state.t
    i = (t & -t).bit_length() - 1
    state.node_sums[i] = v + state.node_sums[:i].sum(axis=0)
    state.node_sums[:i] = 0.0
    state.node_noisy[:i] = 0.0
    if state.mode == "noiseless":
        noise = 0.0
    elif state.mode == "laplace-scalar":
        noise = sample_laplace(state.noise_scale, state.rng, size=1)
    else:
        noise = state.noise_scale * state.rng.standard_normal(state.dim)
    state.node_noisy[i] = state.node_sums[i] + noise
    out = np.zeros(state.dim)
    rem = t
    while rem:
        lv = (rem & -rem).bit_length() - 1
        out += state.node_noisy[lv]
        rem &= rem - 1
    return float(out[0]) if state.dim == 1 else out


def tree_nodes_combined(t: int) -> int:
    """How many noisy nodes the prefix estimate c_t sums (popcount of t)."""
    return bin(t).count("1")
