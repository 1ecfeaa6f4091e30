"""DP online convex optimization over the Euclidean ball.

Two routes: DP-FTRL with binary-tree gradient aggregation (smooth losses),
and a covering reduction that runs an experts algorithm over a rho-net of
the ball.  Loss families are shipped closed-form (huberized quadratics and
smoothed hinges) so gradients are exact and the smoothness/Lipschitz
constants are honest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import adversaries as adv
from . import algorithms as alg
from .accounting import ParameterError, PrivacyLedger, PrivacyParams
from .mechanisms import tree_levels
from ._kernels import active_backend


@dataclass(frozen=True)
class OCOConfig:
    dim: int
    radius_D: float
    lipschitz_L: float
    smooth_beta: float
    lambda_reg: float
    params: PrivacyParams
    cover_rho: Optional[float] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if self.radius_D <= 0 or self.lipschitz_L <= 0 or self.smooth_beta < 0:
            raise ParameterError("radius and Lipschitz constant must be positive")
        if self.lambda_reg <= 0:
            raise ParameterError("lambda must be positive")
        if self.cover_rho is not None and self.cover_rho > self.radius_D:
            raise ParameterError("cover_rho must be <= radius_D")


def ftrl_lambda(
    smooth_beta: float, L: float, D: float, T: int, d: int,
    epsilon: float, delta: float,
) -> float:
    """Regularization strength 32*beta + (beta (L/D)^2 T d ln(T) ln(1/delta) / eps^2)^{1/3}."""
    if min(smooth_beta, L, D, T, d, epsilon) <= 0 or not (0.0 < delta < 1.0):
        raise ParameterError("all arguments must be positive, delta in (0,1)")
    inner = (
        smooth_beta / epsilon ** 2 * (L / D) ** 2
        * T * d * math.log(T) * math.log(1.0 / delta)
    )
    return 32.0 * smooth_beta + inner ** (1.0 / 3.0)


def dp_ftrl_step(g_estimate: np.ndarray, lambda_reg: float, radius_D: float) -> np.ndarray:
    """argmin over the ball of <g, x> + lambda/2 |x|^2 (closed form + projection)."""
    if lambda_reg <= 0:
        raise ParameterError("lambda must be positive")
    u = -np.asarray(g_estimate, dtype=float) / lambda_reg
    norm = float(np.linalg.norm(u))
    if norm > radius_D:
        u *= radius_D / norm
    return u


@dataclass(frozen=True)
class SmoothLossSpec:
    """A sequence of nonnegative, convex, L-Lipschitz, beta-smooth losses.

    family "quadratic": huberized quadratic around a fixed center (zero loss
    at the center, so the sequence is realizable when the center is in the
    ball).  family "hinge": smoothed hinge of <a_t, x> - offset with unit
    directions a_t; realizable iff some ball point keeps every margin
    nonpositive.
    """

    family: str
    dim: int
    horizon_T: int
    beta_smooth: float
    lipschitz_L: float
    center: Optional[np.ndarray] = None
    directions: Optional[np.ndarray] = None
    offset: float = 0.0

    def __post_init__(self):
        if self.family not in ("quadratic", "hinge"):
            raise ParameterError(f"unknown loss family {self.family!r}")
        if self.beta_smooth <= 0 or self.lipschitz_L <= 0:
            raise ParameterError("beta and L must be positive")
        if self.family == "quadratic" and np.shape(self.center) != (self.dim,):
            raise ParameterError("quadratic family needs a dim-vector center")
        if self.family == "hinge" and np.shape(self.directions) != (
            self.horizon_T,
            self.dim,
        ):
            raise ParameterError("hinge family needs T x dim directions")

    def _huber(self, z):
        """Huberized ramp: beta z^2/2 while the slope is below L, linear after."""
        b, L = self.beta_smooth, self.lipschitz_L
        z = np.maximum(z, 0.0)
        return np.where(b * z <= L, 0.5 * b * z * z, L * z - L * L / (2.0 * b))

    def loss(self, t: int, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.family == "quadratic":
            return float(self._huber(np.linalg.norm(x - self.center)))
        z = float(self.directions[t - 1] @ x) - self.offset
        return float(self._huber(z))

    def grad(self, t: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b, L = self.beta_smooth, self.lipschitz_L
        if self.family == "quadratic":
            diff = x - self.center
            r = float(np.linalg.norm(diff))
            if r == 0.0:
                return np.zeros(self.dim)
            return b * diff if b * r <= L else (L / r) * diff
        a = self.directions[t - 1]
        z = float(a @ x) - self.offset
        if z <= 0.0:
            return np.zeros(self.dim)
        return b * z * a if b * z <= L else L * a

    def loss_matrix(self, points: np.ndarray) -> np.ndarray:
        """Losses of every round at every point: [T, n_points]."""
        pts = np.atleast_2d(points)
        if self.family == "quadratic":
            row = self._huber(np.linalg.norm(pts - self.center, axis=1))
            return np.tile(row, (self.horizon_T, 1))
        z = self.directions @ pts.T - self.offset
        return self._huber(z)

    def max_loss_on_ball(self, radius_D: float) -> float:
        """A-priori loss cap over the ball (2D worst-case argument)."""
        return float(self._huber(np.array([2.0 * radius_D]))[0])


def quadratic_losses(
    dim: int, horizon_T: int, beta_smooth: float, lipschitz_L: float, center
) -> SmoothLossSpec:
    return SmoothLossSpec(
        family="quadratic", dim=dim, horizon_T=horizon_T,
        beta_smooth=beta_smooth, lipschitz_L=lipschitz_L,
        center=np.asarray(center, dtype=float),
    )


def hinge_losses(
    dim: int, horizon_T: int, beta_smooth: float, lipschitz_L: float,
    offset: float, seed: int = 0,
) -> SmoothLossSpec:
    """Smoothed hinges with random unit directions drawn from `seed`."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x0C0,)))
    dirs = rng.standard_normal((horizon_T, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return SmoothLossSpec(
        family="hinge", dim=dim, horizon_T=horizon_T,
        beta_smooth=beta_smooth, lipschitz_L=lipschitz_L,
        directions=dirs, offset=offset,
    )


@dataclass
class OCOTrace:
    """Continuous-action game record: iterates and incurred losses."""

    iterates: np.ndarray  # [T, dim]
    losses: np.ndarray  # [T]
    ledger: PrivacyLedger
    composed_epsilon: float
    composed_delta: float
    extras: dict = field(default_factory=dict)


def run_dp_ftrl(
    config: OCOConfig,
    losses: SmoothLossSpec,
    rng=None,
    noiseless: bool = False,
) -> OCOTrace:
    """FTRL over the ball with the gradient prefix sum released by the
    binary tree in Gaussian-vector mode; gradients are clipped to norm L
    (the tree's sensitivity).  noiseless=True is the test mode: zero tree
    noise, which reduces to classical FTRL on clipped gradients.
    """
    if losses.dim != config.dim:
        raise ParameterError("loss dimension mismatch")
    T, dim = losses.horizon_T, config.dim
    levels = tree_levels(T)
    if noiseless:
        sigma = 0.0
        normals = np.zeros((T, dim))
    else:
        if config.params.delta <= 0.0:
            raise ParameterError("private DP-FTRL needs delta > 0 (Gaussian tree)")
        sigma = (
            config.lipschitz_L
            * math.sqrt(levels)
            * math.sqrt(2.0 * math.log(1.25 / config.params.delta))
            / config.params.epsilon
        )
        normals = rng.standard_normal((T, dim))
    if losses.family == "quadratic":
        fam_id, fam_vecs = 0, np.ascontiguousarray(losses.center[None, :])
    else:
        fam_id, fam_vecs = 1, np.ascontiguousarray(losses.directions)
    iterates = np.zeros((T, dim))
    out_losses = np.zeros(T)
    backend = active_backend()
    backend.ftrl_game(
        fam_id, fam_vecs, losses.beta_smooth, config.lipschitz_L, losses.offset,
        config.lambda_reg, config.radius_D, sigma, levels, normals,
        iterates, out_losses,
    )
    ledger = PrivacyLedger()
    if noiseless:
        eps, delta = math.inf, 0.0
    else:
        ledger.charge(config.params.epsilon, config.params.delta)
        eps, delta = config.params.epsilon, config.params.delta
    return OCOTrace(
        iterates=iterates,
        losses=out_losses,
        ledger=ledger,
        composed_epsilon=eps,
        composed_delta=delta,
        extras={"sigma_node": sigma, "levels": levels, "lambda": config.lambda_reg},
    )


def classical_ftrl_iterates(
    config: OCOConfig, losses: SmoothLossSpec
) -> np.ndarray:
    """Direct recomputation of noiseless FTRL, for the exact-equality oracle.

    Scalar arithmetic throughout (explicit sums of squares, libm sqrt) so a
    correct kernel reproduces it bit for bit.
    """
    T, dim = losses.horizon_T, config.dim
    lam, D, L = config.lambda_reg, config.radius_D, config.lipschitz_L
    out = np.zeros((T, dim))
    gsum = [0.0] * dim
    for t in range(1, T + 1):
        x = [-gsum[j] / lam for j in range(dim)]
        nn = math.sqrt(sum(v * v for v in x))
        if nn > D:
            x = [v * (D / nn) for v in x]
        out[t - 1] = x
        g = [float(v) for v in losses.grad(t, np.array(x))]
        gn = math.sqrt(sum(v * v for v in g))
        if gn > L:
            g = [v * (L / gn) for v in g]
        for j in range(dim):
            gsum[j] += g[j]
    return out


def build_cover(dim: int, radius_D: float, rho: float, cap: int = 10 ** 7) -> np.ndarray:
    """rho-net of the ball: axis grid with spacing rho/sqrt(dim); grid nodes
    just outside the ball are radially projected onto it (projection is
    nonexpansive, so coverage at radius rho survives).  Every returned point
    has norm <= radius_D.
    """
    if rho <= 0 or radius_D <= 0:
        raise ParameterError("rho and radius must be positive")
    if rho >= radius_D:
        return np.zeros((1, dim))
    s = rho / math.sqrt(dim)
    n_max = math.ceil(radius_D / s)
    per_axis = 2 * n_max + 1
    if per_axis ** dim > cap or (math.ceil(2 * radius_D / rho) + 1) ** dim > cap:
        raise ParameterError(
            f"cover would have ~{per_axis ** dim:.3g} grid nodes (cap {cap}); "
            "increase rho"
        )
    axis = s * np.arange(-n_max, n_max + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    norms = np.linalg.norm(pts, axis=1)
    keep = norms <= radius_D + rho / 2.0
    pts, norms = pts[keep], norms[keep]
    outside = norms > radius_D
    pts[outside] *= (radius_D / norms[outside])[:, None]
    return np.unique(pts, axis=0)


def run_oco_via_experts(
    config: OCOConfig,
    losses: SmoothLossSpec,
    rng,
    backend: str = "svt",
    beta: float = 0.05,
    lstar: Optional[float] = None,
    run_index: int = 0,
) -> OCOTrace:
    """Reduce OCO to experts on a rho-net and run a DP experts algorithm.

    Expert losses are the losses at the net points, scaled by the a-priori
    cap into [0,1].  backend "svt" runs the sparse-vector algorithm (default
    target lstar = T L rho, the discretization slack); backend "sd" runs the
    shrinking dartboard with its approximate-DP parameters.
    """
    rho = config.cover_rho if config.cover_rho is not None else 1.0 / (
        config.lipschitz_L * losses.horizon_T
    )
    if rho > config.radius_D:
        rho = config.radius_D
    cover = build_cover(config.dim, config.radius_D, rho)
    T, M = losses.horizon_T, cover.shape[0]
    cap = losses.max_loss_on_ball(config.radius_D)
    matrix = losses.loss_matrix(cover)
    scaled = matrix / cap if cap > 0 else matrix
    spec = adv.oblivious(np.clip(scaled, 0.0, 1.0))
    eps, delta = config.params.epsilon, config.params.delta
    if backend == "svt":
        if lstar is None:
            lstar = T * config.lipschitz_L * rho / cap if cap > 0 else 0.0
        svt_cfg = alg.svt_params(T, M, eps, delta, beta, L_star=lstar)
        inner = alg.run_svt_realizable(svt_cfg, spec, rng, run_index)
    elif backend == "sd":
        sd_cfg = alg.sd_params_approx(T, M, eps, delta)
        inner = alg.run_shrinking_dartboard(sd_cfg, spec, rng, run_index)
    else:
        raise ParameterError(f"unknown experts backend {backend!r}")
    iterates = cover[inner.experts]
    raw_losses = matrix[np.arange(T), inner.experts]
    return OCOTrace(
        iterates=iterates,
        losses=raw_losses,
        ledger=inner.ledger,
        composed_epsilon=inner.composed_epsilon,
        composed_delta=inner.composed_delta,
        extras={
            "cover_size": M,
            "rho": rho,
            "loss_cap": cap,
            "discretization_slack": T * config.lipschitz_L * rho,
            "expert_trace": inner,
        },
    )


def best_fixed_loss(losses: SmoothLossSpec, radius_D: float) -> float:
    """min over the ball of the total loss (exact for quadratics; numeric
    ball-constrained minimization for hinges)."""
    if losses.family == "quadratic":
        c = losses.center
        norm = float(np.linalg.norm(c))
        x = c if norm <= radius_D else c * (radius_D / norm)
        return losses.horizon_T * losses.loss(1, x)
    from scipy.optimize import minimize

    def total(x):
        z = losses.directions @ x - losses.offset
        return float(losses._huber(z).sum())

    best = math.inf
    for x0 in (np.zeros(losses.dim), -losses.directions.mean(axis=0)):
        n0 = np.linalg.norm(x0)
        if n0 > radius_D:
            x0 = x0 * (radius_D / n0)
        res = minimize(
            total, x0, method="SLSQP",
            constraints=[{"type": "ineq",
                          "fun": lambda x: radius_D ** 2 - float(x @ x)}],
        )
        best = min(best, float(res.fun))
    return best


def oco_regret(trace: OCOTrace, losses: SmoothLossSpec, radius_D: float) -> float:
    return float(trace.losses.sum() - best_fixed_loss(losses, radius_D))
