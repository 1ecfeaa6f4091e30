"""Experiment orchestration and verification harness.

Seeded Monte-Carlo experiment runner with CSV outputs, the exact
marginal-distribution verifier for the shrinking dartboard, the exact
small-instance privacy auditor (rational arithmetic), tail checks for the
concentration lemmas backing the analyses, and plot-data emission.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import adversaries as adv
from . import algorithms as alg
from . import oco as oco_mod
from .accounting import ParameterError, PrivacyParams
from .rng import run_stream
from ._kernels import active_backend, backend_name, pure
from ._kernels.pure import MECHANISM_LABELS

TRACE_HEADER = "# dpope-trace v1"
SUMMARY_HEADER = "# dpope-summary v1"
PLOT_HEADER = "# dpope-plot v1"


def _fmt(x) -> str:
    """Serialize one value; decimals use 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


# ---------------------------------------------------------------------------
# experiment runner

ALGORITHMS = ("mw", "sd", "sd-batch", "limited", "svt", "svt-ada", "ftrl", "oco-experts")


@dataclass
class ExperimentConfig:
    """One Monte-Carlo experiment: an algorithm, a loss source, seeds, output."""

    algorithm: str
    horizon_T: int
    d: int
    epsilon: float
    delta: float = 0.0
    beta: float = 0.05
    lstar: float = 0.0
    runs: int = 1
    master_seed: int = 0
    out_dir: Optional[str] = None
    workers: int = 1
    adversary_name: str = "builtin:zeros"
    adversary_spec: Optional[adv.AdversarySpec] = None
    loss_spec: Optional[oco_mod.SmoothLossSpec] = None
    smooth_beta: float = 1.0
    lipschitz: float = 1.0
    radius: float = 1.0
    oco_backend: str = "svt"
    mw_eta: Optional[float] = None

    def __post_init__(self):
        if self.runs < 1:
            raise ParameterError("runs must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}")


def default_mw_eta(T: int, d: int) -> float:
    return min(0.4, math.sqrt(math.log(max(d, 2)) / T))


def derive_parameters(cfg: ExperimentConfig) -> dict:
    """The derived algorithm parameters the `params` subcommand prints."""
    T, d, eps = cfg.horizon_T, cfg.d, cfg.epsilon
    a = cfg.algorithm
    if a == "mw":
        return {"eta": cfg.mw_eta if cfg.mw_eta is not None else default_mw_eta(T, d)}
    if a in ("sd", "sd-batch"):
        if a == "sd-batch":
            c = alg.sd_params_batched(T, d, eps, cfg.delta)
        elif cfg.delta > 0:
            c = alg.sd_params_approx(T, d, eps, cfg.delta)
        else:
            c = alg.sd_params_pure(T, d, eps)
        out = {"eta": c.eta, "p": c.p, "K": c.K, "B": c.B}
        if c.epsilon0 is not None:
            out["eps0"] = c.epsilon0
        return out
    if a == "limited":
        return {
            "eps_per_update": eps,
            "n_updates": len(alg.limited_updates_schedule(T)),
        }
    if a == "svt":
        c = alg.svt_params(T, d, eps, cfg.delta, cfg.beta, cfg.lstar)
        return {
            "K": c.K_switches,
            "eta": c.eta,
            "L": c.threshold_L,
            "B": c.svt_log_term,
            "alpha": 16.0 * c.svt_log_term / eps,
        }
    if a == "svt-ada":
        c = alg.svt_adaptive_params(T, d, eps, cfg.beta)
        return {
            "eps0": c.epsilon0,
            "K": c.K_switches,
            "eta": c.eta,
            "B": c.svt_log_term,
            "threshold_offset": c.threshold_offset,
            "laplace_scale": c.laplace_scale,
            "double_margin": c.double_margin,
            "max_epochs": c.max_epochs,
        }
    if a == "ftrl":
        lam = oco_mod.ftrl_lambda(
            cfg.smooth_beta, cfg.lipschitz, cfg.radius, T, d, eps,
            cfg.delta if cfg.delta > 0 else 1e-6,
        )
        from .mechanisms import tree_levels

        levels = tree_levels(T)
        sigma = (
            cfg.lipschitz * math.sqrt(levels)
            * math.sqrt(2.0 * math.log(1.25 / (cfg.delta if cfg.delta > 0 else 1e-6)))
            / eps
        )
        return {"lambda": lam, "sigma_node": sigma, "levels": levels}
    # oco-experts
    rho = 1.0 / (cfg.lipschitz * T)
    return {"rho": rho, "inner": cfg.oco_backend}


def _oco_config(cfg: ExperimentConfig) -> oco_mod.OCOConfig:
    delta = cfg.delta if cfg.delta > 0 else 1e-6
    lam = oco_mod.ftrl_lambda(
        cfg.smooth_beta, cfg.lipschitz, cfg.radius, cfg.horizon_T, cfg.d,
        cfg.epsilon, delta,
    )
    return oco_mod.OCOConfig(
        dim=cfg.d,
        radius_D=cfg.radius,
        lipschitz_L=cfg.lipschitz,
        smooth_beta=cfg.smooth_beta,
        lambda_reg=lam,
        params=PrivacyParams(cfg.epsilon, delta),
    )


def run_one(cfg: ExperimentConfig, i: int):
    """Play run i of the experiment; returns a GameTrace or OCOTrace."""
    rng = run_stream(cfg.master_seed, i)
    a = cfg.algorithm
    if a in ("mw", "sd", "sd-batch", "limited", "svt", "svt-ada"):
        spec = cfg.adversary_spec
        if spec is None:
            raise ParameterError("experts algorithms need an adversary spec")
        if a == "mw":
            eta = cfg.mw_eta if cfg.mw_eta is not None else default_mw_eta(cfg.horizon_T, cfg.d)
            return alg.run_mw(eta, spec, rng, i)
        if a in ("sd", "sd-batch"):
            if a == "sd-batch":
                c = alg.sd_params_batched(cfg.horizon_T, cfg.d, cfg.epsilon, cfg.delta)
            elif cfg.delta > 0:
                c = alg.sd_params_approx(cfg.horizon_T, cfg.d, cfg.epsilon, cfg.delta)
            else:
                c = alg.sd_params_pure(cfg.horizon_T, cfg.d, cfg.epsilon)
            return alg.run_shrinking_dartboard(c, spec, rng, i)
        if a == "limited":
            return alg.run_limited_updates(
                spec, PrivacyParams(cfg.epsilon, cfg.delta), rng, i
            )
        if a == "svt":
            c = alg.svt_params(
                cfg.horizon_T, cfg.d, cfg.epsilon, cfg.delta, cfg.beta, cfg.lstar
            )
            return alg.run_svt_realizable(c, spec, rng, i)
        return alg.run_svt_adaptive(
            cfg.horizon_T, cfg.d, cfg.epsilon, cfg.beta, spec, rng, i
        )
    losses = cfg.loss_spec
    if losses is None:
        raise ParameterError("OCO algorithms need a loss spec")
    if a == "ftrl":
        return oco_mod.run_dp_ftrl(_oco_config(cfg), losses, rng)
    return oco_mod.run_oco_via_experts(
        _oco_config(cfg), losses, rng, backend=cfg.oco_backend, beta=cfg.beta,
        run_index=i,
    )


def _trace_row(cfg: ExperimentConfig, i: int, trace, oco_baseline=None) -> dict:
    if isinstance(trace, alg.GameTrace):
        return {
            "run": i,
            "regret": alg.regret(trace),
            "switches": trace.switch_count,
            "eps_composed": trace.composed_epsilon,
            "delta_composed": trace.composed_delta,
        }
    baseline = oco_baseline if oco_baseline is not None else 0.0
    return {
        "run": i,
        "regret": float(trace.losses.sum() - baseline),
        "switches": int(trace.extras.get("expert_trace").switch_count)
        if "expert_trace" in trace.extras
        else 0,
        "eps_composed": trace.composed_epsilon,
        "delta_composed": trace.composed_delta,
    }


def _write_trace_csv(path: str, trace) -> None:
    lines = [TRACE_HEADER, "t,expert,loss,switch,mechanism"]
    if isinstance(trace, alg.GameTrace):
        for t in range(trace.horizon):
            lines.append(
                "%d,%d,%s,%d,%s"
                % (
                    t + 1,
                    trace.experts[t],
                    _fmt(trace.losses[t]),
                    trace.switches[t],
                    MECHANISM_LABELS[int(trace.mechanism[t])],
                )
            )
    else:
        inner = trace.extras.get("expert_trace")
        for t in range(len(trace.losses)):
            expert = int(inner.experts[t]) if inner is not None else -1
            sw = int(inner.switches[t]) if inner is not None else 0
            mech = MECHANISM_LABELS[int(inner.mechanism[t])] if inner is not None else "ftrl"
            lines.append(
                "%d,%d,%s,%d,%s" % (t + 1, expert, _fmt(trace.losses[t]), sw, mech)
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _bounds(cfg: ExperimentConfig) -> dict:
    T, d = cfg.horizon_T, cfg.d
    a = cfg.algorithm
    out = {}
    if a in ("sd", "sd-batch"):
        try:
            derived = derive_parameters(cfg)
            c_eta, c_p, c_B = derived["eta"], derived["p"], derived["B"]
            out["regret_bound"] = (
                c_eta * T + c_B * math.log(d) / c_eta
                + 2.0 * T * math.exp(-T * c_p / (3.0 * c_B))
            )
        except ParameterError:
            pass
    elif a == "mw":
        eta = cfg.mw_eta if cfg.mw_eta is not None else default_mw_eta(T, d)
        out["regret_bound_vs_lstar"] = math.log(d) / eta  # plus (1+eta) L*
    elif a == "limited":
        out["regret_bound"] = alg.limited_updates_regret_bound(T, d, cfg.epsilon)
    elif a == "svt":
        out["switch_budget"] = alg.svt_switch_budget_value(d, cfg.beta)
    return out


@dataclass
class RunSummary:
    algorithm: str
    config: dict
    rows: list
    aggregates: dict
    bounds: dict = field(default_factory=dict)


def _aggregate(rows: list) -> dict:
    regrets = np.array([r["regret"] for r in rows], dtype=float)
    switches = np.array([r["switches"] for r in rows], dtype=float)
    return {
        "regret_mean": float(regrets.mean()),
        "regret_std": float(regrets.std(ddof=0)),
        "regret_q05": float(np.quantile(regrets, 0.05)),
        "regret_q50": float(np.quantile(regrets, 0.50)),
        "regret_q95": float(np.quantile(regrets, 0.95)),
        "switches_mean": float(switches.mean()),
        "switches_max": float(switches.max()),
    }


def _run_indexed(args):
    cfg, i = args
    return i, run_one(cfg, i)


def run_experiment(cfg: ExperimentConfig, write_traces: bool = True) -> RunSummary:
    """Play `runs` independent seeded games and aggregate.

    Deterministic given the config: run i always uses the stream derived
    from (master_seed, i), whether executed sequentially or in a pool.
    """
    oco_baseline = None
    if cfg.algorithm in ("ftrl", "oco-experts") and cfg.loss_spec is not None:
        oco_baseline = oco_mod.best_fixed_loss(cfg.loss_spec, cfg.radius)
    indexed = [(cfg, i) for i in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = dict(pool.map(_run_indexed, indexed, chunksize=8))
        traces = [results[i] for i in range(cfg.runs)]
    else:
        traces = [run_one(cfg, i) for i in range(cfg.runs)]
    rows = [_trace_row(cfg, i, tr, oco_baseline) for i, tr in enumerate(traces)]
    if cfg.out_dir and write_traces:
        os.makedirs(os.path.join(cfg.out_dir, "runs"), exist_ok=True)
        for i, tr in enumerate(traces):
            _write_trace_csv(os.path.join(cfg.out_dir, "runs", f"run_{i}.csv"), tr)
        write_summary_csv(os.path.join(cfg.out_dir, "summary.csv"), rows)
    summary = RunSummary(
        algorithm=cfg.algorithm,
        config={
            "algorithm": cfg.algorithm,
            "adversary": cfg.adversary_name,
            "T": cfg.horizon_T,
            "d": cfg.d,
            "eps": cfg.epsilon,
            "delta": cfg.delta,
            "beta": cfg.beta,
            "lstar": cfg.lstar,
            "runs": cfg.runs,
            "seed": cfg.master_seed,
            "backend": backend_name(),
        },
        rows=rows,
        aggregates=_aggregate(rows),
        bounds=_bounds(cfg),
    )
    return summary


def write_summary_csv(path: str, rows: list) -> None:
    lines = [SUMMARY_HEADER, "run,regret,switches,eps_composed,delta_composed"]
    for r in rows:
        lines.append(
            "%d,%s,%d,%s,%s"
            % (
                r["run"],
                _fmt(r["regret"]),
                r["switches"],
                _fmt(r["eps_composed"]),
                _fmt(r["delta_composed"]),
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# marginal-distribution verifier


@dataclass
class MarginalReport:
    max_tv: float
    worst_round: int
    theory_term: float
    sampling_slack: float
    bound: float
    vacuous: bool
    passed: bool
    per_round_tv: np.ndarray


def marginal_sampling_slack(runs: int, d: int, T: int) -> float:
    return math.sqrt(d * math.log(2.0 * d * T) / (2.0 * runs))


def verify_marginal(
    T: int,
    d: int,
    p: float,
    eta: float,
    runs: int,
    seed: int,
    K: Optional[int] = None,
    matrix: Optional[np.ndarray] = None,
) -> MarginalReport:
    """Check that dartboard marginals track the exact MW distribution.

    Plays `runs` seeded games on a fixed oblivious sequence, estimates the
    per-round play distribution, and compares with the closed-form P^t.
    Pass iff max-over-t TV <= exp(-Tp/3) + sampling slack; the check is
    flagged vacuous when that bound reaches 1 (TV can never exceed it).
    K defaults to T+1 (no cap).
    """
    if T > 200 or d > 16:
        raise ParameterError("verifier limited to T <= 200, d <= 16")
    if K is None:
        K = T + 1
    if matrix is None:
        mrng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(0x3A6,))
        )
        matrix = mrng.random((T, d))
    matrix = np.ascontiguousarray(matrix, dtype=float)
    exact = alg.mw_exact_distributions(matrix, eta)
    counts = np.zeros((T, d))
    backend = active_backend()
    rows = matrix.tolist()
    n_uniform = 1 + 3 * (T - 1) if T > 1 else 1
    experts = np.zeros(T, dtype=np.int64)
    mech = np.zeros(T, dtype=np.int8)
    tgrid = np.arange(T)
    for i in range(runs):
        rng = run_stream(seed, i)
        uniforms = rng.random(n_uniform)
        if backend is pure:
            pure.sd_game(rows.__getitem__, T, d, eta, p, K, uniforms, experts, mech)
        else:
            backend.sd_game(matrix, eta, p, K, uniforms, experts, mech)
        counts[tgrid, experts] += 1.0
    emp = counts / runs
    tv = 0.5 * np.abs(emp - exact).sum(axis=1)
    theory = math.exp(-T * p / 3.0)
    slack = marginal_sampling_slack(runs, d, T)
    max_tv = float(tv.max())
    bound = theory + slack
    return MarginalReport(
        max_tv=max_tv,
        worst_round=int(tv.argmax()) + 1,
        theory_term=theory,
        sampling_slack=slack,
        bound=bound,
        vacuous=bound >= 1.0,
        passed=max_tv <= bound,
        per_round_tv=tv,
    )


# ---------------------------------------------------------------------------
# exact privacy auditor (small instances, rational arithmetic)


def _as_fraction(x) -> Fraction:
    """Decimal-faithful conversion: 0.4 becomes 2/5, not the binary float."""
    return Fraction(str(x))


def trajectory_distribution(matrix01: np.ndarray, eta, p, K: int) -> dict:
    """Exact output distribution of the dartboard over observable trajectories.

    The observable is (x_1, (z_2, x_2), ..., (z_T, x_T)) where z_t is the
    keep indicator after both lazy stages.  Losses must be 0/1-valued so all
    probabilities are exact rationals.  Returns {trajectory: Fraction}.
    """
    m = np.asarray(matrix01)
    T, d = m.shape
    if not np.all((m == 0) | (m == 1)):
        raise ParameterError("exact auditor requires {0,1}-valued losses")
    if T > 4 or d > 3:
        raise ParameterError("exact auditor limited to T <= 4, d <= 3")
    eta_f, p_f = _as_fraction(eta), _as_fraction(p)
    base = 1 - eta_f  # weight decay per unit loss
    losses = [[int(v) for v in row] for row in m]
    # cumulative losses before round t (1-based): cum[t][x]
    cum = [[0] * d]
    for t in range(T):
        cum.append([cum[-1][x] + losses[t][x] for x in range(d)])
    probs = []  # P^t as Fractions, t = 1..T
    for t in range(1, T + 1):
        w = [base ** cum[t - 1][x] for x in range(d)]
        W = sum(w)
        probs.append([wi / W for wi in w])
    out: dict = {}

    def rec(t, x, k, traj, prob):
        if t == T:
            out[traj] = out.get(traj, Fraction(0)) + prob
            return
        # transition into round t+1 (1-based), held expert x
        keep = (1 - p_f) * base ** losses[t - 1][x]
        rec(t + 1, x, k, traj + ((1, x),), prob * keep)
        stay_prob = 1 - keep
        if k < K:
            for x2 in range(d):
                rec(
                    t + 1, x2, k + 1,
                    traj + ((0, x2),), prob * stay_prob * probs[t][x2],
                )
        else:
            rec(t + 1, x, k, traj + ((0, x),), prob * stay_prob)

    for x1 in range(d):
        rec(1, x1, 1, ((1, x1),), Fraction(1, d))
    assert sum(out.values()) == 1
    return out


@dataclass
class AuditReport:
    max_log_ratio: float
    bound: float
    passed: bool
    n_trajectories: int
    pairs_checked: int


def audit_privacy_exact(
    eta: float,
    p: float,
    seq_a: np.ndarray,
    seq_b: np.ndarray,
    K: Optional[int] = None,
    claimed_epsilon: Optional[float] = None,
) -> AuditReport:
    """Exact max |log P_A(traj)/P_B(traj)| over the full output space.

    Default claim is the pure-DP dartboard bound eta/p + 16 T p eta (the
    sequences should be single-round neighbors for that claim to apply).
    """
    T = np.asarray(seq_a).shape[0]
    if np.asarray(seq_b).shape != np.asarray(seq_a).shape:
        raise ParameterError("sequences must share a shape")
    if K is None:
        K = max(1, math.ceil(4.0 * T * p))
    da = trajectory_distribution(seq_a, eta, p, K)
    db = trajectory_distribution(seq_b, eta, p, K)
    assert set(da) == set(db)
    hi = Fraction(1)
    lo = Fraction(1)
    for traj, pa in da.items():
        ratio = pa / db[traj]
        if ratio > hi:
            hi = ratio
        if ratio < lo:
            lo = ratio
    max_log = max(math.log(hi), -math.log(lo))
    bound = (
        claimed_epsilon
        if claimed_epsilon is not None
        else eta / p + 16.0 * T * p * eta
    )
    return AuditReport(
        max_log_ratio=max_log,
        bound=bound,
        passed=max_log <= bound + 1e-12,
        n_trajectories=len(da),
        pairs_checked=1,
    )


def neighbor_pairs_single_round(T: int, d: int, diff_round: int):
    """All ordered {0,1}-loss sequence pairs differing exactly at diff_round."""
    if not (1 <= diff_round <= T):
        raise ParameterError("diff_round outside horizon")
    n_rows = 2 ** d
    rows = [[(r >> j) & 1 for j in range(d)] for r in range(n_rows)]
    seqs = []

    def build(t, acc):
        if t == T:
            seqs.append(list(acc))
            return
        for r in range(n_rows):
            acc.append(rows[r])
            build(t + 1, acc)
            acc.pop()

    build(0, [])
    for s in seqs:
        for alt in range(n_rows):
            if rows[alt] != s[diff_round - 1]:
                s2 = [list(r) for r in s]
                s2[diff_round - 1] = rows[alt]
                yield np.array(s), np.array(s2)


def audit_all_single_round_pairs(
    T: int, d: int, eta: float, p: float, diff_round: int, K: Optional[int] = None
) -> AuditReport:
    """Exhaustive audit over every single-round neighboring pair at one round."""
    if K is None:
        K = max(1, math.ceil(4.0 * T * p))
    cache: dict = {}

    def dist(seq):
        key = seq.tobytes()
        if key not in cache:
            cache[key] = trajectory_distribution(seq, eta, p, K)
        return cache[key]

    worst = 0.0
    pairs = 0
    n_traj = 0
    for sa, sb in neighbor_pairs_single_round(T, d, diff_round):
        da, db = dist(sa), dist(sb)
        n_traj = len(da)
        hi = Fraction(1)
        for traj, pa in da.items():
            ratio = pa / db[traj]
            if ratio > hi:
                hi = ratio
        worst = max(worst, math.log(hi))
        pairs += 1
    bound = eta / p + 16.0 * T * p * eta
    return AuditReport(
        max_log_ratio=worst,
        bound=bound,
        passed=worst <= bound + 1e-12,
        n_trajectories=n_traj,
        pairs_checked=pairs,
    )


# ---------------------------------------------------------------------------
# concentration lemmas


@dataclass
class LemmaCheck:
    name: str
    params: dict
    bound: float
    empirical: float
    passed: bool


def check_concentration_lemmas(runs: int, seed: int) -> list[LemmaCheck]:
    """Monte-Carlo tail frequencies against the Chernoff and geometric-sum
    bounds used by the switch-count analyses."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xC0C,)))
    checks = []
    # Chernoff upper tail: P(X > (1+delta) n p) <= exp(-n p delta^2 / 3)
    for n, pp, dd in ((1000, 0.1, 1.0), (200, 0.3, 0.5), (500, 0.05, 0.8)):
        x = rng.binomial(n, pp, size=runs)
        emp = float(np.mean(x > (1.0 + dd) * n * pp))
        bound = math.exp(-n * pp * dd * dd / 3.0)
        slack = 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / runs)
        checks.append(
            LemmaCheck(
                name="chernoff-upper",
                params={"n": n, "p": pp, "delta": dd},
                bound=bound,
                empirical=emp,
                passed=emp <= bound + slack,
            )
        )
    # Geometric sums: P(sum of n geometrics > 2k/p) <= exp(-k/4) for k >= n
    for n, k, pp in ((10, 10, 1.0 / 3.0), (10, 20, 1.0 / 3.0), (5, 5, 0.5)):
        w = rng.geometric(pp, size=(runs, n)).sum(axis=1)
        emp = float(np.mean(w > 2.0 * k / pp))
        bound = math.exp(-k / 4.0)
        slack = 3.0 * math.sqrt(max(bound * (1 - bound), 1e-12) / runs)
        checks.append(
            LemmaCheck(
                name="geometric-sum",
                params={"n": n, "k": k, "p": pp},
                bound=bound,
                empirical=emp,
                passed=emp <= bound + slack,
            )
        )
    # degenerate geometric: p = 1 means W = n exactly
    w = rng.geometric(1.0, size=(runs, 7)).sum(axis=1)
    checks.append(
        LemmaCheck(
            name="geometric-degenerate",
            params={"n": 7, "p": 1.0},
            bound=0.0,
            empirical=float(np.mean(w != 7)),
            passed=bool(np.all(w == 7)),
        )
    )
    return checks


# ---------------------------------------------------------------------------
# plot data and sweeps


def emit_plot_data(summaries: list, x_key: str, y_key: str, path: str) -> None:
    """Write (x, y, yerr) rows from a sweep of summaries, ordered by x."""
    if not summaries:
        raise ParameterError("empty sweep")
    rows = []
    for s in summaries:
        if x_key not in s.config:
            raise ParameterError(f"axis {x_key!r} missing from a summary")
        x = float(s.config[x_key])
        T = float(s.config["T"])
        mean = s.aggregates["regret_mean"]
        err = s.aggregates["regret_std"] / math.sqrt(max(1, s.config["runs"]))
        if y_key == "regret":
            y, yerr = mean, err
        elif y_key == "normalized_regret":
            y, yerr = mean / T, err / T
        elif y_key == "logT_regret":
            if mean <= 0:
                y, yerr = float("-inf"), 0.0
            else:
                y, yerr = math.log(mean) / math.log(T), err / (mean * math.log(T))
        else:
            raise ParameterError(f"unknown y axis {y_key!r}")
        rows.append((x, y, yerr))
    rows.sort(key=lambda r: r[0])
    lines = [PLOT_HEADER, f"# x={x_key} y={y_key}"]
    for x, y, yerr in rows:
        lines.append("%s %s %s" % (_fmt(x), _fmt(y), _fmt(yerr)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_sweep_config(path: str) -> tuple[dict, list]:
    """line-oriented key=value; point.<i>.<key>=value builds grid points."""
    base: dict = {}
    points: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParameterError(f"sweep config: bad line {line!r}")
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if key.startswith("point."):
                parts = key.split(".")
                if len(parts) != 3:
                    raise ParameterError(f"sweep config: bad point key {key!r}")
                idx = int(parts[1])
                points.setdefault(idx, {})[parts[2]] = value
            else:
                base[key] = value
    if not points:
        raise ParameterError("sweep config defines no point.<i>.<key> entries")
    return base, [points[i] for i in sorted(points)]
