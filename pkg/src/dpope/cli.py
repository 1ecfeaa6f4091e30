"""Command-line interface.

Subcommands: run, params, verify-marginal, audit, check-lemmas, sweep.
Exit codes: 0 success, 1 validation error, 2 runtime/I-O error,
3 verification/audit check failed.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import adversaries as adv
from . import harness, oco
from .accounting import ParameterError, UsageError
from ._kernels import backend_name

BUILTIN_ADVERSARIES = (
    "zeros", "uniform", "bernoulli-half", "low-mean", "hide-expert",
    "drifting", "punish-last", "punish-frequent", "quad", "hinge",
)


def resolve_adversary(name: str, T: int, d: int, eps: float, seed: int):
    """Map --adversary to a spec; 'builtin:<name>' or a loss-matrix CSV path."""
    if not name.startswith("builtin:"):
        spec = adv.load_loss_matrix(name)
        if spec.horizon_T != T or spec.d != d:
            raise ParameterError(
                f"matrix {name} is {spec.horizon_T}x{spec.d}, flags say {T}x{d}"
            )
        return spec
    kind = name.split(":", 1)[1]
    if kind == "zeros":
        return adv.zeros(d, T)
    if kind == "uniform":
        return adv.stochastic_uniform(d, T, seed=seed)
    if kind == "bernoulli-half":
        return adv.stochastic_bernoulli(np.full(d, 0.5), T, seed=seed)
    if kind == "low-mean":
        return adv.stochastic_one_low_mean(d, T, j=0, mu_j=0.1, mu_rest=0.5, seed=seed)
    if kind == "hide-expert":
        return adv.realizable_hide_expert(d, eps, T, j=d - 1)
    if kind == "drifting":
        return adv.drifting_good_set(d, T, seed=seed)
    if kind in ("punish-last", "punish-frequent"):
        return adv.adaptive(kind, d, T, seed=seed)
    raise ParameterError(f"unknown builtin adversary {kind!r}")


def resolve_loss_spec(name: str, T: int, d: int, args) -> oco.SmoothLossSpec:
    kind = name.split(":", 1)[1] if name.startswith("builtin:") else name
    if kind == "quad":
        rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(0xCE4,)))
        center = rng.standard_normal(d)
        center *= 0.5 * args.radius / max(1e-12, float(np.linalg.norm(center)))
        return oco.quadratic_losses(d, T, args.smooth_beta, args.lip, center)
    if kind == "hinge":
        return oco.hinge_losses(d, T, args.smooth_beta, args.lip, offset=0.1, seed=args.seed)
    raise ParameterError(f"OCO algorithms need builtin:quad or builtin:hinge, got {name!r}")


def _experiment_from_args(args) -> harness.ExperimentConfig:
    cfg = harness.ExperimentConfig(
        algorithm=args.alg,
        horizon_T=args.T,
        d=args.d,
        epsilon=args.eps,
        delta=args.delta,
        beta=args.beta,
        lstar=args.lstar,
        runs=args.runs,
        master_seed=args.seed,
        out_dir=args.out,
        workers=args.workers,
        adversary_name=args.adversary,
        smooth_beta=args.smooth_beta,
        lipschitz=args.lip,
        radius=args.radius,
        oco_backend=args.oco_backend,
        mw_eta=args.eta,
    )
    if args.alg in ("ftrl", "oco-experts"):
        cfg.loss_spec = resolve_loss_spec(args.adversary, args.T, args.d, args)
    else:
        cfg.adversary_spec = resolve_adversary(
            args.adversary, args.T, args.d, args.eps, args.seed
        )
    return cfg


def _add_common(p, with_adversary=True):
    p.add_argument("--alg", required=True, choices=harness.ALGORITHMS)
    if with_adversary:
        p.add_argument("--adversary", default="builtin:zeros",
                       help="builtin:<name> or a loss-matrix CSV path")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--lstar", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=None, help="mw baseline step size")
    p.add_argument("--smooth-beta", dest="smooth_beta", type=float, default=1.0)
    p.add_argument("--lip", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--oco-backend", dest="oco_backend", default="svt", choices=("svt", "sd"))
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dpope",
        description="Differentially private online prediction from experts: "
        "algorithms plus a Monte-Carlo verification harness "
        f"(kernel backend: {backend_name()}).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play seeded Monte-Carlo games and write CSVs")
    _add_common(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("params", help="print derived algorithm parameters")
    _add_common(p, with_adversary=False)

    p = sub.add_parser("verify-marginal", help="dartboard marginal vs exact MW law")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("audit", help="exact small-instance privacy audit")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--diff-round", dest="diff_round", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("check-lemmas", help="concentration-bound tail checks")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="grid of experiments from a key=value config")
    p.add_argument("--config", required=True)
    return ap


def cmd_run(args) -> int:
    cfg = _experiment_from_args(args)
    summary = harness.run_experiment(cfg)
    agg = summary.aggregates
    print(
        f"{cfg.algorithm}: runs={cfg.runs} regret mean={agg['regret_mean']:.6g} "
        f"std={agg['regret_std']:.6g} switches mean={agg['switches_mean']:.6g}"
    )
    print(f"outputs in {cfg.out_dir}")
    return 0


def cmd_params(args) -> int:
    args.adversary = "builtin:zeros"
    cfg = harness.ExperimentConfig(
        algorithm=args.alg, horizon_T=args.T, d=args.d, epsilon=args.eps,
        delta=args.delta, beta=args.beta, lstar=args.lstar, runs=1,
        master_seed=args.seed, smooth_beta=args.smooth_beta,
        lipschitz=args.lip, radius=args.radius, oco_backend=args.oco_backend,
        mw_eta=args.eta,
    )
    for key, value in harness.derive_parameters(cfg).items():
        if isinstance(value, (int, np.integer)):
            print(f"{key}={int(value)}")
        elif isinstance(value, float):
            print(f"{key}={value!r}")
        else:
            print(f"{key}={value}")
    return 0


def cmd_verify_marginal(args) -> int:
    report = harness.verify_marginal(
        args.T, args.d, args.p, args.eta, args.runs, args.seed, K=args.K
    )
    status = "PASS" if report.passed else "FAIL"
    vac = " (theory term vacuous)" if report.vacuous else ""
    print(
        f"max TV = {report.max_tv:.6g} at round {report.worst_round}; "
        f"bound = {report.bound:.6g} "
        f"(theory {report.theory_term:.3g} + sampling {report.sampling_slack:.3g})"
        f"{vac}: {status}"
    )
    return 0 if report.passed else 3


def cmd_audit(args) -> int:
    report = harness.audit_all_single_round_pairs(
        args.T, args.d, args.eta, args.p, args.diff_round
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# dpope-audit v1\n")
        fh.write(f"T={args.T}\nd={args.d}\neta={args.eta!r}\np={args.p!r}\n")
        fh.write(f"diff_round={args.diff_round}\n")
        fh.write(f"pairs_checked={report.pairs_checked}\n")
        fh.write(f"trajectories={report.n_trajectories}\n")
        fh.write(f"max_log_ratio={report.max_log_ratio!r}\n")
        fh.write(f"bound={report.bound!r}\n")
        fh.write(f"passed={report.passed}\n")
    print(
        f"audited {report.pairs_checked} neighboring pairs: "
        f"max |log ratio| = {report.max_log_ratio:.6g} vs bound {report.bound:.6g}: "
        f"{'PASS' if report.passed else 'FAIL'}"
    )
    return 0 if report.passed else 3


def cmd_check_lemmas(args) -> int:
    checks = harness.check_concentration_lemmas(args.runs, args.seed)
    ok = True
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        ok &= c.passed
        print(f"{c.name} {c.params}: empirical {c.empirical:.3g} <= bound {c.bound:.3g}: {status}")
    return 0 if ok else 3


def cmd_sweep(args) -> int:
    base, points = harness.parse_sweep_config(args.config)
    out_dir = base.get("out", "sweep_out")
    os.makedirs(out_dir, exist_ok=True)
    summaries = []
    for idx, overrides in enumerate(points):
        merged = dict(base)
        merged.update(overrides)
        ns = argparse.Namespace(
            alg=merged["alg"],
            adversary=merged.get("adversary", "builtin:zeros"),
            T=int(merged["T"]),
            d=int(merged["d"]),
            eps=float(merged["eps"]),
            delta=float(merged.get("delta", 0.0)),
            beta=float(merged.get("beta", 0.05)),
            lstar=float(merged.get("lstar", 0.0)),
            eta=float(merged["eta"]) if "eta" in merged else None,
            smooth_beta=float(merged.get("smooth_beta", 1.0)),
            lip=float(merged.get("lip", 1.0)),
            radius=float(merged.get("radius", 1.0)),
            oco_backend=merged.get("oco_backend", "svt"),
            seed=int(merged.get("seed", 0)),
            runs=int(merged.get("runs", 1)),
            out=os.path.join(out_dir, f"point_{idx}"),
            workers=int(merged.get("workers", 1)),
        )
        cfg = _experiment_from_args(ns)
        summaries.append(harness.run_experiment(cfg))
    x_key = base.get("x", "eps")
    y_key = base.get("y", "regret")
    plot_path = os.path.join(out_dir, "sweep.dat")
    harness.emit_plot_data(summaries, x_key, y_key, plot_path)
    print(f"{len(summaries)} grid points -> {plot_path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "params": cmd_params,
        "verify-marginal": cmd_verify_marginal,
        "audit": cmd_audit,
        "check-lemmas": cmd_check_lemmas,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except (ParameterError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
