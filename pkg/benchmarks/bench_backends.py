"""Benchmark the compiled kernels against the pure-Python reference.

Both backends produce bit-identical traces (enforced by the parity tests);
this script measures the speed gap on the three hot game loops:

    python3 benchmarks/bench_backends.py
"""
import time

import numpy as np

from dpope._kernels import fast, pure


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sd(backend, T=20000, d=32, seed=0):
    rng = np.random.default_rng(seed)
    loss = rng.random((T, d))
    uniforms = rng.random(1 + 3 * (T - 1))
    experts = np.zeros(T, dtype=np.int64)
    mechs = np.zeros(T, dtype=np.int8)
    if backend is pure:
        rows = loss.tolist()
        return _time(
            pure.sd_game, rows.__getitem__, T, d, 0.002, 0.05, T + 1,
            uniforms, experts, mechs,
        )
    return _time(
        backend.sd_game, loss, 0.002, 0.05, T + 1, uniforms, experts, mechs
    )


def bench_svt(backend, T=20000, d=64, seed=1):
    rng = np.random.default_rng(seed)
    loss = rng.random((T, d))
    uniforms = rng.random(1 + 5 * T)
    experts = np.zeros(T, dtype=np.int64)
    mechs = np.zeros(T, dtype=np.int8)
    lbar = np.zeros(T)
    args = (100, 0.005, 0.5, 0.0, 900.0)
    if backend is pure:
        rows = loss.tolist()
        return _time(
            pure.svt_game, rows.__getitem__, T, d, *args, False, 1.0, 0.0, 0,
            uniforms, experts, mechs, lbar,
        )
    return _time(
        backend.svt_game, loss, *args, 0, 1.0, 0.0, 0, uniforms, experts, mechs, lbar
    )


def bench_ftrl(backend, T=100000, dim=2, seed=2):
    rng = np.random.default_rng(seed)
    center = np.ascontiguousarray(rng.standard_normal((1, dim)) * 0.3)
    normals = rng.standard_normal((T, dim))
    iterates = np.zeros((T, dim))
    losses = np.zeros(T)
    levels = max(1, (T - 1).bit_length() + 1)
    return _time(
        backend.ftrl_game, 0, center, 1.0, 1.0, 0.0, 300.0, 1.0, 15.0,
        levels, normals, iterates, losses,
    )


def main():
    rows = [
        ("shrinking dartboard (T=2e4, d=32)", bench_sd),
        ("sparse-vector experts (T=2e4, d=64)", bench_svt),
        ("DP-FTRL + tree (T=1e5, dim=2)", bench_ftrl),
    ]
    print(f"{'kernel':40s} {'pure':>10s} {'compiled':>10s} {'speedup':>9s}")
    for name, fn in rows:
        t_pure = fn(pure)
        if fast is None:
            print(f"{name:40s} {t_pure * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>9s}")
            continue
        t_fast = fn(fast)
        print(
            f"{name:40s} {t_pure * 1e3:9.1f}ms {t_fast * 1e3:9.1f}ms "
            f"{t_pure / t_fast:8.1f}x"
        )


if __name__ == "__main__":
    main()
