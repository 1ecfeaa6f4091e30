"""Pure-Python game-loop kernels (reference implementation).

The compiled twin in ``_fast.pyx`` mirrors this module line for line.  Both
consume pre-drawn arrays of uniforms/normals with a fixed per-round slot
layout, and use only libm scalar math (math.exp / math.log here, C exp / log
there), so traces are bit-identical across backends.  Any change here must be
replicated in the .pyx file; tests/test_kernels_parity.py enforces the match.

Slot layouts (uniform draws per run):

  mw_game   : 1 draw per round (categorical sample from P^t).
  sd_game   : slot 0 = initial expert; rounds t=2..T use 3 slots each,
              [stage-1 Bernoulli, stage-2 ratio Bernoulli, resample],
              consumed positionally whether or not the branch is taken.
  svt_game  : slot 0 = initial expert; round t uses 5 slots at
              1 + 5*(t-1): [query noise, exp-mech draw, fresh threshold,
              doubling Laplace, restart expert].
  ftrl_game : no uniforms; one dim-vector of standard normals per round
              (noise for the tree node created at that round).
"""
from __future__ import annotations

from math import exp, fabs, log, sqrt

# mechanism codes recorded per round (shared by both backends)
MECH_INIT = 0
MECH_HOLD = 1
MECH_RESAMPLE = 2  # shrinking dartboard: z_t = 0 and budget left
MECH_FROZEN = 3  # budget exhausted, z_t = 0 ignored
MECH_EM = 4  # sparse-vector: exponential mechanism fired
MECH_DOUBLE = 5  # adaptive sparse-vector: fired and doubled the estimate

MECHANISM_LABELS = {
    MECH_INIT: "init",
    MECH_HOLD: "hold",
    MECH_RESAMPLE: "resample",
    MECH_FROZEN: "frozen",
    MECH_EM: "em",
    MECH_DOUBLE: "double",
}


def bernoulli_from_uniform(u: float, q: float) -> int:
    """1 with probability q for u ~ U[0,1)."""
    return 1 if u < q else 0


def laplace_from_uniform(u: float, scale: float) -> float:
    """Inverse-CDF Laplace(scale) transform of u ~ U[0,1)."""
    v = u - 0.5
    a = 1.0 - 2.0 * fabs(v)
    if a < 1e-300:  # u at the very edge of [0,1); keep the draw finite
        a = 1e-300
    x = -scale * log(a)
    return x if v >= 0.0 else -x


def categorical_from_logits(logits, u: float) -> int:
    """Sample index i with probability softmax(logits)[i], via one uniform.

    Max-subtracted, linear-order summation; the inverse-CDF walk uses the
    same left-to-right order, so the result is a deterministic function of
    (logits, u) reproduced exactly by the compiled backend.
    """
    n = len(logits)
    m = logits[0]
    for i in range(1, n):
        if logits[i] > m:
            m = logits[i]
    total = 0.0
    for i in range(n):
        total += exp(logits[i] - m)
    target = u * total
    acc = 0.0
    for i in range(n):
        acc += exp(logits[i] - m)
        if target < acc:
            return i
    return n - 1


def mw_game(row_at, T: int, d: int, eta: float, uniforms, experts_out) -> None:
    """Multiplicative-weights baseline: sample x_t from P^t each round.

    row_at(t) returns the 0-based round-t loss row as a list; for oblivious
    play this is plain matrix indexing, for adaptive adversaries a closure
    over the experts chosen so far.
    """
    us = uniforms.tolist()
    ln1e = log(1.0 - eta)
    logw = [0.0] * d
    for t in range(T):
        if t > 0:
            prev = row_at(t - 1)
            for i in range(d):
                logw[i] += prev[i] * ln1e
        experts_out[t] = categorical_from_logits(logw, us[t])


def sd_game(row_at, T: int, d: int, eta: float, p: float, K: int,
            uniforms, experts_out, mech_out) -> int:
    """Private shrinking dartboard; returns the number of resample events.

    K is the switching budget; pass K > T to disable the cap.  The counter k
    starts at 1 and resampling happens only while k < K.
    """
    us = uniforms.tolist()
    ln1e = log(1.0 - eta)
    logw = [0.0] * d
    x = categorical_from_logits(logw, us[0])
    experts_out[0] = x
    mech_out[0] = MECH_INIT
    k = 1
    resamples = 0
    for t in range(1, T):
        prev = row_at(t - 1)
        for i in range(d):
            logw[i] += prev[i] * ln1e
        u_stage1 = us[1 + 3 * (t - 1)]
        u_stage2 = us[2 + 3 * (t - 1)]
        u_pick = us[3 + 3 * (t - 1)]
        z = bernoulli_from_uniform(u_stage1, 1.0 - p)
        if z == 1:
            # keep with probability (1-eta)^{loss of held expert}
            z = bernoulli_from_uniform(u_stage2, exp(prev[x] * ln1e))
        if z == 1:
            mech_out[t] = MECH_HOLD
        elif k < K:
            k += 1
            resamples += 1
            x = categorical_from_logits(logw, u_pick)
            mech_out[t] = MECH_RESAMPLE
        else:
            mech_out[t] = MECH_FROZEN
        experts_out[t] = x
    return resamples


def svt_game(
    row_at,
    T: int,
    d: int,
    K: int,
    eta: float,
    eps_svt: float,
    lstar: float,
    thr_offset: float,
    adaptive: bool,
    lap_scale_ada: float,
    double_margin: float,
    max_doublings: int,
    uniforms,
    experts_out,
    mech_out,
    lbar_out,
) -> int:
    """Sparse-vector experts algorithm, fixed-L* or adaptive; returns switches.

    row_at(t) must return the loss row of round t (0-based) as a list; for
    oblivious play this is just matrix indexing, for adaptive adversaries a
    closure that inspects the experts chosen so far.

    eps_svt is the AboveThreshold budget (epsilon/2 of the enclosing run);
    the noisy threshold is L + Lap(2/eps_svt) and each query adds
    Lap(4/eps_svt).  In adaptive mode lstar is the running estimate, the
    threshold is lstar + thr_offset, and after each exponential-mechanism
    fire a Laplace check against double_margin may double lstar and restart
    with a fresh uniform expert.
    """
    us = uniforms.tolist()
    thr_noise_scale = 2.0 / eps_svt
    query_noise_scale = 4.0 / eps_svt
    cum = [0.0] * d
    x = int(us[0] * d)
    if x >= d:
        x = d - 1
    k = 0
    doublings = 0
    epoch_acc = 0.0
    need_threshold = True
    noisy_threshold = 0.0
    pending_halt = False
    switches = 0
    for t in range(T):
        base = 1 + 5 * t
        just_switched = False
        if pending_halt:
            # the query added at round t-1 was above threshold: switch now
            logits = [0.0] * d
            for i in range(d):
                s = cum[i] if cum[i] > lstar else lstar
                logits[i] = -0.5 * eta * s
            x = categorical_from_logits(logits, us[base + 1])
            k += 1
            switches += 1
            mech = MECH_EM
            if adaptive:
                zeta = laplace_from_uniform(us[base + 3], lap_scale_ada)
                lbar_t = cum[x] + zeta
                if lbar_t > lstar - double_margin and doublings < max_doublings:
                    lstar = 2.0 * lstar
                    doublings += 1
                    k = 0
                    x = int(us[base + 4] * d)
                    if x >= d:
                        x = d - 1
                    mech = MECH_DOUBLE
            epoch_acc = 0.0
            need_threshold = True
            pending_halt = False
            just_switched = True
        elif t == 0:
            mech = MECH_INIT
        elif k >= K:
            mech = MECH_FROZEN
        else:
            mech = MECH_HOLD
        if k < K and not just_switched:
            if need_threshold:
                noisy_threshold = (
                    lstar
                    + thr_offset
                    + laplace_from_uniform(us[base + 2], thr_noise_scale)
                )
                need_threshold = False
            noise = laplace_from_uniform(us[base], query_noise_scale)
            if epoch_acc + noise >= noisy_threshold:
                pending_halt = True
        row = row_at(t)
        for i in range(d):
            cum[i] += row[i]
        epoch_acc += row[x]
        experts_out[t] = x
        mech_out[t] = mech
        lbar_out[t] = lstar
    return switches


def ftrl_game(
    family: int,
    fam_vecs,
    beta_smooth: float,
    lip: float,
    hinge_offset: float,
    lam: float,
    radius: float,
    sigma_node: float,
    levels: int,
    normals,
    iterates_out,
    losses_out,
) -> None:
    """DP-FTRL over the ball with a streaming binary-tree gradient sum.

    family 0: huberized quadratic centered at fam_vecs[0].
    family 1: smoothed hinge with per-round unit directions fam_vecs[t].
    Gradients are clipped to norm `lip` before entering the tree; the node
    created at round t uses noise sigma_node * normals[t].  sigma_node = 0
    accumulates the gradient prefix sum sequentially instead (identical to
    the noiseless tree in exact arithmetic, and bit-identical to classical
    FTRL, which the oracle test demands).
    """
    T = losses_out.shape[0]
    dim = iterates_out.shape[1]
    fam = fam_vecs.tolist()
    nrm = normals.tolist()
    node_sums = [[0.0] * dim for _ in range(levels)]
    node_noisy = [[0.0] * dim for _ in range(levels)]
    gbar = [0.0] * dim
    xt = [0.0] * dim
    grad = [0.0] * dim
    for t in range(1, T + 1):
        # FTRL step: x_t = argmin <gbar, x> + lam/2 |x|^2 over the ball
        nn = 0.0
        for j in range(dim):
            xt[j] = -gbar[j] / lam
            nn += xt[j] * xt[j]
        nn = sqrt(nn)
        if nn > radius:
            scalef = radius / nn
            for j in range(dim):
                xt[j] *= scalef
        # loss and gradient of the round-t function at x_t
        if family == 0:
            c = fam[0]
            r2 = 0.0
            for j in range(dim):
                grad[j] = xt[j] - c[j]
                r2 += grad[j] * grad[j]
            r = sqrt(r2)
            if beta_smooth * r <= lip:
                loss_t = 0.5 * beta_smooth * r2
                for j in range(dim):
                    grad[j] *= beta_smooth
            else:
                loss_t = lip * r - lip * lip / (2.0 * beta_smooth)
                for j in range(dim):
                    grad[j] *= lip / r
        else:
            a = fam[t - 1]
            z = -hinge_offset
            for j in range(dim):
                z += a[j] * xt[j]
            if z <= 0.0:
                loss_t = 0.0
                for j in range(dim):
                    grad[j] = 0.0
            elif beta_smooth * z <= lip:
                loss_t = 0.5 * beta_smooth * z * z
                for j in range(dim):
                    grad[j] = beta_smooth * z * a[j]
            else:
                loss_t = lip * z - lip * lip / (2.0 * beta_smooth)
                for j in range(dim):
                    grad[j] = lip * a[j]
        for j in range(dim):
            iterates_out[t - 1, j] = xt[j]
        losses_out[t - 1] = loss_t
        # clip to the tree's sensitivity
        gn = 0.0
        for j in range(dim):
            gn += grad[j] * grad[j]
        gn = sqrt(gn)
        if gn > lip:
            scalef = lip / gn
            for j in range(dim):
                grad[j] *= scalef
        if sigma_node == 0.0:
            for j in range(dim):
                gbar[j] += grad[j]
            continue
        # streaming binary tree: new node at the lowest set bit of t
        i = (t & -t).bit_length() - 1
        node = node_sums[i]
        for j in range(dim):
            node[j] = grad[j]
        for lv in range(i):
            lower = node_sums[lv]
            for j in range(dim):
                node[j] += lower[j]
                lower[j] = 0.0
                node_noisy[lv][j] = 0.0
        noisy = node_noisy[i]
        nr = nrm[t - 1]
        for j in range(dim):
            noisy[j] = node[j] + sigma_node * nr[j]
        for j in range(dim):
            gbar[j] = 0.0
        rem = t
        while rem:
            lv = (rem & -rem).bit_length() - 1
            noisy = node_noisy[lv]
            for j in range(dim):
                gbar[j] += noisy[j]
            rem &= rem - 1
