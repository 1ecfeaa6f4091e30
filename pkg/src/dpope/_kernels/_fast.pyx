# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in pure.py.

Keep every arithmetic step, branch, and summation order identical to the
pure-Python reference: traces must match bit for bit (both sides call libm
exp/log on IEEE doubles, no fast-math).  Edit pure.py first, then mirror.
"""
from libc.math cimport exp, fabs, log, sqrt

import numpy as np


cdef inline int _bernoulli(double u, double q) noexcept:
    return 1 if u < q else 0


cdef inline double _laplace(double u, double scale) noexcept:
    cdef double v = u - 0.5
    cdef double a = 1.0 - 2.0 * fabs(v)
    cdef double x
    if a < 1e-300:
        a = 1e-300
    x = -scale * log(a)
    return x if v >= 0.0 else -x


cdef inline Py_ssize_t _categorical(const double* logits, Py_ssize_t n, double u) noexcept:
    cdef double m = logits[0]
    cdef double total = 0.0
    cdef double target, acc
    cdef Py_ssize_t i
    for i in range(1, n):
        if logits[i] > m:
            m = logits[i]
    for i in range(n):
        total += exp(logits[i] - m)
    target = u * total
    acc = 0.0
    for i in range(n):
        acc += exp(logits[i] - m)
        if target < acc:
            return i
    return n - 1


cdef inline Py_ssize_t _lowest_set_bit(long t) noexcept:
    cdef long b = t & (-t)
    cdef Py_ssize_t i = 0
    while b > 1:
        b >>= 1
        i += 1
    return i


def mw_game(double[:, ::1] loss, double eta, double[::1] uniforms, long[::1] experts_out):
    cdef Py_ssize_t T = loss.shape[0]
    cdef Py_ssize_t d = loss.shape[1]
    cdef double ln1e = log(1.0 - eta)
    cdef double[::1] logw = np.zeros(d)
    cdef Py_ssize_t t, i
    for t in range(T):
        if t > 0:
            for i in range(d):
                logw[i] += loss[t - 1, i] * ln1e
        experts_out[t] = _categorical(&logw[0], d, uniforms[t])


def sd_game(double[:, ::1] loss, double eta, double p, long K,
            double[::1] uniforms, long[::1] experts_out, signed char[::1] mech_out):
    cdef Py_ssize_t T = loss.shape[0]
    cdef Py_ssize_t d = loss.shape[1]
    cdef double ln1e = log(1.0 - eta)
    cdef double[::1] logw = np.zeros(d)
    cdef Py_ssize_t t, i, x
    cdef long k = 1
    cdef long resamples = 0
    cdef int z
    x = _categorical(&logw[0], d, uniforms[0])
    experts_out[0] = x
    mech_out[0] = 0  # MECH_INIT
    for t in range(1, T):
        for i in range(d):
            logw[i] += loss[t - 1, i] * ln1e
        z = _bernoulli(uniforms[1 + 3 * (t - 1)], 1.0 - p)
        if z == 1:
            z = _bernoulli(uniforms[2 + 3 * (t - 1)], exp(loss[t - 1, x] * ln1e))
        if z == 1:
            mech_out[t] = 1  # MECH_HOLD
        elif k < K:
            k += 1
            resamples += 1
            x = _categorical(&logw[0], d, uniforms[3 + 3 * (t - 1)])
            mech_out[t] = 2  # MECH_RESAMPLE
        else:
            mech_out[t] = 3  # MECH_FROZEN
        experts_out[t] = x
    return resamples


def svt_game(double[:, ::1] loss, long K, double eta, double eps_svt,
             double lstar, double thr_offset, int adaptive,
             double lap_scale_ada, double double_margin, long max_doublings,
             double[::1] uniforms, long[::1] experts_out,
             signed char[::1] mech_out, double[::1] lbar_out):
    cdef Py_ssize_t T = loss.shape[0]
    cdef Py_ssize_t d = loss.shape[1]
    cdef double thr_noise_scale = 2.0 / eps_svt
    cdef double query_noise_scale = 4.0 / eps_svt
    cdef double[::1] cum = np.zeros(d)
    cdef double[::1] logits = np.zeros(d)
    cdef Py_ssize_t t, i, x, base
    cdef long k = 0
    cdef long doublings = 0
    cdef long switches = 0
    cdef double epoch_acc = 0.0
    cdef double noisy_threshold = 0.0
    cdef double noise, zeta, lbar_t, s
    cdef int need_threshold = 1
    cdef int pending_halt = 0
    cdef int just_switched
    cdef signed char mech
    x = <Py_ssize_t>(uniforms[0] * d)
    if x >= d:
        x = d - 1
    for t in range(T):
        base = 1 + 5 * t
        just_switched = 0
        if pending_halt:
            for i in range(d):
                s = cum[i] if cum[i] > lstar else lstar
                logits[i] = -0.5 * eta * s
            x = _categorical(&logits[0], d, uniforms[base + 1])
            k += 1
            switches += 1
            mech = 4  # MECH_EM
            if adaptive:
                zeta = _laplace(uniforms[base + 3], lap_scale_ada)
                lbar_t = cum[x] + zeta
                if lbar_t > lstar - double_margin and doublings < max_doublings:
                    lstar = 2.0 * lstar
                    doublings += 1
                    k = 0
                    x = <Py_ssize_t>(uniforms[base + 4] * d)
                    if x >= d:
                        x = d - 1
                    mech = 5  # MECH_DOUBLE
            epoch_acc = 0.0
            need_threshold = 1
            pending_halt = 0
            just_switched = 1
        elif t == 0:
            mech = 0  # MECH_INIT
        elif k >= K:
            mech = 3  # MECH_FROZEN
        else:
            mech = 1  # MECH_HOLD
        if k < K and not just_switched:
            if need_threshold:
                noisy_threshold = (lstar + thr_offset
                                   + _laplace(uniforms[base + 2], thr_noise_scale))
                need_threshold = 0
            noise = _laplace(uniforms[base], query_noise_scale)
            if epoch_acc + noise >= noisy_threshold:
                pending_halt = 1
        for i in range(d):
            cum[i] += loss[t, i]
        epoch_acc += loss[t, x]
        experts_out[t] = x
        mech_out[t] = mech
        lbar_out[t] = lstar
    return switches


def ftrl_game(int family, double[:, ::1] fam_vecs, double beta_smooth,
              double lip, double hinge_offset, double lam, double radius,
              double sigma_node, int levels, double[:, ::1] normals,
              double[:, ::1] iterates_out, double[::1] losses_out):
    cdef Py_ssize_t T = losses_out.shape[0]
    cdef Py_ssize_t dim = iterates_out.shape[1]
    cdef double[:, ::1] node_sums = np.zeros((levels, dim))
    cdef double[:, ::1] node_noisy = np.zeros((levels, dim))
    cdef double[::1] gbar = np.zeros(dim)
    cdef double[::1] xt = np.zeros(dim)
    cdef double[::1] grad = np.zeros(dim)
    cdef Py_ssize_t j, lv, i
    cdef long t, rem
    cdef double nn, scalef, r2, r, z, loss_t, gn
    for t in range(1, T + 1):
        nn = 0.0
        for j in range(dim):
            xt[j] = -gbar[j] / lam
            nn += xt[j] * xt[j]
        nn = sqrt(nn)
        if nn > radius:
            scalef = radius / nn
            for j in range(dim):
                xt[j] *= scalef
        if family == 0:
            r2 = 0.0
            for j in range(dim):
                grad[j] = xt[j] - fam_vecs[0, j]
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
            z = -hinge_offset
            for j in range(dim):
                z += fam_vecs[t - 1, j] * xt[j]
            if z <= 0.0:
                loss_t = 0.0
                for j in range(dim):
                    grad[j] = 0.0
            elif beta_smooth * z <= lip:
                loss_t = 0.5 * beta_smooth * z * z
                for j in range(dim):
                    grad[j] = beta_smooth * z * fam_vecs[t - 1, j]
            else:
                loss_t = lip * z - lip * lip / (2.0 * beta_smooth)
                for j in range(dim):
                    grad[j] = lip * fam_vecs[t - 1, j]
        for j in range(dim):
            iterates_out[t - 1, j] = xt[j]
        losses_out[t - 1] = loss_t
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
        i = _lowest_set_bit(t)
        for j in range(dim):
            node_sums[i, j] = grad[j]
        for lv in range(i):
            for j in range(dim):
                node_sums[i, j] += node_sums[lv, j]
                node_sums[lv, j] = 0.0
                node_noisy[lv, j] = 0.0
        for j in range(dim):
            node_noisy[i, j] = node_sums[i, j] + sigma_node * normals[t - 1, j]
        for j in range(dim):
            gbar[j] = 0.0
        rem = t
        while rem:
            lv = _lowest_set_bit(rem)
            for j in range(dim):
                gbar[j] += node_noisy[lv, j]
            rem &= rem - 1
