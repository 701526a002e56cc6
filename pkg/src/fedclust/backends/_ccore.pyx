# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled clustering kernels.

Statement-for-statement mirror of ``pycore``; see that module for the
contracts. Compiled with -ffp-contract=off so results stay bit-identical to
the pure Python fallback.
"""

from libc.math cimport exp, log, log1p, INFINITY
from libc.stdint cimport int64_t

cdef double LOG_2PI = 1.8378770664093453


cpdef double log_marginal(long n, double[::1] s, double ssq, double[::1] mu0,
                          double sigma0_sq, double sigma_sq):
    cdef Py_ssize_t d, j
    cdef double prec, quad, bb, b
    if n == 0:
        return 0.0
    d = s.shape[0]
    prec = n / sigma_sq + 1.0 / sigma0_sq
    quad = ssq / sigma_sq
    bb = 0.0
    for j in range(d):
        b = s[j] / sigma_sq + mu0[j] / sigma0_sq
        bb += b * b
        quad += mu0[j] * mu0[j] / sigma0_sq
    quad -= bb / prec
    return (
        -0.5 * (n * d) * (LOG_2PI + log(sigma_sq))
        - 0.5 * d * log(sigma0_sq * prec)
        - 0.5 * quad
    )


cpdef double predictive_logpdf(double[::1] x, long n, double[::1] s,
                               double[::1] mu0, double sigma0_sq,
                               double sigma_sq):
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t j
    cdef double prec = n / sigma_sq + 1.0 / sigma0_sq
    cdef double var = 1.0 / prec + sigma_sq
    cdef double c = -0.5 * (LOG_2PI + log(var))
    cdef double total = 0.0
    cdef double m, diff
    for j in range(d):
        m = (s[j] / sigma_sq + mu0[j] / sigma0_sq) / prec
        diff = x[j] - m
        total += c - 0.5 * diff * diff / var
    return total


cdef double _predictive_row(double[:, ::1] reps, Py_ssize_t xi,
                            double[:, ::1] sums, Py_ssize_t row, long n,
                            double[::1] mu0, double sigma0_sq,
                            double sigma_sq) noexcept:
    cdef Py_ssize_t d = reps.shape[1]
    cdef Py_ssize_t j
    cdef double prec = n / sigma_sq + 1.0 / sigma0_sq
    cdef double var = 1.0 / prec + sigma_sq
    cdef double c = -0.5 * (LOG_2PI + log(var))
    cdef double total = 0.0
    cdef double m, diff
    for j in range(d):
        m = (sums[row, j] / sigma_sq + mu0[j] / sigma0_sq) / prec
        diff = reps[xi, j] - m
        total += c - 0.5 * diff * diff / var
    return total


cpdef long gibbs_sweep(int64_t[::1] labels, int64_t[::1] sizes,
                       double[:, ::1] sums, double[::1] sumsqs, long k_in,
                       double[:, ::1] reps, double alpha, double[::1] mu0,
                       double sigma0_sq, double sigma_sq,
                       double[::1] uniforms, double[::1] scratch):
    cdef Py_ssize_t M = reps.shape[0]
    cdef Py_ssize_t d = reps.shape[1]
    cdef long K = k_in
    cdef double log_alpha = log(alpha)
    cdef Py_ssize_t i, j, m
    cdef long k, k2, chosen
    cdef double xx, w, wmax, tot, thr, cum
    for i in range(M):
        xx = 0.0
        for j in range(d):
            xx += reps[i, j] * reps[i, j]
        k = labels[i]
        sizes[k] -= 1
        for j in range(d):
            sums[k, j] -= reps[i, j]
        sumsqs[k] -= xx
        if sizes[k] == 0:
            K -= 1
            if k != K:
                sizes[k] = sizes[K]
                for j in range(d):
                    sums[k, j] = sums[K, j]
                sumsqs[k] = sumsqs[K]
                for m in range(M):
                    if labels[m] == K:
                        labels[m] = k
            sizes[K] = 0
            for j in range(d):
                sums[K, j] = 0.0
            sumsqs[K] = 0.0
        wmax = -INFINITY
        for k2 in range(K):
            w = log(<double>sizes[k2]) + _predictive_row(
                reps, i, sums, k2, sizes[k2], mu0, sigma0_sq, sigma_sq)
            scratch[k2] = w
            if w > wmax:
                wmax = w
        w = log_alpha + _predictive_row(
            reps, i, sums, K, 0, mu0, sigma0_sq, sigma_sq)
        scratch[K] = w
        if w > wmax:
            wmax = w
        tot = 0.0
        for k2 in range(K + 1):
            tot += exp(scratch[k2] - wmax)
        thr = uniforms[i] * tot
        cum = 0.0
        chosen = K
        for k2 in range(K + 1):
            cum += exp(scratch[k2] - wmax)
            if cum >= thr:
                chosen = k2
                break
        if chosen == K:
            K += 1
        labels[i] = chosen
        sizes[chosen] += 1
        for j in range(d):
            sums[chosen, j] += reps[i, j]
        sumsqs[chosen] += xx
    return K


cpdef double restricted_scan(int64_t[::1] labels, int64_t[::1] sizes,
                             double[:, ::1] sums, double[::1] sumsqs,
                             double[:, ::1] reps, int64_t[::1] s_idx,
                             long ka, long kb, double[::1] mu0,
                             double sigma0_sq, double sigma_sq,
                             double[::1] uniforms, int64_t[::1] targets,
                             int forced):
    cdef Py_ssize_t m = s_idx.shape[0]
    cdef Py_ssize_t d = reps.shape[1]
    cdef double total = 0.0
    cdef Py_ssize_t idx, j
    cdef long si, k, chosen
    cdef double xx, wa, wb, logz
    cdef bint choose_a
    for idx in range(m):
        si = s_idx[idx]
        xx = 0.0
        for j in range(d):
            xx += reps[si, j] * reps[si, j]
        k = labels[si]
        sizes[k] -= 1
        for j in range(d):
            sums[k, j] -= reps[si, j]
        sumsqs[k] -= xx
        wa = log(<double>sizes[ka]) + _predictive_row(
            reps, si, sums, ka, sizes[ka], mu0, sigma0_sq, sigma_sq)
        wb = log(<double>sizes[kb]) + _predictive_row(
            reps, si, sums, kb, sizes[kb], mu0, sigma0_sq, sigma_sq)
        if wa >= wb:
            logz = wa + log1p(exp(wb - wa))
        else:
            logz = wb + log1p(exp(wa - wb))
        if forced:
            choose_a = targets[idx] == ka
        else:
            choose_a = uniforms[idx] < exp(wa - logz)
        if choose_a:
            total += wa - logz
            chosen = ka
        else:
            total += wb - logz
            chosen = kb
        labels[si] = chosen
        sizes[chosen] += 1
        for j in range(d):
            sums[chosen, j] += reps[si, j]
        sumsqs[chosen] += xx
    return total
