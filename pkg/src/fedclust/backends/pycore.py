"""Pure-Python clustering kernels.

Reference implementation of the hot numerical routines: conjugate Gaussian
cluster marginals, posterior predictive densities, full Gibbs sweeps, and
restricted two-cluster Gibbs scans. The compiled backend (``_ccore``) mirrors
these routines statement for statement so both produce bit-identical results;
any change here must be replicated there.

Randomness is injected through pre-drawn uniform arrays, never generated
inside the kernels, so a sweep is a deterministic function of its inputs.
"""

import math

LOG_2PI = 1.8378770664093453


def log_marginal(n, s, ssq, mu0, sigma0_sq, sigma_sq):
    """Log marginal likelihood of a cluster from its sufficient statistics.

    Evaluates log of the integral over the cluster mean of
    ``prod_i N(x_i | mu, sigma_sq*I) * N(mu | mu0, sigma0_sq*I)`` for a
    spherical Gaussian likelihood and base measure, using only
    ``n`` (count), ``s`` (per-dimension sum) and ``ssq`` (total sum of
    squared norms). ``n == 0`` returns 0 by convention (empty product).
    """
    if n == 0:
        return 0.0
    d = len(s)
    prec = n / sigma_sq + 1.0 / sigma0_sq
    quad = ssq / sigma_sq
    bb = 0.0
    for j in range(d):
        b = s[j] / sigma_sq + mu0[j] / sigma0_sq
        bb += b * b
        quad += mu0[j] * mu0[j] / sigma0_sq
    quad -= bb / prec
    return (
        -0.5 * (n * d) * (LOG_2PI + math.log(sigma_sq))
        - 0.5 * d * math.log(sigma0_sq * prec)
        - 0.5 * quad
    )


def predictive_logpdf(x, n, s, mu0, sigma0_sq, sigma_sq):
    """Posterior predictive log density of point ``x`` given cluster stats.

    With ``n == 0`` (and ``s`` all zero) this is the prior predictive
    ``N(mu0, (sigma_sq + sigma0_sq) * I)``.
    """
    d = len(x)
    prec = n / sigma_sq + 1.0 / sigma0_sq
    var = 1.0 / prec + sigma_sq
    c = -0.5 * (LOG_2PI + math.log(var))
    total = 0.0
    for j in range(d):
        m = (s[j] / sigma_sq + mu0[j] / sigma0_sq) / prec
        diff = x[j] - m
        total += c - 0.5 * diff * diff / var
    return total


def _predictive_row(reps, xi, sums, row, n, mu0, sigma0_sq, sigma_sq):
    # predictive_logpdf specialised to rows of the state arrays
    d = reps.shape[1]
    prec = n / sigma_sq + 1.0 / sigma0_sq
    var = 1.0 / prec + sigma_sq
    c = -0.5 * (LOG_2PI + math.log(var))
    total = 0.0
    for j in range(d):
        m = (sums[row, j] / sigma_sq + mu0[j] / sigma0_sq) / prec
        diff = reps[xi, j] - m
        total += c - 0.5 * diff * diff / var
    return total


def gibbs_sweep(labels, sizes, sums, sumsqs, k_in, reps, alpha, mu0,
                sigma0_sq, sigma_sq, uniforms, scratch):
    """One full conditional Gibbs sweep over all points, in place.

    For each point in index order: remove it from its cluster (deleting the
    cluster if it empties, compacting via swap-with-last), weight every
    existing cluster by ``size * predictive`` and a new cluster by
    ``alpha * prior predictive``, then resample the assignment by inverse CDF
    using ``uniforms[i]``. Returns the new cluster count. ``scratch`` must
    hold at least ``M + 1`` doubles; slots ``>= K`` of the stat arrays must
    be zero on entry and are kept zero.
    """
    M = reps.shape[0]
    d = reps.shape[1]
    K = k_in
    log_alpha = math.log(alpha)
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
        wmax = -math.inf
        for k2 in range(K):
            w = math.log(sizes[k2]) + _predictive_row(
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
            tot += math.exp(scratch[k2] - wmax)
        thr = uniforms[i] * tot
        cum = 0.0
        chosen = K
        for k2 in range(K + 1):
            cum += math.exp(scratch[k2] - wmax)
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


def restricted_scan(labels, sizes, sums, sumsqs, reps, s_idx, ka, kb, mu0,
                    sigma0_sq, sigma_sq, uniforms, targets, forced):
    """Restricted Gibbs scan reassigning ``s_idx`` between clusters ka, kb.

    Each listed point is removed and reassigned by its two-way full
    conditional (cluster size times posterior predictive, normalised over the
    two choices). With ``forced`` nonzero the point is moved to
    ``targets[idx]`` instead of being sampled, and the scan accumulates the
    log probability of those choices. Returns the total log transition
    probability of the realised scan. Anchoring points of ka and kb must not
    appear in ``s_idx`` (each cluster then always keeps >= 1 member).
    """
    m = s_idx.shape[0]
    d = reps.shape[1]
    total = 0.0
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
        wa = math.log(sizes[ka]) + _predictive_row(
            reps, si, sums, ka, sizes[ka], mu0, sigma0_sq, sigma_sq)
        wb = math.log(sizes[kb]) + _predictive_row(
            reps, si, sums, kb, sizes[kb], mu0, sigma0_sq, sigma_sq)
        if wa >= wb:
            logz = wa + math.log1p(math.exp(wb - wa))
        else:
            logz = wb + math.log1p(math.exp(wa - wb))
        if forced:
            choose_a = targets[idx] == ka
        else:
            choose_a = uniforms[idx] < math.exp(wa - logz)
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
