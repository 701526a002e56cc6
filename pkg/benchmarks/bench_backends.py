"""Benchmark the compiled clustering kernels against the Python fallback.

Usage: python benchmarks/bench_backends.py [--repeats N]
Times the cluster-marginal evaluation, a full Gibbs sweep, a restricted scan,
and a complete split-merge + sweep chain step at desk scale, and reports the
speedup of the compiled backend. Both backends must produce bit-identical
results; this is asserted while timing.
"""

import argparse
import time

import numpy as np

from fedclust.backends import pycore

try:
    from fedclust.backends import _ccore
except ImportError:
    _ccore = None

from fedclust.dpmm import canonical_labels


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _build_state(rng, m, d, k):
    labels, k = canonical_labels(rng.integers(0, k, size=m))
    reps = np.ascontiguousarray(rng.normal(size=(m, d)))
    sizes = np.zeros(m + 1, dtype=np.int64)
    sums = np.zeros((m + 1, d))
    sumsqs = np.zeros(m + 1)
    for i in range(m):
        sizes[labels[i]] += 1
        sums[labels[i]] += reps[i]
        sumsqs[labels[i]] += float(reps[i] @ reps[i])
    return labels, k, sizes, sums, sumsqs, reps


def bench_log_marginal(impl, rng, n_calls=20_000):
    d = 64
    pts = rng.normal(size=(12, d))
    s = np.ascontiguousarray(pts.sum(axis=0))
    ssq = float((pts * pts).sum())
    mu0 = np.zeros(d)

    def run():
        total = 0.0
        for _ in range(n_calls):
            total += impl.log_marginal(12, s, ssq, mu0, 1.0, 1.0)
        return total

    return run


def bench_gibbs_sweep(impl, rng, n_sweeps=200):
    m, d = 60, 156
    labels, k, sizes, sums, sumsqs, reps = _build_state(rng, m, d, 4)
    uniforms = rng.random((n_sweeps, m))
    scratch = np.zeros(m + 2)

    def run():
        la = labels.copy()
        sa, ma, qa = sizes.copy(), sums.copy(), sumsqs.copy()
        kk = k
        for sweep in range(n_sweeps):
            kk = impl.gibbs_sweep(la, sa, ma, qa, kk, reps, 1.0,
                                  np.zeros(d), 1.0, 1.0, uniforms[sweep],
                                  scratch)
        return kk, la

    return run


def bench_restricted_scan(impl, rng, n_scans=2000):
    m, d = 60, 156
    labels, k, sizes, sums, sumsqs, reps = _build_state(rng, m, d, 2)
    anchor_a = int(np.where(labels == 0)[0][0])
    anchor_b = int(np.where(labels == 1)[0][0])
    s_idx = np.array([i for i in range(m) if i not in (anchor_a, anchor_b)],
                     dtype=np.int64)
    uniforms = rng.random((n_scans, len(s_idx)))
    targets = np.zeros(len(s_idx), dtype=np.int64)

    def run():
        la = labels.copy()
        sa, ma, qa = sizes.copy(), sums.copy(), sumsqs.copy()
        total = 0.0
        for i in range(n_scans):
            total += impl.restricted_scan(la, sa, ma, qa, reps, s_idx, 0, 1,
                                          np.zeros(d), 1.0, 1.0, uniforms[i],
                                          targets, 0)
        return total, la

    return run


def bench_chain(backend_name, n_steps=300):
    # full split-merge + sweep chain through the public sampler API
    import importlib
    import os

    os.environ["FEDCLUST_BACKEND"] = backend_name
    import fedclust.backends
    importlib.reload(fedclust.backends)
    import fedclust.sampler
    importlib.reload(fedclust.sampler)
    from fedclust.dpmm import Assignment, DPConfig
    from fedclust.sampler import SamplerConfig, run_chain

    rng = np.random.default_rng(0)
    reps = rng.normal(size=(60, 156))
    cfg = DPConfig(alpha=1.0)
    sm = SamplerConfig(n_split_merge=n_steps, n_gibbs_sweeps=n_steps // 10)
    init = Assignment.from_labels(np.zeros(60, dtype=np.int64))

    def run():
        out, _ = run_chain(reps, cfg, sm, np.random.default_rng(1), init)
        return out.k, out.labels

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _ccore is None:
        print("compiled backend unavailable; nothing to compare")
        return

    rng_seed = 42
    rows = []
    for name, factory in (("log_marginal x20k (d=64)", bench_log_marginal),
                          ("gibbs_sweep x200 (M=60,d=156)", bench_gibbs_sweep),
                          ("restricted_scan x2k (M=60,d=156)", bench_restricted_scan)):
        t_py, out_py = _time(factory(pycore, np.random.default_rng(rng_seed)),
                             args.repeats)
        t_c, out_c = _time(factory(_ccore, np.random.default_rng(rng_seed)),
                           args.repeats)
        if isinstance(out_py, tuple):
            assert all(np.array_equal(a, b) for a, b in zip(out_py, out_c)), name
        else:
            assert out_py == out_c, name
        rows.append((name, t_py, t_c))

    t_py, out_py = _time(bench_chain("py"), 1)
    t_c, out_c = _time(bench_chain("c"), 1)
    assert out_py[0] == out_c[0] and np.array_equal(out_py[1], out_c[1])
    rows.append(("run_chain 300 moves (M=60,d=156)", t_py, t_c))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'python':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, t_py, t_c in rows:
        print(f"{name:<{width}}  {t_py:>9.4f}s  {t_c:>9.4f}s  {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
