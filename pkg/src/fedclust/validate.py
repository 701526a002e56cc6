"""Self-check suites pairing the closed-form code paths with independent
oracles: quadrature and Monte Carlo for the conjugate marginal, exact
partition enumeration for the sampler, and direct simulation for the CRP
cluster-count law."""

import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dpmm import (Assignment, DPConfig, crp_conditional_logprobs,
                   crp_joint_logprior, cluster_log_marginal,
                   sample_crp_partition, stats_from_points)
from .sampler import (SamplerConfig, _ChainState, _gibbs_sweep_state,
                      _iter_partitions, _split_merge_move, enumerate_posterior)


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  [{self.detail}]" if self.detail else ""
        return (f"[{status}] {self.name:32s} value={self.value:.3e} "
                f"threshold={self.threshold:.3e}{extra}")


def sequential_crp_logprob(labels, alpha: float) -> float:
    """Log prior of a labelled partition as the product of CRP conditionals."""
    labels = np.asarray(labels)
    total = 0.0
    sizes: list[int] = []
    for i, lab in enumerate(labels.tolist()):
        logp = crp_conditional_logprobs(sizes, i, alpha)
        if lab == len(sizes):
            total += logp[-1]
            sizes.append(1)
        else:
            total += logp[lab]
            sizes[lab] += 1
    return total


def quadrature_log_marginal(points: np.ndarray, cfg: DPConfig) -> float:
    """1-D oracle for the cluster marginal: adaptive quadrature over the mean."""
    points = np.asarray(points, dtype=np.float64).ravel()
    mu0 = float(cfg.mu0_vector(1)[0])
    s0 = cfg.sigma0_sq
    s2 = cfg.sigma_sq

    def integrand(mu):
        log_lik = -0.5 * np.sum((points - mu) ** 2) / s2 \
            - 0.5 * len(points) * math.log(2 * math.pi * s2)
        log_prior = -0.5 * (mu - mu0) ** 2 / s0 - 0.5 * math.log(2 * math.pi * s0)
        return math.exp(log_lik + log_prior)

    center = (np.sum(points) / s2 + mu0 / s0) / (len(points) / s2 + 1 / s0)
    width = 12.0 * math.sqrt(1.0 / (len(points) / s2 + 1 / s0))
    val, _ = integrate.quad(integrand, center - width, center + width, limit=200)
    return math.log(val)


def montecarlo_log_marginal(points: np.ndarray, cfg: DPConfig,
                            n_samples: int, rng: np.random.Generator
                            ) -> tuple[float, float]:
    """Monte Carlo oracle: average the likelihood over base-measure draws.

    Returns the log estimate and the log-domain standard error half-width
    (3 standard errors mapped through the log)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, d = points.shape
    mu0 = cfg.mu0_vector(d)
    mus = mu0 + math.sqrt(cfg.sigma0_sq) * rng.standard_normal((n_samples, d))
    diff = points[None, :, :] - mus[:, None, :]
    log_liks = (-0.5 * np.sum(diff * diff, axis=(1, 2)) / cfg.sigma_sq
                - 0.5 * n * d * math.log(2 * math.pi * cfg.sigma_sq))
    mx = log_liks.max()
    w = np.exp(log_liks - mx)
    est = w.mean()
    se = w.std(ddof=1) / math.sqrt(n_samples)
    return mx + math.log(est), 3.0 * se / est


def tv_chain_vs_enumeration(reps: np.ndarray, cfg: DPConfig,
                            sm_cfg: SamplerConfig, rng: np.random.Generator,
                            n_samples: int, burn_in: int = 500) -> float:
    """Total-variation distance between chain samples and exact enumeration.

    One sample = one split-merge proposal followed by one Gibbs sweep."""
    reps = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    exact = {tuple(lab.tolist()): p for lab, p in enumerate_posterior(reps, cfg)}
    state = _ChainState(np.zeros(reps.shape[0], dtype=np.int64), 1, reps, cfg)
    counts: Counter = Counter()
    for step in range(burn_in + n_samples):
        _split_merge_move(state, sm_cfg.t_restricted_scans, rng)
        _gibbs_sweep_state(state, rng)
        if step >= burn_in:
            counts[tuple(state.labels.tolist())] += 1
    tv = 0.0
    for part, p in exact.items():
        tv += abs(counts.get(part, 0) / n_samples - p)
    for part, c in counts.items():
        if part not in exact:
            tv += c / n_samples
    return 0.5 * tv


def stationarity_instance(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Random two-blob instance whose exact posterior is concentrated enough
    for a 50k-sample TV check to be meaningful."""
    side = rng.integers(0, 2, size=m)
    signs = 2.0 * side - 1.0
    base = signs[:, None] * (1.8 / math.sqrt(d)) * np.ones((m, d))
    return base + 0.45 * rng.standard_normal((m, d))


def check_crp_consistency(max_m: int = 8) -> CheckResult:
    worst = 0.0
    for m in range(1, max_m + 1):
        for alpha in (0.5, 1.0, 2.0):
            for labels in _iter_partitions(m):
                joint = crp_joint_logprior(Assignment.from_labels(labels), alpha)
                seq = sequential_crp_logprob(labels, alpha)
                worst = max(worst, abs(joint - seq))
    return CheckResult("crp_sequential_consistency", worst, 1e-9, worst < 1e-9,
                       f"all partitions M<={max_m}, alpha in (0.5, 1, 2)")


def check_crp_normalization(max_m: int = 8) -> CheckResult:
    worst = 0.0
    for m in range(1, max_m + 1):
        for alpha in (0.5, 1.0, 2.0):
            total = 0.0
            for labels in _iter_partitions(m):
                total += math.exp(
                    crp_joint_logprior(Assignment.from_labels(labels), alpha))
            worst = max(worst, abs(total - 1.0))
    return CheckResult("crp_normalization", worst, 1e-9, worst < 1e-9,
                       f"sum over partitions M<={max_m}")


def check_marginal_quadrature(n_instances: int = 10, seed: int = 2024) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(1, 6))
        pts = rng.normal(scale=2.0, size=n)
        cfg = DPConfig(alpha=1.0, mu0=float(rng.normal()),
                       sigma0_sq=float(rng.uniform(0.5, 2.0)),
                       sigma_sq=float(rng.uniform(0.5, 2.0)))
        closed = cluster_log_marginal(stats_from_points(pts[:, None]), cfg)
        oracle = quadrature_log_marginal(pts, cfg)
        worst = max(worst, abs(closed - oracle))
    return CheckResult("marginal_vs_quadrature", worst, 1e-6, worst < 1e-6,
                       f"{n_instances} random 1-D instances")


def check_marginal_hand_cases() -> CheckResult:
    cfg = DPConfig(alpha=1.0, mu0=0.0, sigma0_sq=1.0, sigma_sq=1.0)
    one = cluster_log_marginal(stats_from_points(np.zeros((1, 1))), cfg)
    two = cluster_log_marginal(stats_from_points(np.zeros((2, 1))), cfg)
    worst = max(abs(one - (-0.5 * math.log(4 * math.pi))),
                abs(two - (-(math.log(2 * math.pi) + 0.5 * math.log(3)))))
    return CheckResult("marginal_hand_cases", worst, 1e-9, worst < 1e-9,
                       "n=1 and n=2 at the origin")


def check_marginal_montecarlo(n_samples: int = 1_000_000,
                              seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    pts = rng.normal(scale=1.5, size=(2, 3))
    cfg = DPConfig(alpha=1.0, mu0=0.25, sigma0_sq=1.3, sigma_sq=0.8)
    closed = cluster_log_marginal(stats_from_points(pts), cfg)
    est, half = montecarlo_log_marginal(pts, cfg, n_samples, rng)
    err = abs(math.exp(closed - est) - 1.0)
    return CheckResult("marginal_vs_montecarlo", err, half,
                       err < half, f"d=3, {n_samples} samples, 3 SE")


def check_crp_expected_k(n_draws: int = 100_000, m: int = 10,
                         alpha: float = 1.0, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    total = 0
    for _ in range(n_draws):
        labels = sample_crp_partition(m, alpha, rng)
        total += int(labels.max()) + 1
    mean_k = total / n_draws
    expected = sum(alpha / (alpha + i) for i in range(m))
    rel = abs(mean_k - expected) / expected
    return CheckResult("crp_expected_clusters", rel, 0.02, rel < 0.02,
                       f"M={m}, alpha={alpha}, {n_draws} draws, E[K]={expected:.6f}")


def check_sampler_tv(instances: list[tuple[int, int]], n_samples: int,
                     seed: int = 100) -> CheckResult:
    cfg = DPConfig(alpha=1.0, mu0=0.0, sigma0_sq=1.0, sigma_sq=1.0)
    sm_cfg = SamplerConfig(n_split_merge=1, n_gibbs_sweeps=1, t_restricted_scans=3)
    worst = 0.0
    for pos, (m, d) in enumerate(instances):
        rng = np.random.default_rng(seed + pos)
        reps = stationarity_instance(m, d, rng)
        tv = tv_chain_vs_enumeration(reps, cfg, sm_cfg, rng, n_samples)
        worst = max(worst, tv)
    return CheckResult("sampler_stationarity_tv", worst, 0.05, worst < 0.05,
                       f"{len(instances)} instances, {n_samples} samples each")


FULL_TV_INSTANCES = [(5, 1), (5, 2), (6, 1), (6, 2), (7, 1)]


def run_checks(level: str) -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    checks = [
        check_crp_consistency(max_m=6 if level == "fast" else 8),
        check_crp_normalization(max_m=6 if level == "fast" else 8),
        check_marginal_quadrature(),
        check_marginal_hand_cases(),
        check_marginal_montecarlo(n_samples=200_000 if level == "fast" else 1_000_000),
        check_crp_expected_k(n_draws=30_000 if level == "fast" else 100_000),
    ]
    if level == "fast":
        checks.append(check_sampler_tv([(5, 1)], n_samples=20_000))
    else:
        checks.append(check_sampler_tv(FULL_TV_INSTANCES, n_samples=50_000))
    return checks


def run_and_report(level: str) -> int:
    start = time.time()
    results = run_checks(level)
    for res in results:
        print(res.line())
    elapsed = time.time() - start
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed "
          f"in {elapsed:.1f}s")
    return 3 if failed else 0
