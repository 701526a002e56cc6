"""Exact probabilistic pieces of the Dirichlet-process mixture.

Chinese restaurant process prior (sequential conditional and joint forms),
the conjugate spherical-Gaussian cluster marginal likelihood, sufficient
statistic bookkeeping, and the unnormalised log posterior over cluster
assignments. Everything is log-domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backends


@dataclass(frozen=True)
class DPConfig:
    """Hyperparameters of the DP prior and Gaussian observation model.

    ``alpha`` is the concentration parameter, ``mu0``/``sigma0_sq`` the mean
    and spherical variance of the Gaussian base measure, ``sigma_sq`` the
    spherical observation variance. ``mu0`` may be a scalar, broadcast to the
    data dimension on use.
    """

    alpha: float = 1.0
    mu0: float | np.ndarray = 0.0
    sigma0_sq: float = 1.0
    sigma_sq: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.sigma0_sq > 0:
            raise ValueError(f"sigma0_sq must be positive, got {self.sigma0_sq}")
        if not self.sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if not np.all(np.isfinite(self.mu0)):
            raise ValueError("mu0 must be finite")

    def mu0_vector(self, d: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.mu0, dtype=np.float64), (d,)).copy()


def canonical_labels(labels) -> tuple[np.ndarray, int]:
    """Relabel clusters by order of first appearance; returns (labels, K)."""
    labels = np.asarray(labels)
    out = np.empty(labels.shape[0], dtype=np.int64)
    mapping: dict[int, int] = {}
    for idx, lab in enumerate(labels.tolist()):
        new = mapping.get(lab)
        if new is None:
            new = len(mapping)
            mapping[lab] = new
        out[idx] = new
    return out, len(mapping)


@dataclass(frozen=True)
class Assignment:
    """Partition of M clients into K clusters, canonically labelled."""

    labels: np.ndarray
    k: int
    sizes: np.ndarray

    @classmethod
    def from_labels(cls, labels) -> "Assignment":
        canon, k = canonical_labels(labels)
        sizes = np.bincount(canon, minlength=k).astype(np.int64)
        canon.setflags(write=False)
        sizes.setflags(write=False)
        return cls(labels=canon, k=k, sizes=sizes)

    def __post_init__(self):
        self.validate()

    @property
    def num_points(self) -> int:
        return int(self.labels.shape[0])

    def validate(self):
        if self.labels.ndim != 1 or self.labels.shape[0] == 0:
            raise ValueError("labels must be a nonempty 1-D vector")
        canon, k = canonical_labels(self.labels)
        if k != self.k or not np.array_equal(canon, self.labels):
            raise ValueError("labels are not canonically numbered")
        sizes = np.bincount(self.labels, minlength=self.k)
        if not np.array_equal(sizes, self.sizes):
            raise ValueError("sizes inconsistent with labels")
        if np.any(self.sizes < 1):
            raise ValueError("empty cluster in assignment")


@dataclass(frozen=True)
class ClusterStats:
    """Sufficient statistics of one cluster: count, sum vector, total squared norm."""

    n: int
    sum: np.ndarray
    sumsq: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.n == 0:
            if np.any(self.sum != 0.0) or self.sumsq != 0.0:
                raise ValueError("empty stats must be all zero")


def stats_empty(d: int) -> ClusterStats:
    return ClusterStats(n=0, sum=np.zeros(d), sumsq=0.0)


def stats_from_points(points: np.ndarray) -> ClusterStats:
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return ClusterStats(
        n=points.shape[0],
        sum=points.sum(axis=0),
        sumsq=float(np.sum(points * points)),
    )


def stats_add(stats: ClusterStats, omega: np.ndarray) -> ClusterStats:
    omega = np.asarray(omega, dtype=np.float64)
    return ClusterStats(
        n=stats.n + 1,
        sum=stats.sum + omega,
        sumsq=stats.sumsq + float(omega @ omega),
    )


def stats_remove(stats: ClusterStats, omega: np.ndarray) -> ClusterStats:
    """Inverse of stats_add; an emptied cluster snaps back to exact zeros."""
    if stats.n < 1:
        raise ValueError("cannot remove from empty stats")
    if stats.n == 1:
        return stats_empty(stats.sum.shape[0])
    omega = np.asarray(omega, dtype=np.float64)
    return ClusterStats(
        n=stats.n - 1,
        sum=stats.sum - omega,
        sumsq=max(stats.sumsq - float(omega @ omega), 0.0),
    )


def crp_conditional_logprobs(sizes, total_others: int, alpha: float) -> np.ndarray:
    """Log seating probabilities for the next observation: K existing + new.

    Entry k is ``log(m_k / (total_others + alpha))``; the final entry is the
    new-cluster probability ``log(alpha / (total_others + alpha))``.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if np.any(sizes < 0):
        raise ValueError("cluster sizes must be non-negative")
    if int(sizes.sum()) != total_others:
        raise ValueError(
            f"total_others={total_others} does not match sum(sizes)={int(sizes.sum())}")
    log_denom = math.log(total_others + alpha)
    out = np.empty(sizes.shape[0] + 1)
    with np.errstate(divide="ignore"):
        out[:-1] = np.log(sizes) - log_denom
    out[-1] = math.log(alpha) - log_denom
    return out


def crp_joint_logprior(a: Assignment, alpha: float) -> float:
    """Log of the exchangeable partition prior Gamma(a)/Gamma(a+M) * a^K * prod Gamma(m_k)."""
    m = a.num_points
    total = math.lgamma(alpha) - math.lgamma(alpha + m) + a.k * math.log(alpha)
    for size in a.sizes.tolist():
        total += math.lgamma(size)
    return total


def cluster_log_marginal(stats: ClusterStats, cfg: DPConfig) -> float:
    """Closed-form log marginal likelihood of one cluster (0 for empty stats)."""
    if stats.n == 0:
        return 0.0
    d = stats.sum.shape[0]
    return backends.log_marginal(
        stats.n,
        np.ascontiguousarray(stats.sum, dtype=np.float64),
        float(stats.sumsq),
        cfg.mu0_vector(d),
        cfg.sigma0_sq,
        cfg.sigma_sq,
    )


def predictive_logpdf(omega: np.ndarray, stats: ClusterStats, cfg: DPConfig) -> float:
    """Posterior predictive log density of ``omega`` under a cluster's stats."""
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    d = omega.shape[0]
    return backends.predictive_logpdf(
        omega,
        stats.n,
        np.ascontiguousarray(stats.sum, dtype=np.float64),
        cfg.mu0_vector(d),
        cfg.sigma0_sq,
        cfg.sigma_sq,
    )


def posterior_logscore(a: Assignment, reps: np.ndarray, cfg: DPConfig) -> float:
    """Unnormalised log posterior of an assignment: CRP prior + cluster marginals."""
    reps = np.atleast_2d(np.asarray(reps, dtype=np.float64))
    if reps.shape[0] != a.num_points:
        raise ValueError("representation count does not match assignment")
    score = crp_joint_logprior(a, cfg.alpha)
    for k in range(a.k):
        score += cluster_log_marginal(stats_from_points(reps[a.labels == k]), cfg)
    return score


def sample_crp_partition(m: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Draw one partition of ``m`` items by sequential CRP seating."""
    labels = np.zeros(m, dtype=np.int64)
    sizes = [1]
    for i in range(1, m):
        logp = crp_conditional_logprobs(sizes, i, alpha)
        probs = np.exp(logp)
        choice = int(np.searchsorted(np.cumsum(probs), rng.random()))
        choice = min(choice, len(sizes))
        labels[i] = choice
        if choice == len(sizes):
            sizes.append(1)
        else:
            sizes[choice] += 1
    return labels
