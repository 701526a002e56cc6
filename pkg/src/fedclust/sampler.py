"""MCMC over cluster assignments.

Per-point conjugate Gibbs sweeps, split-merge Metropolis-Hastings moves with
restricted Gibbs launch states, and an exact-enumeration oracle for small
problems. The split-merge proposal follows the conjugate random-launch-state
scheme: pick two anchor points, randomise the affected points between the two
anchored clusters, refine with a fixed number of restricted scans, then one
final scan generates the proposal (split) or, run toward the current state,
the reverse-transition probability (merge).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .dpmm import Assignment, DPConfig, canonical_labels

ENUMERATION_LIMIT = 10


@dataclass(frozen=True)
class SamplerConfig:
    """Move budget for one clustering step.

    ``n_split_merge`` split-merge proposals followed by ``n_gibbs_sweeps``
    full Gibbs sweeps; each split/merge launch state is refined with
    ``t_restricted_scans`` intermediate restricted scans. A zero-move
    configuration is allowed and leaves the assignment untouched (used by the
    degenerate-baseline equivalence checks).
    """

    n_split_merge: int = 20
    n_gibbs_sweeps: int = 2
    t_restricted_scans: int = 5
    warm_start: bool = True

    def __post_init__(self):
        if self.n_split_merge < 0 or self.n_gibbs_sweeps < 0 or self.t_restricted_scans < 0:
            raise ValueError("sampler move counts must be non-negative")


@dataclass(frozen=True)
class MoveOutcome:
    kind: str
    accepted: bool
    log_acceptance: float
    k_after: int


def _as_reps(reps) -> np.ndarray:
    reps = np.asarray(reps, dtype=np.float64)
    if reps.ndim == 1:
        reps = reps[:, None]
    return np.ascontiguousarray(reps)


class _ChainState:
    """Mutable arrays backing one chain: labels plus per-cluster statistics.

    Slot layout has one row of headroom past the current cluster count so a
    sweep or split can materialise a new cluster without reallocations; all
    slots >= k are kept at zero.
    """

    def __init__(self, labels, k: int, reps: np.ndarray, cfg: DPConfig):
        m, d = reps.shape
        self.reps = reps
        self.labels = np.ascontiguousarray(labels, dtype=np.int64).copy()
        self.k = int(k)
        self.sizes = np.zeros(m + 1, dtype=np.int64)
        self.sums = np.zeros((m + 1, d), dtype=np.float64)
        self.sumsqs = np.zeros(m + 1, dtype=np.float64)
        self.scratch = np.zeros(m + 2, dtype=np.float64)
        self.alpha = cfg.alpha
        self.mu0 = cfg.mu0_vector(d)
        self.s0 = cfg.sigma0_sq
        self.s2 = cfg.sigma_sq
        for i in range(m):
            lab = int(self.labels[i])
            self.sizes[lab] += 1
            self.sums[lab] += reps[i]
            self.sumsqs[lab] += float(reps[i] @ reps[i])

    @property
    def num_points(self) -> int:
        return int(self.labels.shape[0])

    def snapshot(self):
        return (self.labels.copy(), self.k, self.sizes.copy(),
                self.sums.copy(), self.sumsqs.copy())

    def restore(self, snap):
        labels, k, sizes, sums, sumsqs = snap
        self.labels[:] = labels
        self.k = k
        self.sizes[:] = sizes
        self.sums[:] = sums
        self.sumsqs[:] = sumsqs

    def move_point(self, i: int, src: int, dst: int):
        x = self.reps[i]
        self.labels[i] = dst
        self.sizes[src] -= 1
        self.sizes[dst] += 1
        self.sums[src] -= x
        self.sums[dst] += x
        xx = float(x @ x)
        self.sumsqs[src] -= xx
        self.sumsqs[dst] += xx

    def merge_clusters(self, src: int, dst: int):
        self.labels[self.labels == src] = dst
        self.sizes[dst] += self.sizes[src]
        self.sums[dst] += self.sums[src]
        self.sumsqs[dst] += self.sumsqs[src]
        last = self.k - 1
        if src != last:
            self.sizes[src] = self.sizes[last]
            self.sums[src] = self.sums[last]
            self.sumsqs[src] = self.sumsqs[last]
            self.labels[self.labels == last] = src
        self.sizes[last] = 0
        self.sums[last] = 0.0
        self.sumsqs[last] = 0.0
        self.k = last

    def log_marginal_cluster(self, k: int) -> float:
        return backends.log_marginal(
            int(self.sizes[k]), self.sums[k], float(self.sumsqs[k]),
            self.mu0, self.s0, self.s2)

    def canonicalize(self):
        canon, k = canonical_labels(self.labels)
        if np.array_equal(canon, self.labels):
            return
        # first-appearance order of the old ids gives the slot permutation
        order = []
        seen = set()
        for lab in self.labels.tolist():
            if lab not in seen:
                seen.add(lab)
                order.append(lab)
        perm = np.array(order, dtype=np.int64)
        self.sizes[:self.k] = self.sizes[perm]
        self.sums[:self.k] = self.sums[perm]
        self.sumsqs[:self.k] = self.sumsqs[perm]
        self.labels[:] = canon

    def to_assignment(self) -> Assignment:
        return Assignment.from_labels(self.labels)


def _gibbs_sweep_state(state: _ChainState, rng: np.random.Generator):
    uniforms = rng.random(state.num_points)
    state.k = int(backends.gibbs_sweep(
        state.labels, state.sizes, state.sums, state.sumsqs, state.k,
        state.reps, state.alpha, state.mu0, state.s0, state.s2,
        uniforms, state.scratch))
    state.canonicalize()


def _split_merge_move(state: _ChainState, t_scans: int,
                      rng: np.random.Generator) -> MoveOutcome:
    m = state.num_points
    i = int(rng.integers(m))
    j = int(rng.integers(m - 1))
    if j >= i:
        j += 1
    ci = int(state.labels[i])
    cj = int(state.labels[j])

    if ci == cj:
        s_list = [p for p in range(m)
                  if p != i and p != j and state.labels[p] == ci]
        s_idx = np.array(s_list, dtype=np.int64)
        dummy_t = np.zeros(s_idx.shape[0], dtype=np.int64)
        n_orig = int(state.sizes[ci])
        logm_orig = state.log_marginal_cluster(ci)
        snap = state.snapshot()

        knew = state.k
        state.k += 1
        state.move_point(i, ci, knew)
        coins = rng.random(s_idx.shape[0])
        for pos, p in enumerate(s_list):
            if coins[pos] < 0.5:
                state.move_point(p, ci, knew)
        for _ in range(t_scans):
            u = rng.random(s_idx.shape[0])
            backends.restricted_scan(
                state.labels, state.sizes, state.sums, state.sumsqs,
                state.reps, s_idx, knew, ci, state.mu0, state.s0, state.s2,
                u, dummy_t, 0)
        u = rng.random(s_idx.shape[0])
        logq_fwd = backends.restricted_scan(
            state.labels, state.sizes, state.sums, state.sumsqs,
            state.reps, s_idx, knew, ci, state.mu0, state.s0, state.s2,
            u, dummy_t, 0)
        na = int(state.sizes[knew])
        nb = int(state.sizes[ci])
        delta = (math.log(state.alpha)
                 + math.lgamma(na) + math.lgamma(nb) - math.lgamma(n_orig)
                 + state.log_marginal_cluster(knew)
                 + state.log_marginal_cluster(ci)
                 - logm_orig)
        log_acc = delta - logq_fwd
        kind = "split"
        accepted = log_acc >= 0.0 or rng.random() < math.exp(log_acc)
        if not accepted:
            state.restore(snap)
    else:
        s_list = [p for p in range(m)
                  if p != i and p != j and state.labels[p] in (ci, cj)]
        s_idx = np.array(s_list, dtype=np.int64)
        dummy_t = np.zeros(s_idx.shape[0], dtype=np.int64)
        dummy_u = np.zeros(s_idx.shape[0], dtype=np.float64)
        n_i = int(state.sizes[ci])
        n_j = int(state.sizes[cj])
        logm_i = state.log_marginal_cluster(ci)
        logm_j = state.log_marginal_cluster(cj)
        snap = state.snapshot()

        # hypothetical reverse split: same anchors, random launch, forced
        # final scan reproducing the current configuration
        coins = rng.random(s_idx.shape[0])
        for pos, p in enumerate(s_list):
            tgt = ci if coins[pos] < 0.5 else cj
            cur = int(state.labels[p])
            if cur != tgt:
                state.move_point(p, cur, tgt)
        for _ in range(t_scans):
            u = rng.random(s_idx.shape[0])
            backends.restricted_scan(
                state.labels, state.sizes, state.sums, state.sumsqs,
                state.reps, s_idx, ci, cj, state.mu0, state.s0, state.s2,
                u, dummy_t, 0)
        targets = snap[0][s_idx]
        logq_rev = backends.restricted_scan(
            state.labels, state.sizes, state.sums, state.sumsqs,
            state.reps, s_idx, ci, cj, state.mu0, state.s0, state.s2,
            dummy_u, targets, 1)
        state.restore(snap)

        n_m = n_i + n_j
        merged_sum = np.ascontiguousarray(state.sums[ci] + state.sums[cj])
        merged_ssq = float(state.sumsqs[ci] + state.sumsqs[cj])
        logm_m = backends.log_marginal(
            n_m, merged_sum, merged_ssq, state.mu0, state.s0, state.s2)
        delta = (-math.log(state.alpha)
                 + math.lgamma(n_m) - math.lgamma(n_i) - math.lgamma(n_j)
                 + logm_m - logm_i - logm_j)
        log_acc = logq_rev + delta
        kind = "merge"
        accepted = log_acc >= 0.0 or rng.random() < math.exp(log_acc)
        if accepted:
            state.merge_clusters(ci, cj)

    state.canonicalize()
    return MoveOutcome(kind=kind, accepted=accepted,
                       log_acceptance=min(0.0, log_acc), k_after=state.k)


def gibbs_sweep(a: Assignment, reps, cfg: DPConfig,
                rng: np.random.Generator) -> Assignment:
    """One full Gibbs sweep; returns the new canonical assignment."""
    reps = _as_reps(reps)
    state = _ChainState(a.labels, a.k, reps, cfg)
    _gibbs_sweep_state(state, rng)
    return state.to_assignment()


def split_merge_step(a: Assignment, reps, cfg: DPConfig,
                     sm_cfg: SamplerConfig,
                     rng: np.random.Generator) -> tuple[Assignment, MoveOutcome]:
    """One split-merge proposal with Metropolis-Hastings accept/reject."""
    reps = _as_reps(reps)
    if reps.shape[0] < 2:
        raise ValueError("split-merge requires at least two points")
    state = _ChainState(a.labels, a.k, reps, cfg)
    outcome = _split_merge_move(state, sm_cfg.t_restricted_scans, rng)
    return state.to_assignment(), outcome


def restricted_gibbs_scan(a: Assignment, s_indices, i: int, j: int, reps,
                          cfg: DPConfig, rng: np.random.Generator,
                          forced_target: Assignment | None = None
                          ) -> tuple[Assignment, float]:
    """One restricted scan over ``s_indices`` between the clusters of i and j.

    Every index in ``s_indices`` must currently sit in cluster(i) or
    cluster(j) and must not equal i or j (the anchors stay put). With
    ``forced_target``, each point is moved to its target cluster (labelled in
    the same space as ``a``) and the accumulated log probability of those
    choices is returned instead of sampling.
    """
    reps = _as_reps(reps)
    s_idx = np.asarray(sorted(int(s) for s in s_indices), dtype=np.int64)
    if np.isin([i, j], s_idx).any():
        raise ValueError("scan set must not contain the anchor points")
    ka = int(a.labels[i])
    kb = int(a.labels[j])
    if not np.all(np.isin(a.labels[s_idx], [ka, kb])):
        raise ValueError("scan set must lie in the anchors' clusters")
    state = _ChainState(a.labels, a.k, reps, cfg)
    if forced_target is None:
        uniforms = rng.random(s_idx.shape[0])
        targets = np.zeros(s_idx.shape[0], dtype=np.int64)
        forced = 0
    else:
        targets = np.ascontiguousarray(forced_target.labels[s_idx], dtype=np.int64)
        if not np.all(np.isin(targets, [ka, kb])):
            raise ValueError("forced targets must map into the two scanned clusters")
        uniforms = np.zeros(s_idx.shape[0], dtype=np.float64)
        forced = 1
    logprob = backends.restricted_scan(
        state.labels, state.sizes, state.sums, state.sumsqs, state.reps,
        s_idx, ka, kb, state.mu0, state.s0, state.s2, uniforms, targets, forced)
    return state.to_assignment(), float(logprob)


def run_chain(reps, cfg: DPConfig, sm_cfg: SamplerConfig,
              rng: np.random.Generator,
              init: Assignment) -> tuple[Assignment, list[MoveOutcome]]:
    """Run the configured move budget from ``init``; returns state and diagnostics."""
    reps = _as_reps(reps)
    if init.num_points != reps.shape[0]:
        raise ValueError("init assignment does not match representations")
    state = _ChainState(init.labels, init.k, reps, cfg)
    outcomes: list[MoveOutcome] = []
    if reps.shape[0] >= 2:
        for _ in range(sm_cfg.n_split_merge):
            outcomes.append(_split_merge_move(state, sm_cfg.t_restricted_scans, rng))
    for _ in range(sm_cfg.n_gibbs_sweeps):
        _gibbs_sweep_state(state, rng)
    return state.to_assignment(), outcomes


def _iter_partitions(m: int):
    """Yield every set partition of m items as a canonical label vector."""
    a = np.zeros(m, dtype=np.int64)

    def rec(pos, mx):
        if pos == m:
            yield a
            return
        for v in range(mx + 2):
            a[pos] = v
            yield from rec(pos + 1, v if v > mx else mx)

    if m == 1:
        yield a
    else:
        yield from rec(1, 0)


def _partition_logscore(labels: np.ndarray, reps: np.ndarray, alpha: float,
                        mu0: np.ndarray, s0: float, s2: float) -> float:
    m = labels.shape[0]
    k = int(labels.max()) + 1
    score = math.lgamma(alpha) - math.lgamma(alpha + m) + k * math.log(alpha)
    for kk in range(k):
        pts = reps[labels == kk]
        n = pts.shape[0]
        score += math.lgamma(n)
        score += backends.log_marginal(
            n, np.ascontiguousarray(pts.sum(axis=0)),
            float(np.sum(pts * pts)), mu0, s0, s2)
    return score


def enumerate_posterior(reps, cfg: DPConfig) -> list[tuple[np.ndarray, float]]:
    """Exact assignment posterior by enumerating all set partitions (M <= 10)."""
    reps = _as_reps(reps)
    m, d = reps.shape
    if m > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration too large: M={m} exceeds {ENUMERATION_LIMIT}")
    mu0 = cfg.mu0_vector(d)
    parts = []
    scores = []
    for labels in _iter_partitions(m):
        parts.append(labels.copy())
        scores.append(_partition_logscore(labels, reps, cfg.alpha, mu0,
                                          cfg.sigma0_sq, cfg.sigma_sq))
    scores = np.array(scores)
    mx = scores.max()
    probs = np.exp(scores - mx)
    probs /= probs.sum()
    return list(zip(parts, probs.tolist()))
