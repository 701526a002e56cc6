"""Federated orchestration: broadcast, local updates, clustering, aggregation.

One round initialises every client from its cluster model, runs local
momentum-SGD, extracts and z-scores the client representations, re-infers the
clustering (split-merge chain, fixed-K k-means, or the trivial single
cluster), then aggregates per cluster and evaluates. Client updates draw from
per-client seed streams, so results are independent of execution order.
"""

from dataclasses import dataclass, replace

import numpy as np

from .dpmm import Assignment, DPConfig, posterior_logscore
from .metrics import (RoundRecord, adjusted_rand_index, macro_f1,
                      micro_accuracy, normalized_mutual_info)
from .model import (LabeledDataset, ModelSpec, ParamVector, SGDConfig,
                    init_params, local_update, loss, predict, representation)
from .partition import PartitionSpec, PoolSpec, generate_pool, make_partition
from .sampler import SamplerConfig, run_chain

ALGORITHMS = ("dpmm", "fixedk", "global")
AGGREGATION_MODES = ("sample_weighted", "uniform")


@dataclass(frozen=True)
class ClientState:
    id: int
    train: LabeledDataset
    test: LabeledDataset
    params: ParamVector


@dataclass(frozen=True)
class ClusterModel:
    params: ParamVector
    member_count: int
    weighted_size: int

    def __post_init__(self):
        if self.member_count < 1:
            raise ValueError("cluster must have at least one member")


@dataclass(frozen=True)
class RunConfig:
    rounds: int
    model: ModelSpec
    sgd: SGDConfig
    dp: DPConfig
    sampler: SamplerConfig
    pool: PoolSpec
    partition: PartitionSpec
    aggregation_mode: str = "sample_weighted"
    algorithm: str = "dpmm"
    fixed_k: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.aggregation_mode not in AGGREGATION_MODES:
            raise ValueError(f"unknown aggregation mode {self.aggregation_mode!r}")
        if self.algorithm == "fixedk" and self.fixed_k < 1:
            raise ValueError("fixed_k must be >= 1")


@dataclass
class FedState:
    clients: list[ClientState]
    assignment: Assignment
    cluster_models: list[ClusterModel]
    ground_truth: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    records: list[RoundRecord]
    final_state: FedState


def aggregate(members: list[tuple[ParamVector, int]], mode: str) -> ParamVector:
    """Combine member parameter vectors: sample-size weighted or uniform."""
    if not members:
        raise ValueError("cannot aggregate an empty member list")
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    if mode == "sample_weighted":
        total = sum(n for _, n in members)
        out = sum((p.values * (n / total) for p, n in members),
                  start=np.zeros(len(members[0][0])))
    else:
        out = sum((p.values for p, _ in members),
                  start=np.zeros(len(members[0][0]))) / len(members)
    return ParamVector(out)


def clustered_objective(cluster_models: list[ClusterModel],
                        clients: list[ClientState], assignment: Assignment,
                        spec: ModelSpec) -> float:
    """Sample-weighted within-cluster empirical risk of the cluster models."""
    if assignment.k != len(cluster_models):
        raise ValueError("assignment and cluster models disagree on K")
    total = 0.0
    for k, cm in enumerate(cluster_models):
        members = [c for c in clients if assignment.labels[c.id] == k]
        if not members:
            raise ValueError("empty cluster in objective")
        n_k = sum(c.train.n for c in members)
        for c in members:
            total += (c.train.n / n_k) * loss(cm.params, c.train, spec)
    return total


def zscore_columns(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Per-column standardisation; (near-)constant columns are set to zero."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    keep = sd > tol
    out[:, keep] = (x[:, keep] - mean[keep]) / sd[keep]
    return out


def kmeans_labels(x: np.ndarray, k: int, rng: np.random.Generator,
                  n_iter: int = 50) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; empty clusters are reseeded
    at the point farthest from its centre."""
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > m:
        raise ValueError(f"k={k} exceeds the number of points {m}")
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[int(rng.integers(m))]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(m))
        else:
            idx = int(np.searchsorted(np.cumsum(d2 / total), rng.random()))
            idx = min(idx, m - 1)
        centers[c] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[c]) ** 2, axis=1))
    labels = np.zeros(m, dtype=np.int64)
    for _ in range(n_iter):
        dist = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        for c in range(k):
            mask = new_labels == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            else:
                far = int(np.argmax(dist[np.arange(m), new_labels]))
                centers[c] = x[far]
                new_labels[far] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def _reinfer_assignment(cfg: RunConfig, state: FedState, reps_z: np.ndarray,
                        rng: np.random.Generator):
    m = reps_z.shape[0]
    if cfg.algorithm == "dpmm":
        if cfg.sampler.warm_start:
            init = state.assignment
        else:
            init = Assignment.from_labels(np.zeros(m, dtype=np.int64))
        return run_chain(reps_z, cfg.dp, cfg.sampler, rng, init)
    if cfg.algorithm == "fixedk":
        labels = kmeans_labels(reps_z, cfg.fixed_k, rng)
        return Assignment.from_labels(labels), []
    return Assignment.from_labels(np.zeros(m, dtype=np.int64)), []


def run_round(state: FedState, cfg: RunConfig, round_index: int,
              round_ss: np.random.SeedSequence) -> tuple[FedState, RoundRecord]:
    """One communication round; returns the new state and its trace record."""
    clients = state.clients
    m = len(clients)
    child_seeds = round_ss.spawn(m + 1)

    new_params: list[ParamVector] = []
    for idx, client in enumerate(clients):
        start = state.cluster_models[int(state.assignment.labels[idx])].params
        rng = np.random.default_rng(child_seeds[idx])
        new_params.append(local_update(start, client.train, cfg.sgd, cfg.model, rng))

    reps = np.stack([representation(p, cfg.model).values for p in new_params])
    reps_z = zscore_columns(reps)

    clustering_rng = np.random.default_rng(child_seeds[m])
    assignment, outcomes = _reinfer_assignment(cfg, state, reps_z, clustering_rng)

    cluster_models = []
    for k in range(assignment.k):
        members = [(new_params[i], clients[i].train.n)
                   for i in range(m) if assignment.labels[i] == k]
        cluster_models.append(ClusterModel(
            params=aggregate(members, cfg.aggregation_mode),
            member_count=len(members),
            weighted_size=sum(n for _, n in members)))

    new_clients = [replace(c, params=p) for c, p in zip(clients, new_params)]

    accs = []
    f1s = []
    for i, client in enumerate(new_clients):
        params_k = cluster_models[int(assignment.labels[i])].params
        preds = predict(params_k, client.test.features, cfg.model)
        accs.append(micro_accuracy(preds, client.test.labels))
        f1s.append(macro_f1(preds, client.test.labels, cfg.model.num_classes))

    record = RoundRecord(
        round=round_index,
        k_t=assignment.k,
        acc_mean=float(np.mean(accs)),
        acc_sd=float(np.std(accs)),
        f1_mean=float(np.mean(f1s)),
        f1_sd=float(np.std(f1s)),
        ari=adjusted_rand_index(assignment.labels, state.ground_truth),
        nmi=normalized_mutual_info(assignment.labels, state.ground_truth),
        logpost=posterior_logscore(assignment, reps_z, cfg.dp),
        objective=clustered_objective(cluster_models, new_clients, assignment, cfg.model),
        accept_split=sum(1 for o in outcomes if o.kind == "split" and o.accepted),
        accept_merge=sum(1 for o in outcomes if o.kind == "merge" and o.accepted),
    )
    new_state = FedState(clients=new_clients, assignment=assignment,
                         cluster_models=cluster_models,
                         ground_truth=state.ground_truth)
    return new_state, record


def initial_state(cfg: RunConfig, pool_rng, partition_rng, init_rng) -> FedState:
    """Generate data and the single-cluster starting point."""
    pool = generate_pool(cfg.pool, pool_rng)
    part = make_partition(pool, cfg.partition, partition_rng)
    omega0 = init_params(cfg.model, init_rng)
    clients = [ClientState(id=i, train=part.train_sets[i], test=part.test_sets[i],
                           params=omega0)
               for i in range(part.num_clients)]
    assignment = Assignment.from_labels(np.zeros(len(clients), dtype=np.int64))
    total_n = sum(c.train.n for c in clients)
    models = [ClusterModel(params=omega0, member_count=len(clients),
                           weighted_size=total_n)]
    return FedState(clients=clients, assignment=assignment,
                    cluster_models=models, ground_truth=part.ground_truth)


def run_experiment(cfg: RunConfig) -> ExperimentResult:
    """Full run: data generation, T rounds, per-round trace."""
    if cfg.algorithm == "fixedk" and cfg.fixed_k > cfg.partition.num_clients:
        raise ValueError("fixed_k exceeds the number of clients")
    ss = np.random.SeedSequence(cfg.seed)
    pool_ss, part_ss, init_ss, rounds_ss = ss.spawn(4)
    state = initial_state(cfg, np.random.default_rng(pool_ss),
                          np.random.default_rng(part_ss),
                          np.random.default_rng(init_ss))
    round_seeds = rounds_ss.spawn(cfg.rounds)
    records = []
    for t in range(1, cfg.rounds + 1):
        state, rec = run_round(state, cfg, t, round_seeds[t - 1])
        records.append(rec)
    return ExperimentResult(records=records, final_state=state)
