"""Synthetic data pool and non-IID client partitioning.

Builds a Gaussian labelled pool and splits it across clients under two
label-skew regimes: Dirichlet-controlled skew (cluster-level class
proportions drawn at low concentration, client-level at high concentration)
and class-split (each cluster owns a small random class subset, each client a
smaller subset of that). Both schemes record the ground-truth cluster of
every client and partition the pool exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import LabeledDataset


class DegeneratePartitionError(RuntimeError):
    pass


@dataclass(frozen=True)
class PoolSpec:
    num_classes: int
    samples_per_class: int
    feature_dim: int
    class_separation: float
    noise_sd: float

    def __post_init__(self):
        if self.num_classes < 1 or self.samples_per_class < 1 or self.feature_dim < 1:
            raise ValueError("pool sizes must be positive")
        if self.class_separation <= 0 or self.noise_sd <= 0:
            raise ValueError("class_separation and noise_sd must be positive")


@dataclass(frozen=True)
class PartitionSpec:
    scheme: str = "dirichlet"
    k_true: int = 4
    num_clients: int = 16
    alpha_inter: float = 0.1
    alpha_intra: float = 10.0
    classes_per_cluster: int = 3
    classes_per_client: int = 2
    test_fraction: float = 0.25

    def __post_init__(self):
        if self.scheme not in ("dirichlet", "class_split"):
            raise ValueError(f"unknown partition scheme {self.scheme!r}")
        if self.k_true < 1 or self.num_clients < 1:
            raise ValueError("k_true and num_clients must be positive")
        if self.num_clients % self.k_true != 0:
            raise ValueError("num_clients must be a multiple of k_true")
        if self.alpha_inter <= 0 or self.alpha_intra <= 0:
            raise ValueError("Dirichlet concentrations must be positive")
        if not 1 <= self.classes_per_client <= self.classes_per_cluster:
            raise ValueError("need 1 <= classes_per_client <= classes_per_cluster")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ClientPartition:
    train_sets: tuple[LabeledDataset, ...]
    test_sets: tuple[LabeledDataset, ...]
    ground_truth: np.ndarray

    def __post_init__(self):
        if not (len(self.train_sets) == len(self.test_sets) == len(self.ground_truth)):
            raise ValueError("per-client fields must have equal length")

    @property
    def num_clients(self) -> int:
        return len(self.train_sets)


def _class_means(num_classes: int, dim: int, separation: float) -> np.ndarray:
    """Class-mean layout with pairwise distances (approximately) equal to
    ``separation``: scaled standard basis when the dimension allows it,
    otherwise a circle (adjacent distance = separation), or a line in 1-D."""
    if dim == 1:
        means = (np.arange(num_classes, dtype=np.float64) * separation)[:, None]
    elif dim >= num_classes:
        means = np.zeros((num_classes, dim))
        for c in range(num_classes):
            means[c, c] = separation / math.sqrt(2.0)
    else:
        radius = separation / (2.0 * math.sin(math.pi / num_classes))
        angles = 2.0 * math.pi * np.arange(num_classes) / num_classes
        means = np.zeros((num_classes, dim))
        means[:, 0] = radius * np.cos(angles)
        means[:, 1] = radius * np.sin(angles)
    return means - means.mean(axis=0)


def generate_pool(spec: PoolSpec, rng: np.random.Generator) -> LabeledDataset:
    """Sample the labelled pool: equal class counts, Gaussian class clouds."""
    means = _class_means(spec.num_classes, spec.feature_dim, spec.class_separation)
    feats = []
    labs = []
    for c in range(spec.num_classes):
        feats.append(means[c] + spec.noise_sd
                     * rng.standard_normal((spec.samples_per_class, spec.feature_dim)))
        labs.append(np.full(spec.samples_per_class, c, dtype=np.int64))
    features = np.concatenate(feats)
    labels = np.concatenate(labs)
    order = rng.permutation(features.shape[0])
    return LabeledDataset(features[order], labels[order])


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Allocate ``total`` integer units proportionally to ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.sum() <= 0:
        w = np.ones_like(w)
    shares = w / w.sum() * total
    counts = np.floor(shares).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(shares - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def train_test_split(dataset: LabeledDataset, test_fraction: float,
                     rng: np.random.Generator) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified-by-label split; test receives ceil(n * fraction) samples."""
    if dataset.n < 2:
        raise ValueError("need at least 2 samples to split")
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    n = dataset.n
    n_test = min(math.ceil(n * test_fraction), n - 1)
    classes = np.unique(dataset.labels)
    class_idx = [np.where(dataset.labels == c)[0] for c in classes]
    counts = np.array([len(ix) for ix in class_idx])
    shares = counts * (n_test / n)
    take = np.floor(shares).astype(np.int64)
    # distribute the shortfall by largest fractional remainder, capped by
    # class size
    order = np.argsort(-(shares - take), kind="stable").tolist()
    pos = 0
    while int(take.sum()) < n_test:
        c = order[pos % len(order)]
        if take[c] < counts[c]:
            take[c] += 1
        pos += 1
    test_idx = []
    for ci, ix in enumerate(class_idx):
        chosen = rng.permutation(len(ix))[:take[ci]]
        test_idx.append(ix[chosen])
    test_idx = np.sort(np.concatenate(test_idx))
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    return dataset.subset(np.where(~mask)[0]), dataset.subset(test_idx)


def _split_clients(pool: LabeledDataset, client_rows: list[list[np.ndarray]],
                   ground_truth: np.ndarray, test_fraction: float,
                   rng: np.random.Generator) -> ClientPartition:
    trains = []
    tests = []
    for rows in client_rows:
        idx = np.sort(np.concatenate(rows)) if rows else np.array([], dtype=np.int64)
        ds = pool.subset(idx)
        tr, te = train_test_split(ds, test_fraction, rng)
        trains.append(tr)
        tests.append(te)
    return ClientPartition(tuple(trains), tuple(tests),
                           np.asarray(ground_truth, dtype=np.int64))


def dirichlet_partition(pool: LabeledDataset, pspec: PartitionSpec,
                        rng: np.random.Generator) -> ClientPartition:
    """Two-level Dirichlet label-skew partition.

    Cluster-level class proportions are Dirichlet(alpha_inter); each class's
    samples are routed to clusters by largest-remainder allocation matching
    those proportions. Within a cluster, client class proportions are
    Dirichlet(alpha_intra * cluster proportions) and the cluster's samples
    are routed the same way. Empty clusters trigger a reallocation (fresh
    proportions for the offending clusters), up to 100 retries.
    """
    if pspec.scheme != "dirichlet":
        raise ValueError("partition spec is not configured for the dirichlet scheme")
    num_classes = int(pool.labels.max()) + 1
    k = pspec.k_true
    per_cluster = pspec.num_clients // k

    class_rows = [rng.permutation(np.where(pool.labels == c)[0])
                  for c in range(num_classes)]

    props = rng.dirichlet(np.full(num_classes, pspec.alpha_inter), size=k)
    for attempt in range(101):
        if attempt == 100:
            raise DegeneratePartitionError("degenerate partition")
        cluster_rows: list[list[np.ndarray]] = [[] for _ in range(k)]
        for c in range(num_classes):
            rows = class_rows[c]
            counts = _largest_remainder(props[:, c], len(rows))
            offs = np.concatenate([[0], np.cumsum(counts)])
            for kk in range(k):
                cluster_rows[kk].append(rows[offs[kk]:offs[kk + 1]])
        totals = np.array([sum(len(r) for r in rows) for rows in cluster_rows])
        if np.all(totals > 0):
            break
        for kk in np.where(totals == 0)[0]:
            props[kk] = rng.dirichlet(np.full(num_classes, pspec.alpha_inter))

    client_rows: list[list[np.ndarray]] = [[] for _ in range(pspec.num_clients)]
    ground_truth = np.repeat(np.arange(k), per_cluster)
    for kk in range(k):
        conc = np.maximum(pspec.alpha_intra * props[kk], 1e-12)
        client_props = rng.dirichlet(conc, size=per_cluster)
        base = kk * per_cluster
        for c in range(num_classes):
            rows = cluster_rows[kk][c]
            if len(rows) == 0:
                continue
            counts = _largest_remainder(client_props[:, c], len(rows))
            offs = np.concatenate([[0], np.cumsum(counts)])
            for m in range(per_cluster):
                client_rows[base + m].append(rows[offs[m]:offs[m + 1]])

    return _split_clients(pool, client_rows, ground_truth, pspec.test_fraction, rng)


def class_split_partition(pool: LabeledDataset, pspec: PartitionSpec,
                          rng: np.random.Generator) -> ClientPartition:
    """Class-subset partition: clusters own random class subsets, clients own
    subsets of their cluster's classes, samples divided evenly (round-robin
    remainders). Class subsets are redrawn until every pool class is owned by
    some cluster and every cluster class by some client, so the pool is
    partitioned exactly."""
    if pspec.scheme != "class_split":
        raise ValueError("partition spec is not configured for the class_split scheme")
    num_classes = int(pool.labels.max()) + 1
    k = pspec.k_true
    per_cluster = pspec.num_clients // k
    if pspec.classes_per_cluster > num_classes:
        raise ValueError("classes_per_cluster exceeds the pool's class count")
    if k * pspec.classes_per_cluster < num_classes:
        raise DegeneratePartitionError(
            "degenerate partition: clusters cannot cover every class")

    for attempt in range(101):
        if attempt == 100:
            raise DegeneratePartitionError("degenerate partition")
        cluster_classes = [rng.choice(num_classes, size=pspec.classes_per_cluster,
                                      replace=False) for _ in range(k)]
        if len(set(int(c) for cc in cluster_classes for c in cc)) == num_classes:
            break

    client_classes: list[np.ndarray] = []
    for kk in range(k):
        for attempt in range(101):
            if attempt == 100:
                raise DegeneratePartitionError("degenerate partition")
            picks = [rng.choice(cluster_classes[kk], size=pspec.classes_per_client,
                                replace=False) for _ in range(per_cluster)]
            covered = set(int(c) for p in picks for c in p)
            if covered == set(int(c) for c in cluster_classes[kk]):
                break
        client_classes.extend(picks)

    class_rows = [rng.permutation(np.where(pool.labels == c)[0])
                  for c in range(num_classes)]
    client_rows: list[list[np.ndarray]] = [[] for _ in range(pspec.num_clients)]
    ground_truth = np.repeat(np.arange(k), per_cluster)

    for c in range(num_classes):
        rows = class_rows[c]
        holders = [kk for kk in range(k) if c in cluster_classes[kk]]
        holders = holders[c % len(holders):] + holders[:c % len(holders)]
        counts = _largest_remainder(np.ones(len(holders)), len(rows))
        offs = np.concatenate([[0], np.cumsum(counts)])
        for pos, kk in enumerate(holders):
            crows = rows[offs[pos]:offs[pos + 1]]
            members = [m for m in range(kk * per_cluster, (kk + 1) * per_cluster)
                       if c in client_classes[m]]
            members = members[c % len(members):] + members[:c % len(members)]
            mcounts = _largest_remainder(np.ones(len(members)), len(crows))
            moffs = np.concatenate([[0], np.cumsum(mcounts)])
            for mpos, m in enumerate(members):
                client_rows[m].append(crows[moffs[mpos]:moffs[mpos + 1]])

    return _split_clients(pool, client_rows, ground_truth, pspec.test_fraction, rng)


def make_partition(pool: LabeledDataset, pspec: PartitionSpec,
                   rng: np.random.Generator) -> ClientPartition:
    if pspec.scheme == "dirichlet":
        return dirichlet_partition(pool, pspec, rng)
    return class_split_partition(pool, pspec, rng)


def export_partition(part: ClientPartition, path: str):
    """Write a partition as flat columnar text: one row per sample."""
    dim = part.train_sets[0].features.shape[1]
    cols = ",".join(f"f{j}" for j in range(dim))
    lines = [f"client_id,cluster_id,split,label,{cols}"]
    for cid in range(part.num_clients):
        for split, ds in (("train", part.train_sets[cid]), ("test", part.test_sets[cid])):
            for row in range(ds.n):
                feats = ",".join(repr(float(v)) for v in ds.features[row])
                lines.append(
                    f"{cid},{int(part.ground_truth[cid])},{split},{int(ds.labels[row])},{feats}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_partition(path: str) -> ClientPartition:
    """Read a partition written by ``export_partition``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:4] != ["client_id", "cluster_id", "split", "label"]:
            raise ValueError("unrecognised partition file header")
        per_client: dict[int, dict[str, list]] = {}
        clusters: dict[int, int] = {}
        for line in fh:
            parts = line.strip().split(",")
            cid, cluster, split, label = int(parts[0]), int(parts[1]), parts[2], int(parts[3])
            feats = [float(v) for v in parts[4:]]
            rec = per_client.setdefault(cid, {"train": [], "test": []})
            rec[split].append((feats, label))
            clusters[cid] = cluster
    n_clients = max(per_client) + 1
    trains = []
    tests = []
    truth = np.zeros(n_clients, dtype=np.int64)
    for cid in range(n_clients):
        rec = per_client[cid]
        truth[cid] = clusters[cid]
        out = {}
        for split in ("train", "test"):
            feats = np.array([r[0] for r in rec[split]])
            labels = np.array([r[1] for r in rec[split]], dtype=np.int64)
            out[split] = LabeledDataset(feats, labels)
        trains.append(out["train"])
        tests.append(out["test"])
    return ClientPartition(tuple(trains), tuple(tests), truth)
