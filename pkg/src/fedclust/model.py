"""Toy differentiable classifiers for simulated clients.

Linear softmax by default, optionally a tanh MLP. Parameters live in a flat
vector laid out layer by layer (weights then biases); the final layer's slice
doubles as the client representation used for clustering. All operations are
pure and deterministic given an explicit random generator.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    num_classes: int
    hidden_dims: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if any(h < 0 for h in self.hidden_dims):
            raise ValueError("hidden dims must be non-negative")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.num_classes]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    @property
    def param_count(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_shapes)

    @property
    def representation_size(self) -> int:
        fi, fo = self.layer_shapes[-1]
        return fi * fo + fo


@dataclass(frozen=True)
class ParamVector:
    """Flat, finite, fixed-length parameter vector."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("parameter vector must be 1-D")
        if not np.all(np.isfinite(v)):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        f = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if f.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != f.shape[0]:
            raise ValueError("labels must match feature rows")
        if y.size and y.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class SGDConfig:
    learning_rate: float = 0.005
    momentum: float = 0.9
    batch_size: int = 32
    local_steps: int = 10

    def __post_init__(self):
        # learning_rate 0 is allowed: it gives the degenerate "no update"
        # round used by equivalence checks
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.local_steps < 1:
            raise ValueError("local_steps must be >= 1")


def _check_params(params: ParamVector, spec: ModelSpec):
    if len(params) != spec.param_count:
        raise ValueError(
            f"parameter vector has length {len(params)}, spec needs {spec.param_count}")


def _check_data(data: LabeledDataset, spec: ModelSpec):
    if data.n == 0:
        raise ValueError("empty dataset")
    if data.features.shape[1] != spec.input_dim:
        raise ValueError("feature dimension does not match spec")
    if data.labels.max() >= spec.num_classes:
        raise ValueError("label out of range for spec")


def _unpack(values: np.ndarray, spec: ModelSpec):
    layers = []
    off = 0
    for fi, fo in spec.layer_shapes:
        w = values[off:off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = values[off:off + fo]
        off += fo
        layers.append((w, b))
    return layers


def _forward(values: np.ndarray, x: np.ndarray, spec: ModelSpec):
    layers = _unpack(values, spec)
    acts = [x]
    h = x
    for li, (w, b) in enumerate(layers):
        z = h @ w + b
        if li < len(layers) - 1:
            h = np.tanh(z)
            acts.append(h)
    return z, acts, layers


def init_params(spec: ModelSpec, rng: np.random.Generator) -> ParamVector:
    """Zero-mean uniform init scaled by 1/sqrt(fan_in), per layer."""
    chunks = []
    for fi, fo in spec.layer_shapes:
        bound = 1.0 / math.sqrt(fi) if fi > 0 else 1.0
        chunks.append(rng.uniform(-bound, bound, size=fi * fo))
        chunks.append(rng.uniform(-bound, bound, size=fo))
    return ParamVector(np.concatenate(chunks))


def loss(params: ParamVector, data: LabeledDataset, spec: ModelSpec) -> float:
    """Mean softmax cross-entropy over the dataset."""
    _check_params(params, spec)
    _check_data(data, spec)
    logits, _, _ = _forward(params.values, data.features, spec)
    mx = logits.max(axis=1)
    lse = mx + np.log(np.exp(logits - mx[:, None]).sum(axis=1))
    return float(np.mean(lse - logits[np.arange(data.n), data.labels]))


def loss_gradient(params: ParamVector, data: LabeledDataset,
                  spec: ModelSpec) -> ParamVector:
    """Exact gradient of ``loss`` with respect to the flat parameter vector."""
    _check_params(params, spec)
    _check_data(data, spec)
    logits, acts, layers = _forward(params.values, data.features, spec)
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    probs = e / e.sum(axis=1, keepdims=True)
    delta = probs
    delta[np.arange(data.n), data.labels] -= 1.0
    delta /= data.n
    grads: list[np.ndarray | None] = [None] * len(layers)
    for li in range(len(layers) - 1, -1, -1):
        grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = (delta @ layers[li][0].T) * (1.0 - acts[li] ** 2)
    flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return ParamVector(flat)


def local_update(params0: ParamVector, data: LabeledDataset, cfg: SGDConfig,
                 spec: ModelSpec, rng: np.random.Generator) -> ParamVector:
    """Run the configured number of momentum-SGD steps from ``params0``.

    Minibatches walk one fixed permutation of the dataset drawn at call time,
    wrapping around when the step budget exceeds one epoch. The momentum
    buffer starts at zero on every call (each round restarts from the cluster
    model).
    """
    _check_params(params0, spec)
    _check_data(data, spec)
    n = data.n
    perm = rng.permutation(n)
    theta = params0.values.copy()
    velocity = np.zeros_like(theta)
    for step in range(cfg.local_steps):
        pos = (np.arange(cfg.batch_size) + step * cfg.batch_size) % n
        batch = data.subset(perm[pos])
        grad = loss_gradient(ParamVector(theta), batch, spec)
        velocity = cfg.momentum * velocity + grad.values
        theta = theta - cfg.learning_rate * velocity
    return ParamVector(theta)


def representation(params: ParamVector, spec: ModelSpec) -> ParamVector:
    """Final-layer weights and biases as a flat vector (the whole vector for
    a linear model)."""
    _check_params(params, spec)
    size = spec.representation_size
    return ParamVector(params.values[len(params) - size:].copy())


def predict(params: ParamVector, features: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Class predictions (argmax logits, ties to the lowest class index)."""
    _check_params(params, spec)
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    logits, _, _ = _forward(params.values, features, spec)
    return np.argmax(logits, axis=1)
