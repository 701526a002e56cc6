"""Experiment configuration: YAML schema, defaults, overrides."""

import copy
from dataclasses import dataclass

import yaml

from .dpmm import DPConfig
from .federation import AGGREGATION_MODES, ALGORITHMS, RunConfig
from .model import ModelSpec, SGDConfig
from .partition import PartitionSpec, PoolSpec
from .sampler import SamplerConfig


class ConfigError(ValueError):
    pass


_REQUIRED = ("run.rounds", "partition.num_clients")

_DEFAULTS = {
    "seed": 0,
    "run": {
        "rounds": None,
        "algorithm": "dpmm",
        "seeds": 1,
        "fixed_k": 4,
        "aggregation": "sample_weighted",
        "sweep_k": [1, 2, 4, 8, 16],
    },
    "model": {
        "hidden_dims": [],
    },
    "sgd": {
        "learning_rate": 0.005,
        "momentum": 0.9,
        "batch_size": 32,
        "local_steps": 10,
    },
    "dp": {
        "alpha": 1.0,
        "mu0": 0.0,
        "sigma0_sq": 1.0,
        "sigma_sq": 1.0,
    },
    "sampler": {
        "n_split_merge": 20,
        "n_gibbs_sweeps": 2,
        "t_restricted_scans": 5,
        "warm_start": True,
    },
    "pool": {
        "num_classes": 10,
        "samples_per_class": 300,
        "feature_dim": 10,
        "class_separation": 2.0,
        "noise_sd": 1.0,
    },
    "partition": {
        "scheme": "dirichlet",
        "k_true": 4,
        "num_clients": None,
        "alpha_inter": 0.1,
        "alpha_intra": 10.0,
        "classes_per_cluster": 3,
        "classes_per_client": 2,
        "test_fraction": 0.25,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved run configuration plus CLI-level experiment settings."""

    run: RunConfig
    n_seeds: int
    sweep_k: tuple[int, ...]
    raw: dict

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ConfigError("run.seeds must be >= 1")
        if not self.sweep_k:
            raise ConfigError("run.sweep_k must be nonempty")


def _merge(defaults: dict, given: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key: {path}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path} must be a mapping")
            out[key] = _merge(defaults[key], value, prefix=f"{path}.")
        else:
            out[key] = value
    return out


def _set_dotted(data: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = data
    for key in keys[:-1]:
        cur = cur.setdefault(key, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"config key {dotted} conflicts with a scalar")
    cur[keys[-1]] = value


def parse_overrides(pairs: list[str]) -> dict:
    """Turn ``key=value`` strings (dotted keys, YAML-typed values) into a dict."""
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        _set_dotted(out, key.strip(), value)
    return out


def resolve(raw: dict) -> ExperimentConfig:
    """Apply defaults, check required keys, and build the typed config."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    merged = _merge(_DEFAULTS, raw)
    for dotted in _REQUIRED:
        section, key = dotted.split(".")
        if merged[section][key] is None:
            raise ConfigError(f"missing required key: {dotted}")
    try:
        pool = PoolSpec(
            num_classes=int(merged["pool"]["num_classes"]),
            samples_per_class=int(merged["pool"]["samples_per_class"]),
            feature_dim=int(merged["pool"]["feature_dim"]),
            class_separation=float(merged["pool"]["class_separation"]),
            noise_sd=float(merged["pool"]["noise_sd"]),
        )
        part = PartitionSpec(
            scheme=str(merged["partition"]["scheme"]),
            k_true=int(merged["partition"]["k_true"]),
            num_clients=int(merged["partition"]["num_clients"]),
            alpha_inter=float(merged["partition"]["alpha_inter"]),
            alpha_intra=float(merged["partition"]["alpha_intra"]),
            classes_per_cluster=int(merged["partition"]["classes_per_cluster"]),
            classes_per_client=int(merged["partition"]["classes_per_client"]),
            test_fraction=float(merged["partition"]["test_fraction"]),
        )
        model = ModelSpec(
            input_dim=pool.feature_dim,
            num_classes=pool.num_classes,
            hidden_dims=tuple(merged["model"]["hidden_dims"]),
        )
        sgd = SGDConfig(
            learning_rate=float(merged["sgd"]["learning_rate"]),
            momentum=float(merged["sgd"]["momentum"]),
            batch_size=int(merged["sgd"]["batch_size"]),
            local_steps=int(merged["sgd"]["local_steps"]),
        )
        dp = DPConfig(
            alpha=float(merged["dp"]["alpha"]),
            mu0=float(merged["dp"]["mu0"]),
            sigma0_sq=float(merged["dp"]["sigma0_sq"]),
            sigma_sq=float(merged["dp"]["sigma_sq"]),
        )
        sampler = SamplerConfig(
            n_split_merge=int(merged["sampler"]["n_split_merge"]),
            n_gibbs_sweeps=int(merged["sampler"]["n_gibbs_sweeps"]),
            t_restricted_scans=int(merged["sampler"]["t_restricted_scans"]),
            warm_start=bool(merged["sampler"]["warm_start"]),
        )
        algorithm = str(merged["run"]["algorithm"])
        if algorithm not in ALGORITHMS:
            raise ConfigError(
                f"run.algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
        aggregation = str(merged["run"]["aggregation"])
        if aggregation not in AGGREGATION_MODES:
            raise ConfigError(
                f"run.aggregation must be one of {AGGREGATION_MODES}, got {aggregation!r}")
        run = RunConfig(
            rounds=int(merged["run"]["rounds"]),
            model=model,
            sgd=sgd,
            dp=dp,
            sampler=sampler,
            pool=pool,
            partition=part,
            aggregation_mode=aggregation,
            algorithm=algorithm,
            fixed_k=int(merged["run"]["fixed_k"]),
            seed=int(merged["seed"]),
        )
        sweep_k = tuple(int(k) for k in merged["run"]["sweep_k"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(run=run, n_seeds=int(merged["run"]["seeds"]),
                            sweep_k=sweep_k, raw=merged)


def load_config(path: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a YAML config file, apply ``--set`` overrides, and resolve it."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else path
        raise ConfigError(f"invalid YAML at {where}: {exc}") from exc
    if raw is None:
        raw = {}
    if overrides:
        extra = parse_overrides(overrides)
        _deep_update(raw, extra)
    return resolve(raw)


def _deep_update(base: dict, extra: dict):
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
