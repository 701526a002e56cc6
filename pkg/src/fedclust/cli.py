"""Command-line experiment runner.

Subcommands: ``run`` (one algorithm, one CSV per seed plus a summary),
``sweep`` (fixed-K baseline across a list of K, one combined CSV) and
``validate`` (oracle self-checks). Exit codes: 0 success, 1 runtime failure,
2 config error, 3 failed validation check.
"""

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .federation import run_experiment
from .metrics import CSV_HEADER, record_to_csv_row
from .validate import run_and_report

OUT_ENV_VAR = "FEDCLUST_OUT"


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _records_csv(records) -> str:
    lines = [CSV_HEADER]
    lines.extend(record_to_csv_row(r) for r in records)
    return "\n".join(lines) + "\n"


def _final3(records, field: str) -> float:
    return float(np.mean([getattr(r, field) for r in records[-3:]]))


def _write_summary(path: str, cfg: ExperimentConfig, algorithm: str,
                   seeds: list[int], per_seed_records: dict[int, list]):
    acc = [_final3(per_seed_records[s], "acc_mean") for s in seeds]
    f1 = [_final3(per_seed_records[s], "f1_mean") for s in seeds]
    final_k = {str(s): per_seed_records[s][-1].k_t for s in seeds}
    ks = [per_seed_records[s][-1].k_t for s in seeds]
    summary = {
        "version": f"fedclust-{__version__}",
        "algorithm": algorithm,
        "config": cfg.raw,
        "seeds": seeds,
        "final_k": final_k,
        "final3": {
            "acc_mean": float(np.mean(acc)),
            "acc_sd": float(np.std(acc)),
            "f1_mean": float(np.mean(f1)),
            "f1_sd": float(np.std(f1)),
            "k_mean": float(np.mean(ks)),
            "k_sd": float(np.std(ks)),
        },
    }
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def cmd_run(cfg: ExperimentConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    algorithm = cfg.run.algorithm
    seeds = [cfg.run.seed + i for i in range(cfg.n_seeds)]
    per_seed_records = {}
    for seed in seeds:
        result = run_experiment(replace(cfg.run, seed=seed))
        per_seed_records[seed] = result.records
        _atomic_write(os.path.join(out_dir, f"{algorithm}_seed{seed}.csv"),
                      _records_csv(result.records))
    _write_summary(os.path.join(out_dir, "summary.json"), cfg, algorithm,
                   seeds, per_seed_records)
    return 0


def cmd_sweep(cfg: ExperimentConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    seeds = [cfg.run.seed + i for i in range(cfg.n_seeds)]
    lines = ["K,seed," + CSV_HEADER]
    for k in cfg.sweep_k:
        for seed in seeds:
            run_cfg = replace(cfg.run, algorithm="fixedk", fixed_k=k, seed=seed)
            result = run_experiment(run_cfg)
            for rec in result.records:
                lines.append(f"{k},{seed}," + record_to_csv_row(rec))
    _atomic_write(os.path.join(out_dir, "sweep.csv"), "\n".join(lines) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedclust",
        description="Clustered federated learning simulator with "
                    "nonparametric Bayesian client clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML config path")
    common.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    common.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV_VAR} or ./out)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a dotted config key")

    p_run = sub.add_parser("run", parents=[common],
                           help="run the configured algorithm for each seed")
    p_run.add_argument("--algorithm", choices=("dpmm", "fixedk", "global"),
                       default=None, help="override run.algorithm")
    p_run.add_argument("--k", type=int, default=None, help="override run.fixed_k")

    sub.add_parser("sweep", parents=[common],
                   help="run the fixed-K baseline over run.sweep_k")

    p_val = sub.add_parser("validate", help="run the oracle self-check suites")
    p_val.add_argument("--level", choices=("fast", "full"), default="fast")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "validate":
        return run_and_report(args.level)

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.command == "run":
        if args.algorithm is not None:
            overrides.append(f"run.algorithm={args.algorithm}")
        if args.k is not None:
            overrides.append(f"run.fixed_k={args.k}")

    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or os.environ.get(OUT_ENV_VAR) or "out"
    try:
        if args.command == "run":
            return cmd_run(cfg, out_dir)
        return cmd_sweep(cfg, out_dir)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
