import math

import pytest

RUN_HEADER = ("round,K_t,acc_mean,acc_sd,f1_mean,f1_sd,ari,nmi,"
              "logpost,objective,accept_split,accept_merge")


def _run_rows(rounds, k=4, acc0=0.3, seed=0):
    rows = []
    for t in range(1, rounds + 1):
        acc = acc0 + (0.9 - acc0) * (1 - math.exp(-t / 5)) + 0.003 * ((seed + t) % 3)
        f1 = acc - 0.05
        rows.append(
            f"{t},{k},{acc!r},{0.02!r},{f1!r},{0.02!r},{0.8!r},{0.85!r},"
            f"{-120.5!r},{1.2!r},1,0")
    return rows


@pytest.fixture
def run_csv(tmp_path):
    path = tmp_path / "dpmm_seed0.csv"
    path.write_text("\n".join([RUN_HEADER] + _run_rows(12)) + "\n")
    return str(path)


@pytest.fixture
def sweep_csv(tmp_path):
    lines = ["K,seed," + RUN_HEADER]
    for k in (1, 2, 4, 8):
        for seed in (0, 1, 2):
            peak = 0.9 - 0.05 * abs(math.log2(k) - 2) + 0.01 * seed
            for row in _run_rows(6, k=k, acc0=0.3 + 0.05 * math.log2(max(k, 1)),
                                 seed=seed):
                cells = row.split(",")
                cells[2] = repr(peak)
                lines.append(f"{k},{seed}," + ",".join(cells))
    path = tmp_path / "sweep.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def summary_json(tmp_path):
    path = tmp_path / "summary.json"
    path.write_text(
        '{"algorithm": "dpmm", "final3": {"acc_mean": 0.88, "acc_sd": 0.01,'
        ' "f1_mean": 0.83, "f1_sd": 0.01, "k_mean": 4.2, "k_sd": 0.4},'
        ' "final_k": {"0": 4}, "seeds": [0], "version": "fedclust-0.1.0"}\n')
    return str(path)
