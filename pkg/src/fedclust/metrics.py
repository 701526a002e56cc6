"""Evaluation metrics and the per-round trace record."""

from dataclasses import dataclass

import numpy as np
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score


def _check_pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label vectors must be 1-D and equally long")
    if a.shape[0] == 0:
        raise ValueError("empty label vectors")
    return a, b


def micro_accuracy(preds, labels) -> float:
    preds, labels = _check_pair(preds, labels)
    return float(np.mean(preds == labels))


def macro_f1(preds, labels, num_classes: int) -> float:
    """Unweighted mean of per-class F1. Classes absent from both vectors are
    excluded; a class with zero precision+recall denominator scores 0."""
    preds, labels = _check_pair(preds, labels)
    scores = []
    for c in range(num_classes):
        in_pred = preds == c
        in_true = labels == c
        if not in_pred.any() and not in_true.any():
            continue
        tp = float(np.sum(in_pred & in_true))
        denom = float(in_pred.sum() + in_true.sum())
        scores.append(2.0 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))


def adjusted_rand_index(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(adjusted_rand_score(a, b))


def normalized_mutual_info(a, b) -> float:
    a, b = _check_pair(a, b)
    return float(normalized_mutual_info_score(a, b, average_method="arithmetic"))


@dataclass(frozen=True)
class RoundRecord:
    """One row of the experiment trace."""

    round: int
    k_t: int
    acc_mean: float
    acc_sd: float
    f1_mean: float
    f1_sd: float
    ari: float
    nmi: float
    logpost: float
    objective: float
    accept_split: int
    accept_merge: int


CSV_HEADER = ("round,K_t,acc_mean,acc_sd,f1_mean,f1_sd,ari,nmi,"
              "logpost,objective,accept_split,accept_merge")

_CSV_FIELDS = ("round", "k_t", "acc_mean", "acc_sd", "f1_mean", "f1_sd",
               "ari", "nmi", "logpost", "objective", "accept_split",
               "accept_merge")


def record_to_csv_row(rec: RoundRecord) -> str:
    parts = []
    for name in _CSV_FIELDS:
        v = getattr(rec, name)
        parts.append(str(v) if isinstance(v, (int, np.integer)) else repr(float(v)))
    return ",".join(parts)
