"""Figure rendering: sweep curves and per-round convergence."""

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .trace import SchemaError, load_trace  # noqa: E402

# fixed style so identical inputs render identical bytes
matplotlib.rcParams["svg.hashsalt"] = "fedplots"
matplotlib.rcParams["figure.dpi"] = 100

FINAL_ROUNDS = 3


def _save(fig, out_path: str):
    kwargs = {}
    if out_path.lower().endswith(".svg"):
        kwargs["metadata"] = {"Date": None}
    fig.savefig(out_path, bbox_inches="tight", **kwargs)
    plt.close(fig)


def _final_mean(values: list[float], rounds: list[float]) -> float:
    order = sorted(range(len(rounds)), key=lambda i: rounds[i])
    tail = order[-FINAL_ROUNDS:]
    return sum(values[i] for i in tail) / len(tail)


def _sweep_stats(table, metric: str):
    """Per-K mean and sd (across seeds) of the final-rounds metric."""
    cols = table.columns
    groups: dict[tuple[float, float], dict] = {}
    for i in range(len(cols["K"])):
        key = (cols["K"][i], cols["seed"][i])
        groups.setdefault(key, {"rounds": [], "values": []})
        groups[key]["rounds"].append(cols["round"][i])
        groups[key]["values"].append(cols[metric][i])
    per_k: dict[float, list[float]] = {}
    for (k, _seed), g in groups.items():
        per_k.setdefault(k, []).append(_final_mean(g["values"], g["rounds"]))
    ks = sorted(per_k)
    means = []
    sds = []
    for k in ks:
        vals = per_k[k]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        means.append(mean)
        sds.append(var ** 0.5)
    return ks, means, sds


def _load_summary(path: str) -> dict:
    with open(path) as fh:
        summary = json.load(fh)
    try:
        final3 = summary["final3"]
        return {
            "acc_mean": float(final3["acc_mean"]),
            "f1_mean": float(final3["f1_mean"]),
            "k_mean": float(final3["k_mean"]),
        }
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: summary missing final3 metrics ({exc})") from exc


def plot_sweep(sweep_csv: str, summary_json: str, out_path: str):
    """Fixed-K accuracy/F1 curves with +-1 sd bands, plus dotted reference
    lines at the adaptive run's mean metric and mean inferred K."""
    table = load_trace(sweep_csv, kind="sweep")
    summary = _load_summary(summary_json)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.4))
    panels = (("acc_mean", "accuracy", summary["acc_mean"]),
              ("f1_mean", "macro-F1", summary["f1_mean"]))
    for ax, (metric, label, ref) in zip(axes, panels):
        ks, means, sds = _sweep_stats(table, metric)
        lo = [m - s for m, s in zip(means, sds)]
        hi = [m + s for m, s in zip(means, sds)]
        ax.fill_between(ks, lo, hi, alpha=0.25, color="tab:blue",
                        linewidth=0, label="fixed K (+-1 sd)")
        ax.plot(ks, means, "o-", color="tab:blue", label="fixed K (mean)")
        ax.axhline(ref, linestyle=":", color="tab:red",
                   label="adaptive K (mean)")
        ax.axvline(summary["k_mean"], linestyle=":", color="tab:gray",
                   label="mean inferred K")
        ax.set_xscale("log", base=2)
        ax.set_xticks(ks)
        ax.set_xticklabels([f"{int(k)}" for k in ks])
        ax.set_xlabel("fixed K")
        ax.set_ylabel(label)
    axes[0].legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    _save(fig, out_path)


def plot_convergence(run_csv: str, out_path: str):
    """Per-round accuracy/F1 (left axis) and inferred K (right axis)."""
    table = load_trace(run_csv, kind="run")
    cols = table.columns
    order = sorted(range(len(cols["round"])), key=lambda i: cols["round"][i])
    rounds = [cols["round"][i] for i in order]
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.plot(rounds, [cols["acc_mean"][i] for i in order], "-",
            color="tab:blue", label="accuracy")
    ax.plot(rounds, [cols["f1_mean"][i] for i in order], "-",
            color="tab:orange", label="macro-F1")
    ax.set_xlabel("round")
    ax.set_ylabel("metric")
    ax.set_ylim(0.0, 1.0)
    right = ax.twinx()
    right.plot(rounds, [cols["K_t"][i] for i in order], drawstyle="steps-post",
               color="tab:green", label="inferred K")
    right.set_ylabel("inferred K")
    right.set_ylim(bottom=0)
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = right.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, fontsize=8, loc="lower right")
    fig.tight_layout()
    _save(fig, out_path)
