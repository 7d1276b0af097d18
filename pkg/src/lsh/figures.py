"""Report figures rendered to SVG next to the delimited outputs.

Figures are byte-reproducible: a fixed hash salt and no embedded date.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lsh"

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def save_nll_trace(trace, path) -> None:
    """Objective value per outer iteration of the alternating fit."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot([i for i, _ in trace], [v for _, v in trace], marker=".", color="#1f77b4")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("negative log-likelihood")
    fig.tight_layout()
    _save(fig, path)


def save_auc_boxplot(result, path) -> None:
    """Distribution of per-window AUC values over the sampled time points."""
    fig, ax = plt.subplots(figsize=(3.2, 4))
    ax.boxplot([result.aucs], tick_labels=["model"])
    ax.set_ylabel("AUC")
    ax.set_ylim(0.0, 1.05)
    fig.tight_layout()
    _save(fig, path)


def save_ppc_histograms(ensemble: dict, out_dir) -> list:
    """One histogram per statistic: simulated samples, with the observed value
    (blue) and the simulated mean (red) as vertical lines."""
    out_dir = Path(out_dir)
    paths = []
    for name, summary in ensemble.items():
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.hist(summary.samples, bins=10, color="#bbbbbb", edgecolor="black")
        ax.axvline(summary.mean, color="red", label="simulated mean")
        if summary.actual is not None:
            ax.axvline(summary.actual, color="blue", label="observed")
        ax.set_xlabel(name.replace("_", " "))
        ax.set_ylabel("count")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"ppc_{name}.svg"
        _save(fig, path)
        paths.append(path)
    return paths
