"""Scatter figures for sweep output: each metric against test accuracy.

Rendered to PNG files next to the sweep CSV so a sweep run is immediately
inspectable without a separate plotting step.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRIC_COLUMNS = ("auroc", "fpr_at_95_tpr", "cbpl", "cov10")
METRIC_TITLES = {
    "auroc": "AUROC",
    "fpr_at_95_tpr": "FPR at 95% TPR",
    "cbpl": "Coverage breakpoint at test accuracy",
    "cov10": "Coverage at 10% error rate",
}
_MARKERS = ("o", "s", "^", "D", "v", "P", "X")


def render_sweep_figures(rows: list[dict], outdir: str | Path) -> list[Path]:
    """One scatter PNG per metric; color by OOD set, marker by supervisor.

    Rows carrying the "NA" failure sentinel are skipped.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    supervisors = sorted({r["supervisor"] for r in rows})
    ood_sets = sorted({r["ood_set"] for r in rows})
    cmap = plt.get_cmap("tab10")
    colors = {name: cmap(i % 10) for i, name in enumerate(ood_sets)}
    markers = {name: _MARKERS[i % len(_MARKERS)] for i, name in enumerate(supervisors)}

    written: list[Path] = []
    for metric in METRIC_COLUMNS:
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for sup in supervisors:
            for ood in ood_sets:
                xs, ys = [], []
                for r in rows:
                    if r["supervisor"] != sup or r["ood_set"] != ood:
                        continue
                    if r[metric] == "NA" or r["test_accuracy"] == "NA":
                        continue
                    xs.append(float(r["test_accuracy"]))
                    ys.append(float(r[metric]))
                if xs:
                    ax.scatter(
                        xs,
                        ys,
                        s=28,
                        color=colors[ood],
                        marker=markers[sup],
                        alpha=0.8,
                        label=f"{sup} / {ood}",
                    )
        ax.set_xlabel("test accuracy")
        ax.set_ylabel(METRIC_TITLES[metric])
        ax.set_title(f"{METRIC_TITLES[metric]} vs. test accuracy")
        ax.grid(True, alpha=0.3)
        if supervisors and ood_sets:
            ax.legend(fontsize=8, loc="best")
        fig.tight_layout()
        path = outdir / f"sweep_{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
