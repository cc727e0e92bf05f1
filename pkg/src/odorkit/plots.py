"""Figure rendering for the report command.

Each function draws one figure and writes it to a file next to the
delimited data it illustrates. PNG metadata is pinned so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_METADATA = {"Software": "odorkit"}


def _save(fig, path):
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_METADATA)
    plt.close(fig)


def cooccurrence_heatmap(normalized: np.ndarray, labels: list[str], path):
    """Log-scale heatmap of the doubly stochastic co-occurrence matrix."""
    fig, ax = plt.subplots(figsize=(8, 7))
    with np.errstate(divide="ignore"):
        img = np.log10(np.where(normalized > 0, normalized, np.nan))
    im = ax.imshow(img, cmap="viridis", interpolation="nearest")
    ticks = np.arange(len(labels))
    ax.set_xticks(ticks)
    ax.set_yticks(ticks)
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_yticklabels(labels, fontsize=6)
    fig.colorbar(im, ax=ax, label="log10 normalized co-occurrence")
    ax.set_title("Odor descriptor co-occurrence")
    _save(fig, path)


def projection_figure(points: np.ndarray, label_points: dict, path,
                      density_grids: dict | None = None):
    """2-D projection scatter with optional per-label KDE contours.

    label_points maps label -> [m, 2] array of that label's projected
    molecules; density_grids maps label -> DensityGrid.
    """
    fig, ax = plt.subplots(figsize=(7, 6))
    ax.scatter(points[:, 0], points[:, 1], s=4, c="lightgray", label="_all")
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (label, pts) in enumerate(sorted(label_points.items())):
        color = colors[i % len(colors)]
        ax.scatter(pts[:, 0], pts[:, 1], s=8, color=color, label=label, alpha=0.7)
        if density_grids and label in density_grids:
            grid = density_grids[label]
            levels = sorted(grid.contour_levels.values())
            if len(set(levels)) == len(levels) and levels:
                ax.contour(grid.x_edges, grid.y_edges, grid.density,
                           levels=levels, colors=[color], linewidths=0.8, alpha=0.8)
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.legend(fontsize=7, markerscale=1.5)
    ax.set_title("Embedding projection")
    _save(fig, path)


def density_figure(grid, path):
    """Filled contour plot of one label's density grid."""
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.contourf(grid.x_edges, grid.y_edges, grid.density, levels=20, cmap="magma")
    levels = sorted(grid.contour_levels.values())
    if len(set(levels)) == len(levels) and levels:
        ax.contour(grid.x_edges, grid.y_edges, grid.density, levels=levels,
                   colors="white", linewidths=0.6)
    fig.colorbar(im, ax=ax, label="density")
    ax.set_title(f"Density: {grid.label}" if grid.label else "Density")
    _save(fig, path)


def per_descriptor_scatter(model_scores: list, baseline_scores: list,
                           sizes: list, path,
                           model_name: str = "model", baseline_name: str = "baseline"):
    """Per-label model-vs-baseline AUROC scatter, dot size by positives."""
    fig, ax = plt.subplots(figsize=(6, 6))
    s = 6 + 40 * np.asarray(sizes, dtype=float) / max(max(sizes), 1)
    ax.scatter(baseline_scores, model_scores, s=s, alpha=0.6)
    lo = min(min(baseline_scores), min(model_scores), 0.5)
    ax.plot([lo, 1], [lo, 1], ls=":", c="gray")
    ax.set_xlabel(f"{baseline_name} AUROC")
    ax.set_ylabel(f"{model_name} AUROC")
    ax.set_title("Per-descriptor comparison")
    _save(fig, path)


def transfer_bars(result_dicts: list[dict], path):
    """Horizontal bars with CI whiskers for each transfer arm."""
    arms = ["full_gnn", "embedding_rf", "fingerprint_rf"]
    names = {"full_gnn": "GNN trained on target",
             "embedding_rf": "RF on GNN embeddings",
             "fingerprint_rf": "RF on count fingerprints"}
    values = {arm: [] for arm in arms}
    errs = {arm: [[], []] for arm in arms}
    for res in result_dicts:
        for arm in arms:
            v = res[arm]["auroc"]
            lo, hi = res[arm]["ci"]
            values[arm].append(v)
            errs[arm][0].append(max(0.0, v - lo))
            errs[arm][1].append(max(0.0, hi - v))
    means = [float(np.mean(values[arm])) for arm in arms]
    mean_err = [[float(np.mean(errs[arm][0]))] for arm in arms], \
               [[float(np.mean(errs[arm][1]))] for arm in arms]
    fig, ax = plt.subplots(figsize=(6, 3))
    y = np.arange(len(arms))[::-1]
    ax.barh(y, means, xerr=np.array([[e[0][0] for e in mean_err[0]],
                                     [e[0][0] for e in mean_err[1]]]),
            height=0.6, color=["#4c72b0", "#55a868", "#c44e52"], capsize=4)
    ax.set_yticks(y)
    ax.set_yticklabels([names[a] for a in arms])
    ax.set_xlabel("mean AUROC on held-out descriptor")
    ax.set_xlim(0.4, 1.0)
    _save(fig, path)


def training_curves(history_rows: list[dict], path):
    """Loss and validation AUROC across epochs from a history table."""
    epochs = [int(r["epoch"]) for r in history_rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, [float(r["train_loss"]) for r in history_rows], label="train")
    val = [float(r["val_loss"]) for r in history_rows]
    if not all(np.isnan(val)):
        ax1.plot(epochs, val, label="val")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("loss")
    ax1.legend()
    auroc = [float(r["val_mean_auroc"]) for r in history_rows]
    if not all(np.isnan(auroc)):
        ax2.plot(epochs, auroc, color="#55a868")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("val mean AUROC")
    fig.tight_layout()
    _save(fig, path)
