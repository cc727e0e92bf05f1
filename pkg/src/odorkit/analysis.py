"""Embedding-space analysis: PCA projection, kernel density grids,
nearest-neighbor retrieval, label-distance correlation, and transfer to
held-out descriptors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import Forest, ForestConfig, fit_random_forest, rf_predict
from .dataset import LabeledDataset
from .fingerprints import COUNT_MORGAN_DEFAULT, FingerprintConfig, fingerprint_matrix
from .gnn import GnnConfig, GnnModel, train
from .metrics import UndefinedMetricError, auroc, bootstrap_ci, kendall_tau, pearson_r


@dataclass
class EmbeddingTable:
    """Molecule ids with one embedding row each."""

    ids: list[str]
    vectors: np.ndarray
    source: str = "gnn"      # or "fingerprint"

    def __post_init__(self):
        if len(self.ids) != len(self.vectors):
            raise ValueError("one id per row required")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("ids must be unique")

    def row(self, mol_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(mol_id)]


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

def pca(X: np.ndarray, n_components: int):
    """Principal components of mean-centered X.

    Returns (components [k, d], explained_variance_ratio [k],
    projected [n, k]). Components are covariance eigenvectors ordered by
    decreasing eigenvalue, sign-fixed so each component's largest-
    magnitude entry is positive. Raises on zero-variance input.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two rows")
    if not 1 <= n_components <= min(n, d):
        raise ValueError("n_components out of range")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    total_var = float(np.trace(cov))
    if total_var <= 0.0:
        raise ValueError("input has zero variance")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    comps = eigvecs[:, order].T
    eigvals = np.maximum(eigvals[order], 0.0)
    for i in range(len(comps)):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return comps, eigvals / total_var, centered @ comps.T


def zscore_mask(points: np.ndarray, threshold: float = 2.5) -> np.ndarray:
    """True for rows within the z-score threshold of a Gaussian fit.

    Used to trim projection outliers from exports and figures.
    """
    points = np.asarray(points, dtype=np.float64)
    center = points.mean(axis=0)
    spread = points.std(axis=0)
    spread = np.where(spread > 0, spread, 1.0)
    z = np.abs(points - center) / spread
    return (z <= threshold).all(axis=1)


# ---------------------------------------------------------------------------
# Kernel density estimation
# ---------------------------------------------------------------------------

@dataclass
class DensityGrid:
    x_edges: np.ndarray       # cell-center coordinates, length nx
    y_edges: np.ndarray
    density: np.ndarray       # [ny, nx]
    bandwidth: tuple[float, float]
    label: str = ""
    contour_levels: dict = field(default_factory=dict)


def scott_bandwidth(points: np.ndarray) -> tuple[float, float]:
    """Scott's rule for 2-D data: sigma_i * n^(-1/6)."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    factor = n ** (-1.0 / 6.0)
    sx = float(points[:, 0].std()) or 1.0
    sy = float(points[:, 1].std()) or 1.0
    return sx * factor, sy * factor


def kde_grid(points: np.ndarray, bandwidth=None, grid_size: int = 100,
             bounds=None, label: str = "",
             mass_quantiles=(0.25, 0.5, 0.75)) -> DensityGrid:
    """Gaussian kernel density of 2-D points evaluated on a grid.

    bounds default to the data range padded by three bandwidths, so the
    grid integrates to about one. contour_levels maps each requested
    mass quantile to the density level enclosing that share of the
    total mass.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2 or len(points) == 0:
        raise ValueError("points must be [n, 2] with n >= 1")
    if bandwidth is None:
        bw = scott_bandwidth(points)
    elif np.isscalar(bandwidth):
        bw = (float(bandwidth), float(bandwidth))
    else:
        bw = (float(bandwidth[0]), float(bandwidth[1]))
    if bw[0] <= 0 or bw[1] <= 0:
        raise ValueError("bandwidth must be positive")
    if bounds is None:
        pad = 3.0
        x_lo, x_hi = points[:, 0].min() - pad * bw[0], points[:, 0].max() + pad * bw[0]
        y_lo, y_hi = points[:, 1].min() - pad * bw[1], points[:, 1].max() + pad * bw[1]
    else:
        x_lo, x_hi, y_lo, y_hi = bounds
    xs = np.linspace(x_lo, x_hi, grid_size)
    ys = np.linspace(y_lo, y_hi, grid_size)
    gx, gy = np.meshgrid(xs, ys)
    dx = (gx[None, :, :] - points[:, 0, None, None]) / bw[0]
    dy = (gy[None, :, :] - points[:, 1, None, None]) / bw[1]
    kernel = np.exp(-0.5 * (dx ** 2 + dy ** 2))
    density = kernel.sum(axis=0) / (len(points) * 2 * math.pi * bw[0] * bw[1])

    cell = (xs[1] - xs[0]) * (ys[1] - ys[0]) if grid_size > 1 else 1.0
    flat = np.sort(density.ravel())[::-1]
    cum = np.cumsum(flat) * cell
    total = cum[-1]
    levels = {}
    for q in mass_quantiles:
        pos = int(np.searchsorted(cum, q * total))
        levels[q] = float(flat[min(pos, len(flat) - 1)])
    return DensityGrid(x_edges=xs, y_edges=ys, density=density,
                       bandwidth=bw, label=label, contour_levels=levels)


# ---------------------------------------------------------------------------
# Nearest neighbors and distance structure
# ---------------------------------------------------------------------------

def _pairwise_distance(vectors: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        return np.sqrt(((vectors - query) ** 2).sum(axis=1))
    if metric == "cosine":
        norms = np.linalg.norm(vectors, axis=1) * np.linalg.norm(query)
        if np.any(norms == 0):
            raise ValueError("cosine undefined for zero vectors")
        return 1.0 - (vectors @ query) / norms
    if metric == "jaccard":
        mins = np.minimum(vectors, query).sum(axis=1)
        maxs = np.maximum(vectors, query).sum(axis=1)
        return 1.0 - np.where(maxs > 0, mins / np.where(maxs > 0, maxs, 1.0), 1.0)
    raise ValueError(f"unknown metric {metric!r}")


def nearest_neighbors(table: EmbeddingTable, query_id: str, k: int = 5,
                      metric: str = "cosine") -> list[tuple[str, float]]:
    """The k nearest rows to a query id, excluding the query itself.

    Equal distances order by id for stability.
    """
    if query_id not in table.ids:
        raise KeyError(f"unknown id {query_id!r}")
    if k >= len(table.ids):
        raise ValueError("k must be smaller than the table")
    qi = table.ids.index(query_id)
    d = _pairwise_distance(table.vectors, table.vectors[qi], metric)
    order = sorted(
        (i for i in range(len(d)) if i != qi),
        key=lambda i: (d[i], table.ids[i]),
    )
    return [(table.ids[i], float(d[i])) for i in order[:k]]


def label_jaccard_distance(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def label_vs_embedding_tau(ds: LabeledDataset, table: EmbeddingTable,
                           metric: str = "cosine",
                           split: dict | None = None) -> float:
    """Kendall tau between label Jaccard distances and embedding
    distances over molecule pairs.

    With split given (train/test index arrays), pairs run between the
    two sets; otherwise all unordered pairs are used.
    """
    if set(ds.ids) != set(table.ids):
        raise ValueError("dataset and embedding ids differ")
    row_of = {mol_id: i for i, mol_id in enumerate(table.ids)}
    order = [row_of[mol_id] for mol_id in ds.ids]
    vectors = table.vectors[order]
    labels = [rec.labels for rec in ds.records]

    if split is None:
        pair_list = [(i, j) for i in range(len(ds)) for j in range(i + 1, len(ds))]
    else:
        pair_list = [(int(i), int(j)) for i in split["train"] for j in split["test"]]
    label_d = np.array([label_jaccard_distance(labels[i], labels[j]) for i, j in pair_list])
    embed_d = np.array([
        _pairwise_distance(vectors[j][None, :], vectors[i], metric)[0]
        for i, j in pair_list
    ])
    return kendall_tau(label_d, embed_d)


def label_distance_matrix(ds: LabeledDataset, table: EmbeddingTable,
                          metric: str = "cosine") -> np.ndarray:
    """Mean pairwise embedding distance between molecules of each label
    pair; diagonal is the within-label mean distance."""
    if set(ds.ids) != set(table.ids):
        raise ValueError("dataset and embedding ids differ")
    row_of = {mol_id: i for i, mol_id in enumerate(table.ids)}
    members = []
    for j, label in enumerate(ds.vocabulary):
        rows = [row_of[rec.id] for rec in ds.records if label in rec.labels]
        members.append(np.array(rows, dtype=np.intp))
    n_labels = len(ds.vocabulary)
    out = np.zeros((n_labels, n_labels))
    for a in range(n_labels):
        for b in range(a, n_labels):
            va, vb = table.vectors[members[a]], table.vectors[members[b]]
            if len(va) == 0 or len(vb) == 0:
                out[a, b] = out[b, a] = np.nan
                continue
            total = 0.0
            count = 0
            for i in range(len(va)):
                d = _pairwise_distance(vb, va[i], metric)
                if a == b:
                    d = np.delete(d, i)
                total += float(d.sum())
                count += len(d)
            out[a, b] = out[b, a] = total / count if count else np.nan
    return out


def embedding_cooccurrence_correlation(cooc_normalized: np.ndarray,
                                       distance_matrix: np.ndarray) -> float:
    """Pearson correlation between a normalized co-occurrence matrix and
    a label-pair embedding-distance matrix (closer should co-occur more,
    so the distance sign is flipped)."""
    a = np.asarray(cooc_normalized, dtype=np.float64).ravel()
    b = -np.asarray(distance_matrix, dtype=np.float64).ravel()
    mask = np.isfinite(a) & np.isfinite(b)
    return pearson_r(a[mask], b[mask])


# ---------------------------------------------------------------------------
# Transfer to a held-out descriptor
# ---------------------------------------------------------------------------

@dataclass
class TransferResult:
    held_out_label: str
    auroc_embedding_rf: float
    auroc_fingerprint_rf: float
    auroc_full_gnn: float
    ci_embedding_rf: tuple[float, float]
    ci_fingerprint_rf: tuple[float, float]
    ci_full_gnn: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "held_out_label": self.held_out_label,
            "embedding_rf": {"auroc": self.auroc_embedding_rf,
                             "ci": list(self.ci_embedding_rf)},
            "fingerprint_rf": {"auroc": self.auroc_fingerprint_rf,
                               "ci": list(self.ci_fingerprint_rf)},
            "full_gnn": {"auroc": self.auroc_full_gnn,
                         "ci": list(self.ci_full_gnn)},
        }


def transfer_ablation(ds: LabeledDataset, held_out_label: str,
                      gnn_cfg: GnnConfig, rf_cfg: ForestConfig,
                      splits: dict,
                      fingerprint_cfg: FingerprintConfig = COUNT_MORGAN_DEFAULT,
                      full_model: GnnModel | None = None,
                      n_resamples: int = 1000, seed: int = 0) -> TransferResult:
    """Hold one descriptor out of GNN training, then predict it three ways.

    A model is trained on the remaining labels and its embeddings feed a
    random forest for the held-out label; a forest on count fingerprints
    is the baseline; a model trained on all labels (passed in or trained
    here) is the ceiling. All three are scored by AUROC on the test
    split with bootstrap CIs.
    """
    if held_out_label not in ds.vocabulary:
        raise ValueError(f"{held_out_label!r} not in vocabulary")
    train_idx = np.asarray(splits["train"], dtype=np.intp)
    test_idx = np.asarray(splits["test"], dtype=np.intp)
    labels = ds.label_matrix().astype(np.float64)
    held_col = ds.vocabulary.index(held_out_label)
    y_held = labels[:, held_col]
    if y_held[test_idx].sum() == 0 or y_held[test_idx].sum() == len(test_idx):
        raise ValueError(f"{held_out_label!r} is single-class in the test split")

    remaining = [j for j in range(labels.shape[1]) if j != held_col]
    ablated_labels = labels[:, remaining]
    assert ablated_labels.shape[1] == labels.shape[1] - 1
    assert held_col not in remaining

    ablated_cfg = replace(gnn_cfg, n_tasks=len(remaining))
    ablated_model = GnnModel(ablated_cfg)
    graphs = ds.graphs
    train(ablated_model, graphs, ablated_labels,
          {"train": train_idx, "val": splits.get("val", [])})
    _, embeddings = ablated_model.predict(graphs)

    rf_embed = fit_random_forest(embeddings[train_idx], y_held[train_idx], rf_cfg)
    scores_embed = rf_predict(rf_embed, embeddings[test_idx])[:, 0]

    fps = fingerprint_matrix(graphs, fingerprint_cfg).astype(np.float64)
    rf_fp = fit_random_forest(fps[train_idx], y_held[train_idx], rf_cfg)
    scores_fp = rf_predict(rf_fp, fps[test_idx])[:, 0]

    if full_model is None:
        full_model = GnnModel(gnn_cfg)
        train(full_model, graphs, labels,
              {"train": train_idx, "val": splits.get("val", [])})
    probs, _ = full_model.predict([graphs[i] for i in test_idx])
    scores_full = probs[:, held_col]

    y_test = y_held[test_idx]

    def score_ci(scores):
        value = auroc(scores, y_test)
        lo, hi = bootstrap_ci(auroc, scores, y_test, n=n_resamples, seed=seed)
        return value, (lo, hi)

    a_embed, ci_embed = score_ci(scores_embed)
    a_fp, ci_fp = score_ci(scores_fp)
    a_full, ci_full = score_ci(scores_full)
    return TransferResult(
        held_out_label=held_out_label,
        auroc_embedding_rf=a_embed,
        auroc_fingerprint_rf=a_fp,
        auroc_full_gnn=a_full,
        ci_embedding_rf=ci_embed,
        ci_fingerprint_rf=ci_fp,
        ci_full_gnn=ci_full,
    )
