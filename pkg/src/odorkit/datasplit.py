"""Multi-label train/val/test splitting by iterative stratification, and
k-fold assignment built on top of it.

The greedy procedure repeatedly takes the label pair (second order) or
label (first order) with the fewest unassigned examples and deals those
examples to the split with the greatest remaining demand for it. Ties go
to the split with the most remaining overall capacity, then to a
seed-controlled choice. Examples with no labels are dealt last, purely
by remaining capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SPLIT_NAMES = ("train", "val", "test")


@dataclass
class SplitAssignment:
    """Per-example split membership plus the request that produced it."""

    assignments: np.ndarray          # int split index per example
    split_names: tuple[str, ...]
    ratios: tuple[float, ...]
    seed: int
    order: int = 2

    def indices(self, name: str) -> np.ndarray:
        return np.flatnonzero(self.assignments == self.split_names.index(name))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: self.indices(name) for name in self.split_names}

    def names_per_example(self) -> list[str]:
        return [self.split_names[i] for i in self.assignments]


def _label_sets(label_matrix: np.ndarray, order: int):
    """Map from label tuple (length 1 or 2) to example index array.

    Second order uses unordered label pairs including the (i, i)
    diagonal, so single-label examples still stratify by their label.
    """
    groups: dict[tuple, list[int]] = {}
    for i, row in enumerate(label_matrix):
        on = np.flatnonzero(row)
        if order == 1:
            keys = [(int(j),) for j in on]
        else:
            keys = [(int(a), int(b)) for ai, a in enumerate(on) for b in on[ai:]]
        for key in keys:
            groups.setdefault(key, []).append(i)
    return {k: np.array(v, dtype=np.intp) for k, v in groups.items()}


def iterative_stratify(label_matrix: np.ndarray, ratios,
                       order: int = 2, seed: int = 0,
                       split_names: tuple[str, ...] | None = None) -> SplitAssignment:
    """Greedy iterative stratification of a binary label matrix.

    Degenerate inputs (no labels at all) fall back to a size-only
    shuffled split. Deterministic given seed.
    """
    label_matrix = np.asarray(label_matrix)
    ratios = tuple(float(r) for r in ratios)
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    if label_matrix.ndim != 2 or len(label_matrix) == 0:
        raise ValueError("label matrix must be 2-D with at least one row")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if split_names is None:
        split_names = (DEFAULT_SPLIT_NAMES[:len(ratios)]
                       if len(ratios) <= 3
                       else tuple(f"split{i}" for i in range(len(ratios))))
    if len(split_names) != len(ratios):
        raise ValueError("one name per ratio")

    n, n_labels = label_matrix.shape
    n_splits = len(ratios)
    rng = np.random.default_rng(seed)
    assignment = np.full(n, -1, dtype=np.intp)
    capacity = np.array([r * n for r in ratios])

    groups = _label_sets(label_matrix, order)
    # remaining desired count of each group per split
    demand = {key: np.array([r * len(idx) for r in ratios]) for key, idx in groups.items()}
    unassigned_in = {key: set(map(int, idx)) for key, idx in groups.items()}
    example_keys: dict[int, list] = {}
    for key, idx in groups.items():
        for i in idx:
            example_keys.setdefault(int(i), []).append(key)

    def deal(example: int, weights: np.ndarray):
        most = weights.max()
        tied = np.flatnonzero(weights >= most - 1e-12)
        if len(tied) > 1:
            caps = capacity[tied]
            tied = tied[caps >= caps.max() - 1e-12]
        split = int(tied[0] if len(tied) == 1 else rng.choice(tied))
        assignment[example] = split
        capacity[split] -= 1
        for key in example_keys.get(example, ()):
            demand[key][split] -= 1
            unassigned_in[key].discard(example)

    while True:
        live = [(key, members) for key, members in unassigned_in.items() if members]
        if not live:
            break
        key, members = min(live, key=lambda kv: (len(kv[1]), kv[0]))
        pending = np.array(sorted(members), dtype=np.intp)
        rng.shuffle(pending)
        for example in pending:
            deal(int(example), demand[key])

    leftovers = np.flatnonzero(assignment < 0)
    rng.shuffle(leftovers)
    for example in leftovers:
        deal(int(example), capacity)

    return SplitAssignment(
        assignments=assignment,
        split_names=tuple(split_names),
        ratios=ratios,
        seed=seed,
        order=order,
    )


def second_order_deviation(label_matrix: np.ndarray,
                           assignments: np.ndarray, ratios) -> float:
    """Max over label pairs and splits of |realized - requested| proportion.

    Pairs include the diagonal so single labels count; pairs with no
    positive co-occurrence are skipped.
    """
    label_matrix = np.asarray(label_matrix)
    groups = _label_sets(label_matrix, order=2)
    worst = 0.0
    for _, idx in groups.items():
        total = len(idx)
        for split, ratio in enumerate(ratios):
            realized = float(np.sum(assignments[idx] == split)) / total
            worst = max(worst, abs(realized - ratio))
    return worst


def kfold(n: int, k: int, stratify_labels: np.ndarray | None = None,
          seed: int = 0, order: int = 2) -> np.ndarray:
    """Fold index per example; sizes differ by at most one.

    With labels given, folds come from iterative stratification at equal
    ratios; otherwise a shuffled round-robin split.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError("more folds than examples")
    if stratify_labels is None:
        rng = np.random.default_rng(seed)
        order_idx = rng.permutation(n)
        folds = np.zeros(n, dtype=np.intp)
        for pos, example in enumerate(order_idx):
            folds[example] = pos % k
        return folds
    labels = np.asarray(stratify_labels)
    if len(labels) != n:
        raise ValueError("label matrix row count must equal n")
    split = iterative_stratify(
        labels, [1.0 / k] * k, order=order, seed=seed,
        split_names=tuple(f"fold{i}" for i in range(k)),
    )
    return split.assignments.copy()
