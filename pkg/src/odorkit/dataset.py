"""Labeled molecule ingestion: CSV loading, merging sources on canonical
structure, descriptor vocabulary filtering, and label co-occurrence.

Input CSV schema: a header with `smiles` and `descriptors` columns
(descriptors semicolon-separated; lowercased and trimmed on load),
optional `source` and `id` columns. Rows whose SMILES fail to parse go
to an error sidecar instead of aborting the load. A synonym map
(CSV with raw_label,canonical_label) can rewrite descriptors on load;
unmapped labels pass through verbatim.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .molgraph import MolecularGraph, SmilesParseError, canonical_form, parse_smiles


class SchemaError(ValueError):
    pass


@dataclass
class Record:
    id: str
    smiles: str
    canonical: str
    labels: set[str]
    graph: MolecularGraph
    source: str = ""


@dataclass
class LabeledDataset:
    """Records with unique canonical forms plus an ordered vocabulary."""

    records: list[Record]
    vocabulary: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.vocabulary:
            self.vocabulary = sorted({l for r in self.records for l in r.labels})
        canon = [r.canonical for r in self.records]
        if len(set(canon)) != len(canon):
            raise ValueError("duplicate canonical forms in dataset")

    def __len__(self):
        return len(self.records)

    @property
    def graphs(self) -> list[MolecularGraph]:
        return [r.graph for r in self.records]

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def label_matrix(self) -> np.ndarray:
        index = {name: j for j, name in enumerate(self.vocabulary)}
        out = np.zeros((len(self.records), len(self.vocabulary)), dtype=np.int8)
        for i, rec in enumerate(self.records):
            for label in rec.labels:
                if label in index:
                    out[i, index[label]] = 1
        return out

    def label_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self.vocabulary, 0)
        for rec in self.records:
            for label in rec.labels:
                if label in counts:
                    counts[label] += 1
        return counts


def load_synonym_map(path) -> dict[str, str]:
    """raw_label -> canonical_label pairs from a two-column CSV."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("empty synonym map")
        if [h.strip().lower() for h in header[:2]] != ["raw_label", "canonical_label"]:
            raise SchemaError("synonym map needs raw_label,canonical_label columns")
        for row in reader:
            if len(row) >= 2:
                out[row[0].strip().lower()] = row[1].strip().lower()
    return out


def _clean_labels(raw: str, synonyms: dict[str, str] | None) -> set[str]:
    labels = set()
    for piece in raw.split(";"):
        name = piece.strip().lower()
        if not name:
            continue
        if synonyms:
            name = synonyms.get(name, name)
        labels.add(name)
    return labels


def load_csv(path, synonyms: dict[str, str] | None = None,
             source: str | None = None):
    """Parse a labeled molecule CSV into records plus an error sidecar.

    Returns (records, sidecar) where sidecar rows are dicts with the
    original row number, smiles text and the parse error message.
    Duplicate canonical forms within the file get their labels unioned.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        fields = [f.strip().lower() for f in reader.fieldnames]
        if "smiles" not in fields or "descriptors" not in fields:
            raise SchemaError(f"{path}: need smiles and descriptors columns")
        colmap = {f.strip().lower(): f for f in reader.fieldnames}

        by_canonical: dict[str, Record] = {}
        sidecar = []
        for rownum, row in enumerate(reader, start=2):
            smiles = (row.get(colmap["smiles"]) or "").strip()
            labels = _clean_labels(row.get(colmap["descriptors"]) or "", synonyms)
            rec_source = source or (row.get(colmap.get("source", ""), "") or "").strip()
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    graph = parse_smiles(smiles)
                canonical = canonical_form(graph)
            except (SmilesParseError, ValueError) as exc:
                sidecar.append({"row": rownum, "smiles": smiles, "error": str(exc)})
                continue
            if canonical in by_canonical:
                by_canonical[canonical].labels |= labels
                continue
            rec_id = (row.get(colmap.get("id", ""), "") or "").strip()
            if not rec_id:
                prefix = rec_source or "m"
                rec_id = f"{prefix}{rownum - 2:06d}"
            by_canonical[canonical] = Record(
                id=rec_id, smiles=smiles, canonical=canonical,
                labels=labels, graph=graph, source=rec_source,
            )
    return list(by_canonical.values()), sidecar


@dataclass
class MergeStats:
    only_a: int
    only_b: int
    overlap: int


def merge_sources(a: list[Record], b: list[Record]) -> tuple[LabeledDataset, MergeStats]:
    """Join two record lists on canonical form; overlaps union labels."""
    by_canonical = {}
    for rec in a:
        by_canonical[rec.canonical] = Record(
            id=rec.id, smiles=rec.smiles, canonical=rec.canonical,
            labels=set(rec.labels), graph=rec.graph, source=rec.source,
        )
    overlap = 0
    for rec in b:
        if rec.canonical in by_canonical:
            by_canonical[rec.canonical].labels |= rec.labels
            overlap += 1
        else:
            by_canonical[rec.canonical] = Record(
                id=rec.id, smiles=rec.smiles, canonical=rec.canonical,
                labels=set(rec.labels), graph=rec.graph, source=rec.source,
            )
    stats = MergeStats(only_a=len(a) - overlap, only_b=len(b) - overlap, overlap=overlap)
    return LabeledDataset(records=list(by_canonical.values())), stats


def filter_labels(ds: LabeledDataset, min_count: int,
                  keep_unlabeled: bool = False) -> LabeledDataset:
    """Drop descriptors with fewer than min_count positive molecules.

    Records left with no labels are dropped unless keep_unlabeled is
    set. Dropping records changes counts, so the filter iterates to a
    fixed point. The resulting vocabulary is sorted lexicographically.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    records = [
        Record(id=r.id, smiles=r.smiles, canonical=r.canonical,
               labels=set(r.labels), graph=r.graph, source=r.source)
        for r in ds.records
    ]
    while True:
        counts: dict[str, int] = {}
        for rec in records:
            for label in rec.labels:
                counts[label] = counts.get(label, 0) + 1
        keep = {label for label, c in counts.items() if c >= min_count}
        changed = False
        for rec in records:
            dropped = rec.labels - keep
            if dropped:
                rec.labels -= dropped
                changed = True
        if not keep_unlabeled:
            kept_records = [r for r in records if r.labels]
            if len(kept_records) != len(records):
                records = kept_records
                changed = True
        if not changed:
            break
    vocabulary = sorted({l for r in records for l in r.labels})
    if not vocabulary:
        raise ValueError(f"no descriptor has {min_count} positives")
    return LabeledDataset(records=records, vocabulary=vocabulary)


# ---------------------------------------------------------------------------
# Label co-occurrence
# ---------------------------------------------------------------------------

@dataclass
class CooccurrenceMatrix:
    labels: list[str]
    counts: np.ndarray        # raw symmetric co-occurrence counts
    normalized: np.ndarray    # rows and columns each sum to 1
    excluded: list[str] = field(default_factory=list)


def cooccurrence(ds: LabeledDataset, drop_top: int = 0,
                 tol: float = 1e-6, max_iter: int = 1000) -> CooccurrenceMatrix:
    """Label co-occurrence counts, Sinkhorn-normalized to doubly
    stochastic (every row and column sums to 1 within tol).

    The diagonal holds label counts. Labels whose row is all zero are
    excluded with a warning. drop_top removes the N most frequent
    descriptors first (a display convention for dense corpora).
    """
    if len(ds.vocabulary) < 2:
        raise ValueError("co-occurrence needs at least two labels")
    matrix = ds.label_matrix().astype(np.float64)
    labels = list(ds.vocabulary)
    if drop_top > 0:
        totals = matrix.sum(axis=0)
        keep = np.argsort(-totals, kind="stable")[drop_top:]
        keep = np.sort(keep)
        matrix = matrix[:, keep]
        labels = [labels[j] for j in keep]
    counts = matrix.T @ matrix

    alive = counts.sum(axis=1) > 0
    excluded = [labels[j] for j in np.flatnonzero(~alive)]
    if excluded:
        warnings.warn(f"excluding labels with no co-occurrence: {excluded}")
    labels = [labels[j] for j in np.flatnonzero(alive)]
    counts = counts[np.ix_(alive, alive)]

    norm = counts.copy()
    for _ in range(max_iter):
        norm = norm / norm.sum(axis=1, keepdims=True)
        norm = norm / norm.sum(axis=0, keepdims=True)
        rows = norm.sum(axis=1)
        cols = norm.sum(axis=0)
        if np.abs(rows - 1).max() < tol and np.abs(cols - 1).max() < tol:
            break
    else:
        raise RuntimeError("normalization did not converge")
    return CooccurrenceMatrix(labels=labels, counts=counts,
                              normalized=norm, excluded=excluded)
