"""Circular and path fingerprints plus the similarity functions used for
retrieval and nearest-neighbor classification.

Circular (Morgan-style) fingerprints hash atom-centered environments of
increasing radius; path fingerprints hash linear bond paths. Both use the
fixed 64-bit mixing hash from hashutil so bit positions are reproducible
across runs, with bit index = hash mod n_bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hashutil import hash_ints
from .molgraph import MolecularGraph, atom_invariants


@dataclass(frozen=True)
class FingerprintConfig:
    kind: str = "morgan"                # "morgan" or "path"
    radius_or_max_path: int = 2
    n_bits: int = 2048
    counted: bool = True
    dedup: bool = True                  # drop same-coverage duplicate environments

    def __post_init__(self):
        if self.kind not in ("morgan", "path"):
            raise ValueError(f"unknown fingerprint kind {self.kind!r}")
        if self.radius_or_max_path < 0:
            raise ValueError("radius must be >= 0")
        if self.n_bits < 64 or self.n_bits & (self.n_bits - 1):
            raise ValueError("n_bits must be a power of two >= 64")


# the tuned baseline settings: bit path fingerprint and counted circular
BIT_PATH_DEFAULT = FingerprintConfig(kind="path", radius_or_max_path=6,
                                     n_bits=4096, counted=False)
COUNT_MORGAN_DEFAULT = FingerprintConfig(kind="morgan", radius_or_max_path=2,
                                         n_bits=2048, counted=True)


@dataclass(frozen=True)
class Fingerprint:
    values: np.ndarray
    config: FingerprintConfig

    def __post_init__(self):
        if len(self.values) != self.config.n_bits:
            raise ValueError("fingerprint length does not match config")

    @property
    def nonzero_bits(self) -> np.ndarray:
        return np.flatnonzero(self.values)


def compute_fingerprint(g: MolecularGraph, cfg: FingerprintConfig) -> Fingerprint:
    if cfg.kind == "morgan":
        return morgan_fingerprint(g, cfg)
    return path_fingerprint(g, cfg)


# ---------------------------------------------------------------------------
# Morgan (circular)
# ---------------------------------------------------------------------------

def morgan_environments(g: MolecularGraph, radius: int, dedup: bool = True):
    """Environment identifiers for every (atom, radius) pair.

    Returns a list of (radius, atom, identifier) triples after coverage
    deduplication: two environments over the identical atom and bond sets
    describe the same fragment, so only the first is kept. The pre-hash
    identifier list is what the fingerprint invariance tests inspect.
    """
    ids = atom_invariants(g)
    bond_key = {}
    for k, bond in enumerate(g.bonds):
        bond_key[(bond.a, bond.b)] = k
        bond_key[(bond.b, bond.a)] = k

    # coverage[(atom)] = set of bond indices inside the environment
    coverage = [frozenset() for _ in range(g.n_atoms)]
    seen: set[tuple[frozenset, int]] = set()
    out = []
    for atom in range(g.n_atoms):
        key = (coverage[atom], ids[atom])
        seen.add(key)
        out.append((0, atom, ids[atom]))

    for r in range(1, radius + 1):
        new_ids = []
        new_cov = []
        for atom in range(g.n_atoms):
            nbrs = sorted(
                (int(g.bond_between(atom, j).order), ids[j], j)
                for j in g.neighbors(atom)
            )
            env_id = hash_ints(
                [r, ids[atom]] + [v for order, nid, _ in nbrs for v in (order, nid)]
            )
            cov = set(coverage[atom])
            for _, _, j in nbrs:
                cov.add(bond_key[(atom, j)])
                cov |= coverage[j]
            new_ids.append(env_id)
            new_cov.append(frozenset(cov))
        ids = new_ids
        coverage = new_cov
        for atom in range(g.n_atoms):
            key = (coverage[atom], ids[atom])
            if dedup and key in seen:
                continue
            seen.add(key)
            out.append((r, atom, ids[atom]))
    return out


def morgan_fingerprint(g: MolecularGraph, cfg: FingerprintConfig) -> Fingerprint:
    """Hashed circular fingerprint; counts or bits per cfg.counted."""
    if cfg.kind != "morgan":
        raise ValueError("config kind must be 'morgan'")
    values = np.zeros(cfg.n_bits, dtype=np.int64)
    for _, _, env_id in morgan_environments(g, cfg.radius_or_max_path, cfg.dedup):
        slot = env_id % cfg.n_bits
        if cfg.counted:
            values[slot] += 1
        else:
            values[slot] = 1
    return Fingerprint(values=values, config=cfg)


# ---------------------------------------------------------------------------
# Path descriptors
# ---------------------------------------------------------------------------

def _atom_token(g: MolecularGraph, idx: int) -> int:
    atom = g.atoms[idx]
    return hash_ints((sum(atom.element.encode("ascii")), int(atom.aromatic)))


def enumerate_paths(g: MolecularGraph, max_path: int):
    """All simple bond paths of length 1..max_path, each direction once.

    Paths are yielded as lists of atom indices. A path and its reverse
    are the same path; only the orientation whose endpoint indices
    satisfy start < end is produced.
    """
    for start in range(g.n_atoms):
        stack = [(start, [start], {start})]
        while stack:
            node, path, on_path = stack.pop()
            if len(path) > 1 and path[0] < path[-1]:
                yield path
            if len(path) > max_path:
                continue
            for nbr in g.neighbors(node):
                if nbr not in on_path:
                    stack.append((nbr, path + [nbr], on_path | {nbr}))


def path_fingerprint(g: MolecularGraph, cfg: FingerprintConfig) -> Fingerprint:
    """Hashed fingerprint over element/bond sequences of simple paths.

    Each path's token sequence is canonicalized by direction (the
    lexicographically smaller of the sequence and its reverse is hashed)
    so the fingerprint does not depend on atom input order.
    """
    if cfg.kind != "path":
        raise ValueError("config kind must be 'path'")
    values = np.zeros(cfg.n_bits, dtype=np.int64)
    tokens = [_atom_token(g, i) for i in range(g.n_atoms)]
    for path in enumerate_paths(g, cfg.radius_or_max_path):
        seq = []
        for pos, atom in enumerate(path):
            seq.append(tokens[atom])
            if pos + 1 < len(path):
                seq.append(int(g.bond_between(atom, path[pos + 1]).order))
        rev = list(reversed(seq))
        slot = hash_ints(min(seq, rev)) % cfg.n_bits
        if cfg.counted:
            values[slot] += 1
        else:
            values[slot] = 1
    return Fingerprint(values=values, config=cfg)


# ---------------------------------------------------------------------------
# Similarity / distance
# ---------------------------------------------------------------------------

def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Tanimoto similarity in [0, 1]; min/max generalization for counts.

    Two empty fingerprints are considered identical (similarity 1).
    """
    if a.config != b.config:
        raise ValueError("fingerprint configs differ")
    num = float(np.minimum(a.values, b.values).sum())
    den = float(np.maximum(a.values, b.values).sum())
    if den == 0.0:
        return 1.0
    return num / den


def jaccard_distance(a: Fingerprint, b: Fingerprint) -> float:
    return 1.0 - tanimoto(a, b)


def cosine_distance(a, b) -> float:
    """1 - cosine similarity, in [0, 2]. Raises on zero-norm input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vector lengths differ")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance undefined for zero vectors")
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def fingerprint_matrix(graphs, cfg: FingerprintConfig) -> np.ndarray:
    """Stack fingerprints for a sequence of graphs into one matrix."""
    return np.stack([compute_fingerprint(g, cfg).values for g in graphs])
