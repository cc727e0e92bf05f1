"""Synthetic labeled corpora for pipeline exercise and benchmarks.

Molecules are assembled from alkyl skeletons and functional-group
fragments; labels are deterministic functions of which groups are
present in the parsed structure, so the ground truth is known exactly.
Useful for end-to-end runs without any proprietary data.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass

from .molgraph import BondOrder, MolecularGraph, canonical_form, parse_smiles

# internal tokens keep the chain open; terminal tokens end it
_INTERNAL_GROUPS = {
    "ester": "C(=O)O",
    "ether": "O",
    "ketone": "C(=O)",
    "sulfide": "S",
    "alkene": "C=C",
    "amine_mid": "N",
}
_TERMINAL_GROUPS = {
    "alcohol": "O",
    "aldehyde": "C=O",
    "amine": "N",
    "thiol": "S",
    "nitrile": "C#N",
    "chloride": "Cl",
}


def _skeleton(rng: random.Random, lo: int = 1, hi: int = 4) -> str:
    parts = []
    for _ in range(rng.randint(lo, hi)):
        parts.append(rng.choice(["C", "C", "C", "C(C)"]))
    return "".join(parts)


def random_molecule(rng: random.Random) -> str:
    """One random SMILES built from skeleton and group fragments."""
    parts = [_skeleton(rng, 2, 5)]
    for _ in range(rng.randint(0, 3)):
        name = rng.choice(list(_INTERNAL_GROUPS))
        parts.append(_INTERNAL_GROUPS[name])
        parts.append(_skeleton(rng, 1, 4))
    if rng.random() < 0.35:
        parts.append(rng.choice(["c1ccccc1", "C1CCCCC1"]))
        if rng.random() < 0.5:
            parts.append(_skeleton(rng, 1, 3))
    if rng.random() < 0.70:
        parts.append(_TERMINAL_GROUPS[rng.choice(list(_TERMINAL_GROUPS))])
    return "".join(parts)


# ---------------------------------------------------------------------------
# Structural group detectors
# ---------------------------------------------------------------------------

def _carbonyl_carbons(g: MolecularGraph):
    for bond in g.bonds:
        if bond.order != BondOrder.DOUBLE:
            continue
        pair = (g.atoms[bond.a].element, g.atoms[bond.b].element)
        if pair == ("C", "O"):
            yield bond.a
        elif pair == ("O", "C"):
            yield bond.b


def detect_groups(g: MolecularGraph) -> set[str]:
    """Functional groups present in a parsed molecule."""
    found = set()
    carbonyls = set(_carbonyl_carbons(g))
    for c in carbonyls:
        found.add("carbonyl")
        atom = g.atoms[c]
        single_o = [
            j for j in g.neighbors(c)
            if g.atoms[j].element == "O"
            and g.bond_between(c, j).order == BondOrder.SINGLE
        ]
        c_neighbors = [j for j in g.neighbors(c) if g.atoms[j].element == "C"]
        if atom.total_h >= 1:
            found.add("aldehyde")
        if any(any(g.atoms[k].element == "C" for k in g.neighbors(o) if k != c)
               for o in single_o):
            found.add("ester")
        elif len(c_neighbors) == 2 and not single_o:
            found.add("ketone")
    for i, atom in enumerate(g.atoms):
        if atom.element == "O" and not atom.aromatic:
            c_nbrs = [j for j in g.neighbors(i) if g.atoms[j].element == "C"]
            if atom.total_h >= 1 and len(c_nbrs) == 1 and c_nbrs[0] not in carbonyls:
                found.add("alcohol")
            if len(c_nbrs) == 2 and not (set(c_nbrs) & carbonyls):
                found.add("ether")
        elif atom.element == "N" and not atom.aromatic:
            orders = [g.bond_between(i, j).order for j in g.neighbors(i)]
            if BondOrder.TRIPLE in orders:
                found.add("nitrile")
            elif all(o == BondOrder.SINGLE for o in orders):
                found.add("amine")
        elif atom.element == "S":
            found.add("sulfur")
        elif atom.element in ("Cl", "Br"):
            found.add("halogen")
        if atom.aromatic:
            found.add("aromatic_ring")
        elif atom.in_ring:
            found.add("aliphatic_ring")
    for bond in g.bonds:
        if bond.order == BondOrder.DOUBLE:
            if g.atoms[bond.a].element == "C" and g.atoms[bond.b].element == "C":
                found.add("alkene")
    return found


# label name -> function of the group set
LABEL_RULES = {
    "fruity": lambda gr: "ester" in gr,
    "estery": lambda gr: "ester" in gr,
    "green": lambda gr: "aldehyde" in gr,
    "alcoholic": lambda gr: "alcohol" in gr,
    "ethereal": lambda gr: "ether" in gr,
    "ketonic": lambda gr: "ketone" in gr,
    "fishy": lambda gr: "amine" in gr,
    "sulfurous": lambda gr: "sulfur" in gr,
    "balsamic": lambda gr: "aromatic_ring" in gr,
    "camphoreous": lambda gr: "aliphatic_ring" in gr,
    "fatty": lambda gr: "alkene" in gr,
    "sharp": lambda gr: "nitrile" in gr or "halogen" in gr,
    "sweet": lambda gr: "ester" in gr or "aromatic_ring" in gr,
    "pungent": lambda gr: "aldehyde" in gr or "amine" in gr or "sulfur" in gr,
    "radish": lambda gr: "nitrile" in gr and "aromatic_ring" in gr,
}


def labels_for(g: MolecularGraph) -> set[str]:
    groups = detect_groups(g)
    labels = {name for name, rule in LABEL_RULES.items() if rule(groups)}
    if not labels:
        labels = {"odorless"}
    return labels


@dataclass
class SyntheticCorpus:
    smiles: list[str]
    labels: list[set[str]]

    def rows(self):
        for s, ls in zip(self.smiles, self.labels):
            yield s, ";".join(sorted(ls))


def generate_corpus(n: int = 500, seed: int = 0) -> SyntheticCorpus:
    """n structurally distinct labeled molecules, deterministic by seed."""
    rng = random.Random(seed)
    smiles, labels = [], []
    seen = set()
    while len(smiles) < n:
        s = random_molecule(rng)
        try:
            g = parse_smiles(s)
        except ValueError:
            continue
        canon = canonical_form(g)
        if canon in seen:
            continue
        seen.add(canon)
        smiles.append(s)
        labels.append(labels_for(g))
    return SyntheticCorpus(smiles=smiles, labels=labels)


def write_corpus_csv(corpus: SyntheticCorpus, path, source: str = "synthetic"):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["smiles", "descriptors", "source"])
        for s, ls in corpus.rows():
            writer.writerow([s, ls, source])
