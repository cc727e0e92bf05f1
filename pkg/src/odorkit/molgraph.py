"""SMILES parsing and immutable molecular graphs.

Covers a practical subset of the SMILES grammar: the organic subset
(B, C, N, O, P, S, F, Cl, Br, I and their aromatic lowercase forms),
bracket atoms with charge and explicit hydrogens, bond symbols - = # :,
branches, ring closures including two-digit %nn, and dot-separated
fragments (the largest fragment is kept, with a warning). Stereochemistry
tokens (/ \\ @) are accepted and discarded.

Parsed molecules are immutable graphs with smallest-set-of-smallest-rings
perception, aromaticity from lowercase input plus a Hueckel check on
explicitly alternating 5/6-membered Kekule rings, and a deterministic
canonical form for deduplication.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from enum import IntEnum

from .hashutil import hash_ints, hash_text


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")

# Standard valence lists used for implicit hydrogen assignment and
# overflow checks on organic-subset atoms.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Elements allowed inside brackets beyond the organic subset. Keys are
# symbols, values are atomic numbers (used only for stable hashing).
ELEMENT_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Ti": 22, "Cr": 24,
    "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29, "Zn": 30, "Ga": 31,
    "Ge": 32, "As": 33, "Se": 34, "Br": 35, "Sr": 38, "Mo": 42, "Ag": 47,
    "Cd": 48, "In": 49, "Sn": 50, "Sb": 51, "Te": 52, "I": 53, "Ba": 56,
    "W": 74, "Pt": 78, "Au": 79, "Hg": 80, "Tl": 81, "Pb": 82, "Bi": 83,
}


class SmilesParseError(ValueError):
    """Base parse error; carries the character offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at position {offset})")
        self.offset = offset


class UnclosedRingError(SmilesParseError):
    pass


class UnbalancedParenthesesError(SmilesParseError):
    pass


class UnknownElementError(SmilesParseError):
    pass


class ValenceError(SmilesParseError):
    pass


@dataclass(frozen=True)
class Atom:
    """A heavy atom. Hydrogens are counted, not represented as nodes."""

    element: str
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    aromatic: bool = False
    in_ring: bool = False
    degree: int = 0

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True)
class Bond:
    """An undirected bond between two atom indices, a < b by construction."""

    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class MolecularGraph:
    """Immutable molecular graph with perceived rings.

    rings holds SSSR cycles as tuples of distinct atom indices in cycle
    order (consecutive atoms bonded, last bonded back to first).
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    rings: tuple[tuple[int, ...], ...] = ()
    _neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nbrs = [[] for _ in self.atoms]
        for bond in self.bonds:
            nbrs[bond.a].append(bond.b)
            nbrs[bond.b].append(bond.a)
        object.__setattr__(self, "_neighbors", tuple(tuple(n) for n in nbrs))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, idx: int) -> tuple[int, ...]:
        return self._neighbors[idx]

    def bond_between(self, a: int, b: int) -> Bond | None:
        lo, hi = min(a, b), max(a, b)
        for bond in self.bonds:
            if bond.a == lo and bond.b == hi:
                return bond
        return None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_BOND_TOKENS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE,
                "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}


class _ProtoAtom:
    """Mutable atom under construction during parsing."""

    __slots__ = ("element", "charge", "explicit_h", "aromatic", "bracket", "offset")

    def __init__(self, element, charge, explicit_h, aromatic, bracket, offset):
        self.element = element
        self.charge = charge
        self.explicit_h = explicit_h
        self.aromatic = aromatic
        self.bracket = bracket
        self.offset = offset


def _parse_bracket(text: str, start: int) -> tuple[_ProtoAtom, int]:
    """Parse a bracket atom starting at text[start] == '['.

    Returns the proto-atom and the index just past the closing bracket.
    Isotope digits and chirality marks are accepted and discarded.
    """
    i = start + 1
    n = len(text)
    while i < n and text[i].isdigit():  # isotope, discarded
        i += 1
    if i >= n:
        raise SmilesParseError("unterminated bracket atom", start)
    aromatic = False
    if text[i].islower():
        # aromatic symbol inside brackets: single lowercase letter, or the
        # two-letter 'se'/'as' forms
        two = text[i:i + 2]
        if two in ("se", "as"):
            element = two.capitalize()
            i += 2
        elif text[i] in AROMATIC_ORGANIC:
            element = text[i].upper()
            i += 1
        else:
            raise UnknownElementError(f"unknown aromatic element {text[i]!r}", i)
        aromatic = True
    else:
        if not text[i].isupper():
            raise UnknownElementError(f"expected element symbol, got {text[i]!r}", i)
        if i + 1 < n and text[i + 1].islower() and text[i:i + 2] in ELEMENT_NUMBERS:
            element = text[i:i + 2]
            i += 2
        else:
            element = text[i]
            i += 1
        if element not in ELEMENT_NUMBERS:
            raise UnknownElementError(f"unknown element {element!r}", i - len(element))
    # chirality marks, discarded
    while i < n and text[i] == "@":
        i += 1
    explicit_h = 0
    if i < n and text[i] == "H":
        i += 1
        if i < n and text[i].isdigit():
            explicit_h = int(text[i])
            i += 1
        else:
            explicit_h = 1
    charge = 0
    if i < n and text[i] in "+-":
        sign = 1 if text[i] == "+" else -1
        symbol = text[i]
        i += 1
        if i < n and text[i].isdigit():
            charge = sign * int(text[i])
            i += 1
        else:
            charge = sign
            while i < n and text[i] == symbol:  # ++ / -- style
                charge += sign
                i += 1
    # atom class, discarded
    if i < n and text[i] == ":":
        i += 1
        while i < n and text[i].isdigit():
            i += 1
    if i >= n or text[i] != "]":
        raise SmilesParseError("unterminated bracket atom", start)
    return _ProtoAtom(element, charge, explicit_h, aromatic, True, start), i + 1


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string into a MolecularGraph.

    Implicit hydrogens are assigned from the standard valence lists,
    ring closures are resolved, lowercase organic atoms are marked
    aromatic, and ring perception is run. For dot-separated input the
    largest fragment is kept and a warning is issued.
    """
    if not text:
        raise SmilesParseError("empty SMILES", 0)
    if not text.isascii():
        raise SmilesParseError("non-ASCII character in SMILES", 0)

    atoms: list[_ProtoAtom] = []
    bonds: dict[tuple[int, int], tuple[BondOrder | None, int]] = {}
    ring_open: dict[int, tuple[int, BondOrder | None, int]] = {}
    branch_stack: list[tuple[int | None, int]] = []
    prev: int | None = None
    pending: BondOrder | None = None
    pending_offset = 0
    fragment_break = False

    def add_atom(proto: _ProtoAtom, offset: int):
        nonlocal prev, pending, fragment_break
        atoms.append(proto)
        idx = len(atoms) - 1
        if prev is not None and not fragment_break:
            add_bond(prev, idx, pending, offset)
        prev = idx
        pending = None
        fragment_break = False

    def add_bond(a: int, b: int, order: BondOrder | None, offset: int):
        if a == b:
            raise SmilesParseError("bond joins an atom to itself", offset)
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise SmilesParseError("duplicate bond between atoms", offset)
        bonds[key] = (order, offset)

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "[":
            proto, i = _parse_bracket(text, i)
            add_atom(proto, proto.offset)
            continue
        if ch in "/\\":  # stereo bond marks, discarded
            i += 1
            continue
        if ch in _BOND_TOKENS:
            pending = _BOND_TOKENS[ch]
            pending_offset = i
            i += 1
            continue
        if ch == "(":
            if prev is None:
                raise SmilesParseError("branch before any atom", i)
            branch_stack.append((prev, i))
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise UnbalancedParenthesesError("unmatched ')'", i)
            prev, _ = branch_stack.pop()
            i += 1
            continue
        if ch == ".":
            fragment_break = True
            prev = None
            pending = None
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if ch == "%":
                if i + 2 >= n or not (text[i + 1].isdigit() and text[i + 2].isdigit()):
                    raise SmilesParseError("'%' requires two digits", i)
                num = int(text[i + 1:i + 3])
                step = 3
            else:
                num = int(ch)
                step = 1
            if prev is None:
                raise SmilesParseError("ring closure before any atom", i)
            if num in ring_open:
                other, open_order, open_offset = ring_open.pop(num)
                order = pending if pending is not None else open_order
                if pending is not None and open_order is not None and pending != open_order:
                    raise SmilesParseError("conflicting ring-closure bond orders", i)
                add_bond(other, prev, order, i)
            else:
                ring_open[num] = (prev, pending, i)
            pending = None
            i += step
            continue
        # organic subset atom
        if ch in AROMATIC_ORGANIC:
            add_atom(_ProtoAtom(ch.upper(), 0, 0, True, False, i), i)
            i += 1
            continue
        two = text[i:i + 2]
        if two in ("Cl", "Br"):
            add_atom(_ProtoAtom(two, 0, 0, False, False, i), i)
            i += 2
            continue
        if ch in "BCNOPSFI":
            add_atom(_ProtoAtom(ch, 0, 0, False, False, i), i)
            i += 1
            continue
        if ch.isalpha():
            raise UnknownElementError(f"unknown element {ch!r}", i)
        raise SmilesParseError(f"unexpected character {ch!r}", i)

    if ring_open:
        num, (_, _, offset) = min(ring_open.items(), key=lambda kv: kv[1][2])
        raise UnclosedRingError(f"unclosed ring closure {num}", offset)
    if branch_stack:
        _, offset = branch_stack[-1]
        raise UnbalancedParenthesesError("unmatched '('", offset)
    if pending is not None:
        raise SmilesParseError("dangling bond symbol", pending_offset)
    if not atoms:
        raise SmilesParseError("no atoms in SMILES", 0)

    return _finalize(atoms, bonds, text)


def _finalize(protos: list[_ProtoAtom], raw_bonds, text: str) -> MolecularGraph:
    """Resolve bond orders, hydrogens, fragments, rings and aromaticity."""
    bond_list = []
    for (a, b), (order, offset) in raw_bonds.items():
        if order is None:
            if protos[a].aromatic and protos[b].aromatic:
                order = BondOrder.AROMATIC
            else:
                order = BondOrder.SINGLE
        bond_list.append((a, b, order, offset))

    # keep the largest fragment of dot-disconnected input
    comp = _components(len(protos), [(a, b) for a, b, _, _ in bond_list])
    if len(set(comp)) > 1:
        sizes = {}
        for c in comp:
            sizes[c] = sizes.get(c, 0) + 1
        keep = max(sizes, key=lambda c: (sizes[c], -c))
        warnings.warn(
            f"multi-fragment SMILES {text!r}: keeping largest fragment "
            f"({sizes[keep]} of {len(protos)} atoms)",
            stacklevel=3,
        )
        remap = {}
        kept_protos = []
        for idx, proto in enumerate(protos):
            if comp[idx] == keep:
                remap[idx] = len(kept_protos)
                kept_protos.append(proto)
        protos = kept_protos
        bond_list = [(remap[a], remap[b], o, off) for a, b, o, off in bond_list
                     if a in remap and b in remap]

    n = len(protos)
    order_sum = [0.0] * n
    degree = [0] * n
    for a, b, order, _ in bond_list:
        unit = 1.0 if order == BondOrder.AROMATIC else float(order)
        order_sum[a] += unit
        order_sum[b] += unit
        degree[a] += 1
        degree[b] += 1

    implicit = [0] * n
    for idx, proto in enumerate(protos):
        if proto.bracket:
            continue  # bracket atoms carry exactly their written hydrogens
        implicit[idx] = _implicit_h(proto, order_sum[idx])

    rings = _perceive_rings(n, [(a, b) for a, b, _, _ in bond_list])
    in_ring = [False] * n
    for ring in rings:
        for idx in ring:
            in_ring[idx] = True

    for idx, proto in enumerate(protos):
        if proto.aromatic and not in_ring[idx]:
            raise SmilesParseError("aromatic atom outside a ring", proto.offset)

    bond_orders = {(a, b): order for a, b, order, _ in bond_list}
    _kekule_aromaticity(protos, bond_orders, rings, implicit)

    atoms = tuple(
        Atom(
            element=proto.element,
            formal_charge=proto.charge,
            explicit_h=proto.explicit_h,
            implicit_h=implicit[idx],
            aromatic=proto.aromatic,
            in_ring=in_ring[idx],
            degree=degree[idx],
        )
        for idx, proto in enumerate(protos)
    )
    bonds = tuple(
        Bond(min(a, b), max(a, b), order)
        for (a, b), order in sorted(bond_orders.items())
    )
    return MolecularGraph(atoms=atoms, bonds=bonds, rings=tuple(map(tuple, rings)))


def _implicit_h(proto: _ProtoAtom, order_sum: float) -> int:
    """Implicit hydrogen count for an organic-subset atom.

    Aromatic C/B/N/P atoms reserve one valence for the ring pi system;
    aromatic O/S donate a lone pair instead and reserve none.
    """
    demand = order_sum
    if proto.aromatic and proto.element in ("B", "C", "N", "P"):
        demand += 1
    demand = int(demand + 0.999999)  # ceil for safety; sums are integral here
    valences = VALENCES.get(proto.element)
    if valences is None:
        return 0
    for v in valences:
        if v >= demand:
            return v - demand
    if proto.aromatic:
        return 0
    raise ValenceError(
        f"valence overflow on {proto.element} (bond order sum {demand})",
        proto.offset,
    )


def _components(n: int, edges) -> list[int]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return [find(i) for i in range(n)]


def _perceive_rings(n: int, edges) -> list[list[int]]:
    """Smallest set of smallest rings via shortest-cycle candidates.

    Candidate cycles are the shortest cycles through each edge; a greedy
    pass keeps candidates that are linearly independent over GF(2) in
    bond space until the cyclomatic number is reached.
    """
    if not edges:
        return []
    adj = [[] for _ in range(n)]
    edge_index = {}
    for k, (a, b) in enumerate(edges):
        adj[a].append(b)
        adj[b].append(a)
        edge_index[(min(a, b), max(a, b))] = k
    n_components = len(set(_components(n, edges)))
    n_rings = len(edges) - n + n_components
    if n_rings <= 0:
        return []

    candidates = []
    for a, b in edges:
        cycle = _shortest_cycle_through(adj, a, b)
        if cycle is not None:
            candidates.append(cycle)
    candidates.sort(key=lambda c: (len(c), c))

    # greedy GF(2) independence over bond incidence vectors
    basis: list[int] = []
    chosen = []
    seen = set()
    for cycle in candidates:
        key = tuple(sorted(cycle))
        if key in seen:
            continue
        seen.add(key)
        vec = 0
        for i in range(len(cycle)):
            a, b = cycle[i], cycle[(i + 1) % len(cycle)]
            vec |= 1 << edge_index[(min(a, b), max(a, b))]
        reduced = vec
        for bv in basis:
            reduced = min(reduced, reduced ^ bv)
        if reduced:
            basis.append(reduced)
            chosen.append(list(cycle))
            if len(chosen) == n_rings:
                break
    return chosen


def _shortest_cycle_through(adj, a: int, b: int) -> tuple[int, ...] | None:
    """Shortest cycle containing edge (a, b): BFS from a to b avoiding it."""
    from collections import deque

    prev = {a: None}
    queue = deque([a])
    while queue:
        cur = queue.popleft()
        if cur == b:
            break
        for nxt in adj[cur]:
            if cur == a and nxt == b:
                continue
            if nxt not in prev:
                prev[nxt] = cur
                queue.append(nxt)
    if b not in prev:
        return None
    path = []
    cur = b
    while cur is not None:
        path.append(cur)
        cur = prev[cur]
    return tuple(reversed(path))


def _kekule_aromaticity(protos, bond_orders, rings, implicit):
    """Upgrade explicitly alternating 5/6-membered Kekule rings to aromatic.

    A ring qualifies when every ring bond is single or double, every ring
    atom either takes part in exactly one ring double bond or is a
    lone-pair donor (N, O, S with no double bonds at all), and the pi
    electron count satisfies the 4n+2 rule with n = 1. Input already
    marked aromatic is trusted as-is.
    """
    for ring in rings:
        size = len(ring)
        if size not in (5, 6):
            continue
        ring_bonds = []
        ok = True
        for i in range(size):
            a, b = ring[i], ring[(i + 1) % size]
            order = bond_orders[(min(a, b), max(a, b))]
            if order not in (BondOrder.SINGLE, BondOrder.DOUBLE):
                ok = False
                break
            ring_bonds.append((min(a, b), max(a, b), order))
        if not ok:
            continue
        pi = 0
        for idx in ring:
            proto = protos[idx]
            if proto.aromatic:
                ok = False
                break
            ring_doubles = sum(
                1 for a, b, order in ring_bonds
                if order == BondOrder.DOUBLE and idx in (a, b)
            )
            all_doubles = sum(
                1 for (a, b), order in bond_orders.items()
                if order == BondOrder.DOUBLE and idx in (a, b)
            )
            if ring_doubles == 1 and all_doubles == 1:
                pi += 1
            elif ring_doubles == 0 and all_doubles == 0 and proto.element in ("N", "O", "S"):
                pi += 2
            else:
                ok = False
                break
        if not ok or pi != 6:
            continue
        for idx in ring:
            protos[idx].aromatic = True
        for a, b, _ in ring_bonds:
            bond_orders[(a, b)] = BondOrder.AROMATIC


# ---------------------------------------------------------------------------
# Atom invariants and canonicalization
# ---------------------------------------------------------------------------

def _atom_key(atom: Atom) -> tuple:
    return (
        atom.element,
        atom.degree,
        atom.formal_charge,
        atom.total_h,
        atom.in_ring,
        atom.aromatic,
    )


def atom_invariants(g: MolecularGraph) -> list[int]:
    """Per-atom 64-bit invariant hashed from local atom properties.

    The hash covers (element, degree, formal charge, total hydrogen
    count, ring membership, aromaticity) and is stable across runs.
    """
    out = []
    for atom in g.atoms:
        out.append(hash_ints((
            hash_text(atom.element),
            atom.degree,
            atom.formal_charge + 16,
            atom.total_h,
            int(atom.in_ring),
            int(atom.aromatic),
        )))
    return out


def canonical_ranks(g: MolecularGraph) -> list[int]:
    """Canonical atom ranks by iterative neighborhood refinement.

    Starts from local atom keys, refines with sorted neighbor (bond,
    rank) multisets until the partition stabilizes, then breaks
    remaining ties deterministically and re-refines. Atoms left tied
    after full refinement are treated as equivalent.
    """
    n = g.n_atoms
    keys = [_atom_key(a) for a in g.atoms]
    ranks = _dense_ranks(keys)

    def refine(ranks):
        while True:
            keys = []
            for i in range(n):
                nbr = sorted(
                    (int(g.bond_between(i, j).order), ranks[j])
                    for j in g.neighbors(i)
                )
                keys.append((ranks[i], tuple(nbr)))
            new_ranks = _dense_ranks(keys)
            if new_ranks == ranks:
                return ranks
            ranks = new_ranks

    ranks = refine(ranks)
    while len(set(ranks)) < n:
        # promote the lowest-index member of the lowest tied class
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        chosen = min(i for i in range(n) if ranks[i] == tied)
        keys = [(ranks[i], 0 if i == chosen else 1) for i in range(n)]
        ranks = refine(_dense_ranks(keys))
    return ranks


def _dense_ranks(keys) -> list[int]:
    order = sorted(set(keys))
    index = {k: r for r, k in enumerate(order)}
    return [index[k] for k in keys]


def canonical_form(g: MolecularGraph) -> str:
    """Deterministic canonical SMILES; equal for isomorphic graphs."""
    return write_smiles(g, canonical_ranks(g))


def random_respelling(g: MolecularGraph, rng: random.Random) -> str:
    """A valid SMILES spelling of g with randomized atom priorities."""
    ranks = list(range(g.n_atoms))
    rng.shuffle(ranks)
    return write_smiles(g, ranks)


def write_smiles(g: MolecularGraph, priority: list[int] | None = None) -> str:
    """Emit a SMILES string, visiting atoms by ascending priority.

    The emitted string reparses to an isomorphic graph. Atoms are
    written in plain form when element, charge and hydrogen count would
    be reproduced by the implicit rules; otherwise a bracket is used.
    """
    n = g.n_atoms
    if n == 0:
        raise ValueError("cannot write an empty graph")
    if priority is None:
        priority = list(range(n))

    visited = [False] * n
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    closures: dict[int, list[int]] = {i: [] for i in range(n)}
    closure_digit: dict[tuple[int, int], int] = {}

    root = min(range(n), key=lambda i: priority[i])
    # DFS planning pass: classify edges as spanning-tree or ring-closure
    tree_edges: set[tuple[int, int]] = set()
    closure_edges: set[tuple[int, int]] = set()
    stack = [(root, None)]
    n_visited = 0
    while stack:
        node, parent = stack.pop()
        edge = None if parent is None else (min(node, parent), max(node, parent))
        if visited[node]:
            if edge is not None and edge not in tree_edges and edge not in closure_edges:
                closure_edges.add(edge)
                closures[node].append(parent)
                closures[parent].append(node)
            continue
        visited[node] = True
        n_visited += 1
        if edge is not None:
            tree_edges.add(edge)
            children[parent].append(node)
        # push in descending priority so the lowest-priority child pops first
        for nbr in sorted(g.neighbors(node), key=lambda j: priority[j], reverse=True):
            if nbr == parent:
                continue
            e = (min(node, nbr), max(node, nbr))
            if visited[nbr]:
                if e not in tree_edges and e not in closure_edges:
                    closure_edges.add(e)
                    closures[node].append(nbr)
                    closures[nbr].append(node)
            else:
                stack.append((nbr, node))

    if n_visited != n:
        raise ValueError("graph is disconnected; write one fragment at a time")

    # assign ring closure digits in emission order with digit reuse
    digits_in_use: set[int] = set()
    emitted: set[int] = set()

    def next_digit() -> int:
        d = 1
        while d in digits_in_use:
            d += 1
        if d > 99:
            raise ValueError("too many simultaneous ring closures")
        return d

    out: list[str] = []

    def bond_symbol(a: int, b: int) -> str:
        order = g.bond_between(a, b).order
        if order == BondOrder.DOUBLE:
            return "="
        if order == BondOrder.TRIPLE:
            return "#"
        if order == BondOrder.SINGLE and g.atoms[a].aromatic and g.atoms[b].aromatic:
            return "-"
        return ""

    def closure_token(digit: int) -> str:
        return str(digit) if digit < 10 else f"%{digit:02d}"

    def emit(node: int):
        stack = [("atom", node, None)]
        while stack:
            kind, cur, parent = stack.pop()
            if kind == "text":
                out.append(cur)
                continue
            if parent is not None:
                out.append(bond_symbol(parent, cur))
            out.append(_atom_text(g.atoms[cur], g, cur))
            emitted.add(cur)
            for nbr in sorted(closures[cur], key=lambda j: priority[j]):
                edge = (min(cur, nbr), max(cur, nbr))
                if edge in closure_digit:
                    digit = closure_digit.pop(edge)
                    digits_in_use.discard(digit)
                    out.append(bond_symbol(cur, nbr) + closure_token(digit))
                else:
                    digit = next_digit()
                    digits_in_use.add(digit)
                    closure_digit[edge] = digit
                    out.append(bond_symbol(cur, nbr) + closure_token(digit))
            kids = sorted(children[cur], key=lambda j: priority[j])
            # reverse push so lowest-priority child is emitted first; all
            # but the last child are parenthesized branches
            for pos in range(len(kids) - 1, -1, -1):
                child = kids[pos]
                if pos < len(kids) - 1:
                    stack.append(("text", ")", None))
                    stack.append(("atom", child, cur))
                    stack.append(("text", "(", None))
                else:
                    stack.append(("atom", child, cur))

    emit(root)
    return "".join(out)


def _atom_text(atom: Atom, g: MolecularGraph, idx: int) -> str:
    """SMILES text for one atom, bracketed only when necessary."""
    symbol = atom.element.lower() if atom.aromatic else atom.element
    plain_ok = (
        atom.element in ORGANIC_SUBSET
        and atom.formal_charge == 0
        and atom.total_h == _implied_h_for_emit(atom, g, idx)
    )
    if plain_ok:
        return symbol
    text = "[" + symbol
    if atom.total_h == 1:
        text += "H"
    elif atom.total_h > 1:
        text += f"H{atom.total_h}"
    if atom.formal_charge == 1:
        text += "+"
    elif atom.formal_charge == -1:
        text += "-"
    elif atom.formal_charge > 1:
        text += f"+{atom.formal_charge}"
    elif atom.formal_charge < -1:
        text += f"-{-atom.formal_charge}"
    return text + "]"


def _implied_h_for_emit(atom: Atom, g: MolecularGraph, idx: int) -> int:
    """Hydrogens a plain (non-bracket) spelling of this atom would imply."""
    order_sum = 0.0
    for j in g.neighbors(idx):
        order = g.bond_between(idx, j).order
        order_sum += 1.0 if order == BondOrder.AROMATIC else float(order)
    demand = int(order_sum + 0.999999)
    if atom.aromatic and atom.element in ("B", "C", "N", "P"):
        demand += 1
    valences = VALENCES.get(atom.element)
    if valences is None:
        return -1
    for v in valences:
        if v >= demand:
            return v - demand
    return 0 if atom.aromatic else -1


def graph_summary(g: MolecularGraph) -> dict:
    """JSON-friendly atom/bond/ring summary used by the CLI."""
    return {
        "n_atoms": g.n_atoms,
        "n_bonds": len(g.bonds),
        "n_rings": len(g.rings),
        "canonical": canonical_form(g),
        "atoms": [
            {
                "element": a.element,
                "charge": a.formal_charge,
                "hydrogens": a.total_h,
                "aromatic": a.aromatic,
                "in_ring": a.in_ring,
                "degree": a.degree,
            }
            for a in g.atoms
        ],
        "bonds": [
            {"a": b.a, "b": b.b, "order": b.order.name.lower()} for b in g.bonds
        ],
        "rings": [list(r) for r in g.rings],
    }
