"""Canonical SMILES serialization and structure equivalence.

Atom invariants (element, charge, hydrogen count, aromaticity, degree)
are refined by iterated neighborhood signatures until the partition
stabilizes; remaining symmetry is broken by individualizing each member
of the first tied class and keeping the lexicographically smallest
serialization. The resulting text is a fixed point: parsing it and
re-canonicalizing reproduces it byte for byte.

Equivalence is constitutional (stereo was already discarded at parse
time) and aromaticity-sensitive: a kekulized ring and its aromatic form
are distinct. A relaxed comparison key that ignores bond orders and
aromatic flags (hydrogen counts still discriminate saturation) is
computed alongside so that gap can be measured instead of guessed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .graph import (
    AROMATIC,
    AROMATIC_ELEMENTS,
    ATOMIC_NUMBERS,
    BOND_RANK,
    ORGANIC_SUBSET,
    Atom,
    MoleculeGraph,
    implicit_hcount,
)
from .parser import SmilesParseError, parse_full

_BARE_AROMATIC = frozenset({"B", "C", "N", "O", "P", "S"})
_BOND_SYMBOL = {1: "-", 2: "=", 3: "#", AROMATIC: ":"}


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical serialization; equal text means equal structure."""

    text: str


def _initial_colors(g: MoleculeGraph) -> List[int]:
    adj = g.adjacency()
    keys = [
        (a.element, a.charge, a.hcount, a.aromatic, len(adj[i]))
        for i, a in enumerate(g.atoms)
    ]
    ranking = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [ranking[k] for k in keys]


def _refine(adj, colors: List[int]) -> List[int]:
    while True:
        sigs = []
        for i, color in enumerate(colors):
            neighborhood = tuple(sorted((BOND_RANK[o], colors[j]) for j, o in adj[i]))
            sigs.append((color, neighborhood))
        ranking = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranking[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _individualize(colors: List[int], target: int) -> List[int]:
    keys = [(c, 0 if i == target else 1) for i, c in enumerate(colors)]
    ranking = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [ranking[k] for k in keys]


def _canon_search(g: MoleculeGraph, adj, colors: List[int]) -> str:
    colors = _refine(adj, colors)
    counts: Dict[int, int] = {}
    for c in colors:
        counts[c] = counts.get(c, 0) + 1
    tied = sorted(c for c, k in counts.items() if k > 1)
    if not tied:
        return _serialize(g, adj, colors)
    target = tied[0]
    best: Optional[str] = None
    for i, c in enumerate(colors):
        if c != target:
            continue
        candidate = _canon_search(g, adj, _individualize(colors, i))
        if best is None or candidate < best:
            best = candidate
    assert best is not None
    return best


def canonicalize(g: MoleculeGraph) -> CanonicalForm:
    adj = g.adjacency()
    return CanonicalForm(text=_canon_search(g, adj, _initial_colors(g)))


# ---------------------------------------------------------------------------
# Serialization (requires a discrete coloring: all atom colors distinct)
# ---------------------------------------------------------------------------


def _atom_token(atom: Atom, bond_order_sum: float) -> str:
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bracket = (
        atom.charge != 0
        or atom.element not in ORGANIC_SUBSET
        or (atom.aromatic and atom.element not in _BARE_AROMATIC)
        or atom.hcount != implicit_hcount(atom.element, atom.aromatic, bond_order_sum)
    )
    if not bracket:
        return symbol
    out = "[" + symbol
    if atom.hcount == 1:
        out += "H"
    elif atom.hcount > 1:
        out += f"H{atom.hcount}"
    if atom.charge == 1:
        out += "+"
    elif atom.charge == -1:
        out += "-"
    elif atom.charge > 1:
        out += f"+{atom.charge}"
    elif atom.charge < -1:
        out += f"-{-atom.charge}"
    return out + "]"


def _bond_token(g: MoleculeGraph, i: int, j: int, order) -> str:
    both_aromatic = g.atoms[i].aromatic and g.atoms[j].aromatic
    if order == 1:
        return "-" if both_aromatic else ""
    if order == AROMATIC:
        return "" if both_aromatic else ":"
    return _BOND_SYMBOL[order]


def _serialize(g: MoleculeGraph, adj, colors: List[int]) -> str:
    sums = [g.bond_order_sum(i) for i in range(len(g.atoms))]
    parts = [
        _serialize_component(g, adj, colors, comp, sums) for comp in g.components()
    ]
    return ".".join(sorted(parts))


def _serialize_component(g, adj, colors, comp, sums) -> str:
    start = min(comp, key=lambda i: colors[i])
    order_key = lambda t: colors[t[0]]

    # Pass 1: depth-first structure. Tree children per atom in color
    # order; an edge to an already-visited atom is a ring bond recorded
    # in discovery order (opener visited first, closer second).
    visited = {start}
    children: Dict[int, List[Tuple[int, object]]] = {start: []}
    ring_bonds: List[Tuple[int, int, object]] = []
    seen_edges = set()
    stack = [(start, iter(sorted(adj[start], key=order_key)))]
    while stack:
        u, it = stack[-1]
        advanced = False
        for v, o in it:
            edge = (min(u, v), max(u, v))
            if edge in seen_edges:
                continue
            seen_edges.add(edge)
            if v in visited:
                ring_bonds.append((v, u, o))
            else:
                visited.add(v)
                children[u].append((v, o))
                children[v] = []
                stack.append((v, iter(sorted(adj[v], key=order_key))))
                advanced = True
                break
        if not advanced:
            stack.pop()

    ring_open: Dict[int, List[int]] = {}
    ring_close: Dict[int, List[int]] = {}
    for idx, (opener, closer, _) in enumerate(ring_bonds):
        ring_open.setdefault(opener, []).append(idx)
        ring_close.setdefault(closer, []).append(idx)

    # Pass 2: emit. Ring digits are allocated smallest-free in string
    # order and released when closed, so digits can be reused.
    free: List[int] = list(range(1, 100))
    heapq.heapify(free)
    digit_of: Dict[int, int] = {}

    def digit_str(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    out: List[str] = []
    emit_stack: List[Tuple[str, object]] = [("atom", start)]
    while emit_stack:
        kind, payload = emit_stack.pop()
        if kind == "text":
            out.append(payload)
            continue
        u = payload
        out.append(_atom_token(g.atoms[u], sums[u]))
        for idx in ring_close.get(u, ()):
            out.append(digit_str(digit_of[idx]))
            heapq.heappush(free, digit_of[idx])
        for idx in ring_open.get(u, ()):
            d = heapq.heappop(free)
            digit_of[idx] = d
            opener, closer, o = ring_bonds[idx]
            out.append(_bond_token(g, opener, closer, o) + digit_str(d))
        kids = children[u]
        pending: List[Tuple[str, object]] = []
        for pos, (v, o) in enumerate(kids):
            last = pos == len(kids) - 1
            if not last:
                pending.append(("text", "(" + _bond_token(g, u, v, o)))
                pending.append(("atom", v))
                pending.append(("text", ")"))
            else:
                pending.append(("text", _bond_token(g, u, v, o)))
                pending.append(("atom", v))
        emit_stack.extend(reversed(pending))
    return "".join(out)


# ---------------------------------------------------------------------------
# Equivalence
# ---------------------------------------------------------------------------


def _relaxed(g: MoleculeGraph) -> MoleculeGraph:
    """Strip aromaticity and bond orders; hydrogen counts stay."""
    atoms = tuple(
        Atom(element=a.element, charge=a.charge, hcount=a.hcount, aromatic=False)
        for a in g.atoms
    )
    bonds = tuple((i, j, 1) for i, j, _ in g.bonds)
    return MoleculeGraph(atoms=atoms, bonds=bonds)


@lru_cache(maxsize=65536)
def _canonical_keys(smiles: str):
    """(strict key, relaxed key, stereo_stripped) or a parse error marker."""
    try:
        graph, info = parse_full(smiles)
    except SmilesParseError as exc:
        return None, None, False, str(exc)
    strict = canonicalize(graph).text
    relaxed = canonicalize(_relaxed(graph)).text
    return strict, relaxed, info.stereo_stripped, None


def canonical_smiles(smiles: str) -> str:
    """Canonical text for a SMILES string; raises SmilesParseError."""
    strict, _, _, err = _canonical_keys(smiles)
    if err is not None:
        parse_full(smiles)  # re-raises with the original offset
    return strict


@dataclass(frozen=True)
class ComparisonResult:
    equivalent: bool
    relaxed_equivalent: bool
    parse_failed: bool
    stereo_stripped: bool
    error: Optional[str] = None


def compare(a: str, b: str) -> ComparisonResult:
    """Structure comparison with bookkeeping for metric caveats.

    relaxed_equivalent ignores aromatic flags and bond orders (it merges
    a kekulized ring with its aromatic form); parse failures make both
    answers False rather than raising.
    """
    sa, ra, stereo_a, err_a = _canonical_keys(a)
    sb, rb, stereo_b, err_b = _canonical_keys(b)
    if err_a is not None or err_b is not None:
        return ComparisonResult(
            equivalent=False,
            relaxed_equivalent=False,
            parse_failed=True,
            stereo_stripped=False,
            error=err_a or err_b,
        )
    return ComparisonResult(
        equivalent=sa == sb,
        relaxed_equivalent=ra == rb,
        parse_failed=False,
        stereo_stripped=stereo_a or stereo_b,
    )


def equivalent(a: str, b: str) -> bool:
    """True iff both strings parse and share one canonical form."""
    return compare(a, b).equivalent


# ---------------------------------------------------------------------------
# Auxiliary chemical information derived from a structure
# ---------------------------------------------------------------------------


def atom_types(g: MoleculeGraph) -> List[str]:
    """Distinct heavy-atom elements, ordered by atomic number."""
    elems = {a.element for a in g.atoms}
    return sorted(elems, key=lambda e: ATOMIC_NUMBERS[e])


def carbon_count(g: MoleculeGraph) -> int:
    return sum(1 for a in g.atoms if a.element == "C")


def scaffold(g: MoleculeGraph) -> Optional[str]:
    """Ring systems plus linkers, as canonical text; None when acyclic.

    Computed by iteratively pruning degree <= 1 atoms; hydrogen counts
    of surviving atoms are recomputed for their reduced bond set.
    """
    adj = {i: {j: o for j, o in nbrs} for i, nbrs in enumerate(g.adjacency())}
    changed = True
    while changed:
        changed = False
        for i in list(adj):
            if len(adj[i]) <= 1:
                for j in adj[i]:
                    del adj[j][i]
                del adj[i]
                changed = True
    if not adj:
        return None
    kept = sorted(adj)
    remap = {old: new for new, old in enumerate(kept)}
    bonds = []
    sums = {i: 0.0 for i in kept}
    for i, j, o in g.bonds:
        if i in adj and j in adj.get(i, {}):
            bonds.append((remap[i], remap[j], o))
            contribution = 1.5 if o == AROMATIC else o
            sums[i] += contribution
            sums[j] += contribution
    atoms = tuple(
        Atom(
            element=g.atoms[i].element,
            charge=g.atoms[i].charge,
            hcount=implicit_hcount(g.atoms[i].element, g.atoms[i].aromatic, sums[i]),
            aromatic=g.atoms[i].aromatic,
        )
        for i in kept
    )
    return canonicalize(MoleculeGraph(atoms=atoms, bonds=tuple(bonds))).text
