"""Molecular graphs: atoms, bonds, and implicit-hydrogen accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

#: Sentinel bond order for aromatic bonds; plain orders are the ints 1, 2, 3.
AROMATIC = "aromatic"

BondOrder = Union[int, str]

#: Fixed total order on bond orders, used in canonical signatures.
BOND_RANK = {1: 0, AROMATIC: 1, 2: 2, 3: 3}

#: Symbols that may appear bare (outside brackets) in SMILES.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})

#: Elements that may carry the aromatic flag (written lowercase).
AROMATIC_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As"})

#: Standard valence lists for implicit hydrogen computation.
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ATOMIC_NUMBERS = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Sc": 21, "Ti": 22,
    "V": 23, "Cr": 24, "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29,
    "Zn": 30, "Ga": 31, "Ge": 32, "As": 33, "Se": 34, "Br": 35, "Kr": 36,
    "Rb": 37, "Sr": 38, "Y": 39, "Zr": 40, "Nb": 41, "Mo": 42, "Tc": 43,
    "Ru": 44, "Rh": 45, "Pd": 46, "Ag": 47, "Cd": 48, "In": 49, "Sn": 50,
    "Sb": 51, "Te": 52, "I": 53, "Xe": 54, "Cs": 55, "Ba": 56, "La": 57,
    "Ce": 58, "Pr": 59, "Nd": 60, "Pm": 61, "Sm": 62, "Eu": 63, "Gd": 64,
    "Tb": 65, "Dy": 66, "Ho": 67, "Er": 68, "Tm": 69, "Yb": 70, "Lu": 71,
    "Hf": 72, "Ta": 73, "W": 74, "Re": 75, "Os": 76, "Ir": 77, "Pt": 78,
    "Au": 79, "Hg": 80, "Tl": 81, "Pb": 82, "Bi": 83, "Po": 84, "At": 85,
    "Rn": 86, "Fr": 87, "Ra": 88, "Ac": 89, "Th": 90, "Pa": 91, "U": 92,
    "Np": 93, "Pu": 94, "Am": 95, "Cm": 96, "Bk": 97, "Cf": 98, "Es": 99,
    "Fm": 100, "Md": 101, "No": 102, "Lr": 103, "Rf": 104, "Db": 105,
    "Sg": 106, "Bh": 107, "Hs": 108, "Mt": 109, "Ds": 110, "Rg": 111,
    "Cn": 112, "Nh": 113, "Fl": 114, "Mc": 115, "Lv": 116, "Ts": 117,
    "Og": 118,
}


class GraphError(ValueError):
    """Raised for structurally invalid molecular graphs."""


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    hcount: int = 0
    aromatic: bool = False

    def __post_init__(self):
        if self.element not in ATOMIC_NUMBERS:
            raise GraphError(f"unknown element {self.element!r}")
        if self.hcount < 0:
            raise GraphError(f"negative hydrogen count {self.hcount}")
        if self.aromatic and self.element not in AROMATIC_ELEMENTS:
            raise GraphError(f"element {self.element!r} cannot be aromatic")


def implicit_hcount(element: str, aromatic: bool, bond_order_sum: float) -> int:
    """Hydrogens implied by standard valences given a bond-order total.

    Aromatic bonds contribute 1.5 to the total. Aromatic atoms use only
    their lowest standard valence (so thiophene sulfur gets no
    hydrogens); plain atoms use the smallest valence that covers the
    total. Elements without a standard valence imply none.
    """
    valences = VALENCES.get(element)
    if valences is None:
        return 0
    total = math.ceil(bond_order_sum - 1e-9)
    if aromatic:
        return max(0, valences[0] - total)
    for v in valences:
        if v >= total:
            return v - total
    return 0


@dataclass(frozen=True)
class MoleculeGraph:
    """Atoms plus undirected bonds (order 1, 2, 3, or aromatic)."""

    atoms: Tuple[Atom, ...]
    bonds: Tuple[Tuple[int, int, BondOrder], ...]

    def __post_init__(self):
        n = len(self.atoms)
        norm = []
        seen = set()
        for i, j, order in self.bonds:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"bond ({i}, {j}) has an endpoint outside 0..{n - 1}")
            if i == j:
                raise GraphError(f"bond ({i}, {j}) connects an atom to itself")
            if order not in BOND_RANK:
                raise GraphError(f"unknown bond order {order!r}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate bond between atoms {key[0]} and {key[1]}")
            seen.add(key)
            norm.append((key[0], key[1], order))
        norm.sort(key=lambda b: (b[0], b[1]))
        object.__setattr__(self, "bonds", tuple(norm))
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def adjacency(self) -> List[List[Tuple[int, BondOrder]]]:
        adj: List[List[Tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for i, j, order in self.bonds:
            adj[i].append((j, order))
            adj[j].append((i, order))
        return adj

    def bond_order_sum(self, i: int) -> float:
        total = 0.0
        for a, b, order in self.bonds:
            if i in (a, b):
                total += 1.5 if order == AROMATIC else order
        return total

    def permuted(self, perm: List[int]) -> "MoleculeGraph":
        """Relabeled copy: new index perm[i] holds old atom i."""
        n = len(self.atoms)
        if sorted(perm) != list(range(n)):
            raise GraphError("perm must be a permutation of atom indices")
        atoms = [None] * n
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [(perm[i], perm[j], order) for i, j, order in self.bonds]
        return MoleculeGraph(atoms=tuple(atoms), bonds=tuple(bonds))

    def components(self) -> List[List[int]]:
        adj = self.adjacency()
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            comp = [start]
            seen[start] = True
            stack = [start]
            while stack:
                u = stack.pop()
                for v, _ in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        comp.append(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps
