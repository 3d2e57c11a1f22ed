"""SMILES parser producing molecular graphs.

Covers the organic subset, bracket atoms with charge and hydrogen
counts, branches, ring bonds (including %nn), aromatic lowercase atoms,
and dot-separated components. Stereo markers (/ \\ @ @@) and isotopes
are parsed and discarded; the discard is reported so callers can track
how often it matters. Errors carry the byte offset of the offending
character.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .graph import (
    AROMATIC,
    AROMATIC_ELEMENTS,
    ATOMIC_NUMBERS,
    ORGANIC_SUBSET,
    Atom,
    MoleculeGraph,
    implicit_hcount,
)


class SmilesParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset
        self.reason = message


@dataclass
class ParseInfo:
    """What the parser dropped or noticed along the way."""

    stereo_stripped: bool = False
    isotope_ignored: bool = False
    notes: List[str] = field(default_factory=list)


_AROMATIC_BARE = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
_AROMATIC_BRACKET = dict(_AROMATIC_BARE, se="Se", **{"as": "As"})
_BOND_CHARS = {"-": 1, "=": 2, "#": 3, ":": AROMATIC}


@dataclass
class _PendingAtom:
    element: str
    aromatic: bool
    charge: int = 0
    hcount: Optional[int] = None  # None: compute implicit from bonds


def _parse_bracket(s: str, start: int, info: ParseInfo) -> Tuple[_PendingAtom, int]:
    """Parse a bracket atom beginning at s[start] == '['; returns (atom, end)."""
    end = s.find("]", start)
    if end == -1:
        raise SmilesParseError("unterminated bracket atom", start)
    i = start + 1
    # isotope (ignored)
    iso_start = i
    while i < end and s[i].isdigit():
        i += 1
    if i > iso_start:
        info.isotope_ignored = True
        info.notes.append(f"isotope ignored at offset {iso_start}")
    if i >= end:
        raise SmilesParseError("bracket atom has no element symbol", i)
    # element symbol: prefer a two-letter match
    element = None
    aromatic = False
    two = s[i : i + 2]
    one = s[i]
    if two in _AROMATIC_BRACKET:
        element, aromatic = _AROMATIC_BRACKET[two], True
        i += 2
    elif two[0].isupper() and len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBERS:
        element = two
        i += 2
    elif one in _AROMATIC_BRACKET:
        element, aromatic = _AROMATIC_BRACKET[one], True
        i += 1
    elif one.isupper() and one in ATOMIC_NUMBERS:
        element = one
        i += 1
    else:
        raise SmilesParseError(f"unknown element {s[i:end]!r}", i)
    # chirality (ignored)
    if i < end and s[i] == "@":
        info.stereo_stripped = True
        info.notes.append(f"chirality marker ignored at offset {i}")
        i += 1
        if i < end and s[i] == "@":
            i += 1
    # hydrogen count
    hcount = 0
    if i < end and s[i] == "H":
        i += 1
        digits = ""
        while i < end and s[i].isdigit():
            digits += s[i]
            i += 1
        hcount = int(digits) if digits else 1
    # charge
    charge = 0
    if i < end and s[i] in "+-":
        sign = 1 if s[i] == "+" else -1
        ch = s[i]
        i += 1
        digits = ""
        while i < end and s[i].isdigit():
            digits += s[i]
            i += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while i < end and s[i] == ch:
                charge += sign
                i += 1
    # atom-class map (ignored)
    if i < end and s[i] == ":":
        i += 1
        digits = ""
        while i < end and s[i].isdigit():
            digits += s[i]
            i += 1
        if not digits:
            raise SmilesParseError("atom class marker without digits", i)
        info.notes.append("atom class ignored")
    if i != end:
        raise SmilesParseError(f"unexpected {s[i]!r} in bracket atom", i)
    return _PendingAtom(element=element, aromatic=aromatic, charge=charge, hcount=hcount), end + 1


def parse_full(smiles: str) -> Tuple[MoleculeGraph, ParseInfo]:
    """Parse a SMILES string into a graph plus discard/warning info."""
    info = ParseInfo()
    atoms: List[_PendingAtom] = []
    bonds: List[Tuple[int, int, object]] = []
    bond_keys = set()
    prev: Optional[int] = None
    pending_bond: Optional[object] = None
    pending_offset = 0
    branch_stack: List[Tuple[Optional[int], int]] = []
    rings: Dict[int, Tuple[int, Optional[object], int]] = {}
    expect_atom_at: Optional[int] = None  # offset of a '.' awaiting its atom

    def add_bond(a: int, b: int, order, offset: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b:
            raise SmilesParseError("ring bond connects an atom to itself", offset)
        if key in bond_keys:
            raise SmilesParseError(f"duplicate bond between atoms {key[0]} and {key[1]}", offset)
        bond_keys.add(key)
        bonds.append((a, b, order))

    def attach(new_idx: int, offset: int) -> None:
        nonlocal prev, pending_bond, expect_atom_at
        if prev is not None:
            order = pending_bond
            if order is None:
                both_aromatic = atoms[prev].aromatic and atoms[new_idx].aromatic
                order = AROMATIC if both_aromatic else 1
            add_bond(prev, new_idx, order, offset)
        pending_bond = None
        prev = new_idx
        expect_atom_at = None

    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            atom, nxt = _parse_bracket(smiles, i, info)
            atoms.append(atom)
            attach(len(atoms) - 1, i)
            i = nxt
        elif ch.isupper():
            two = smiles[i : i + 2]
            if two in ("Cl", "Br"):
                element, step = two, 2
            elif ch in ORGANIC_SUBSET:
                element, step = ch, 1
            else:
                raise SmilesParseError(
                    f"element {ch!r} must be written in brackets", i
                )
            atoms.append(_PendingAtom(element=element, aromatic=False))
            attach(len(atoms) - 1, i)
            i += step
        elif ch in _AROMATIC_BARE:
            atoms.append(_PendingAtom(element=_AROMATIC_BARE[ch], aromatic=True))
            attach(len(atoms) - 1, i)
            i += 1
        elif ch in _BOND_CHARS:
            if pending_bond is not None:
                raise SmilesParseError("two bond symbols in a row", i)
            if prev is None:
                raise SmilesParseError("bond symbol before any atom", i)
            pending_bond = _BOND_CHARS[ch]
            pending_offset = i
            i += 1
        elif ch in "/\\":
            if pending_bond is not None:
                raise SmilesParseError("two bond symbols in a row", i)
            if prev is None:
                raise SmilesParseError("bond symbol before any atom", i)
            info.stereo_stripped = True
            info.notes.append(f"directional bond treated as single at offset {i}")
            pending_bond = 1
            pending_offset = i
            i += 1
        elif ch == "(":
            if prev is None:
                raise SmilesParseError("branch before any atom", i)
            if pending_bond is not None:
                raise SmilesParseError("bond symbol before branch open", i)
            branch_stack.append((prev, i))
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesParseError("unmatched ')'", i)
            if pending_bond is not None:
                raise SmilesParseError("dangling bond before ')'", pending_offset)
            anchor, open_off = branch_stack.pop()
            if prev == anchor:
                raise SmilesParseError("empty branch", open_off)
            prev = anchor
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesParseError("ring bond before any atom", i)
            if ch == "%":
                seg = smiles[i + 1 : i + 3]
                if len(seg) < 2 or not seg.isdigit():
                    raise SmilesParseError("'%' must be followed by two digits", i)
                num = int(seg)
                step = 3
            else:
                num = int(ch)
                step = 1
            if num in rings:
                other, other_order, other_off = rings.pop(num)
                order = pending_bond
                if order is not None and other_order is not None and order != other_order:
                    raise SmilesParseError(
                        f"conflicting bond orders on ring closure {num}", i
                    )
                if order is None:
                    order = other_order
                if order is None:
                    both_aromatic = atoms[prev].aromatic and atoms[other].aromatic
                    order = AROMATIC if both_aromatic else 1
                add_bond(other, prev, order, i)
                pending_bond = None
            else:
                rings[num] = (prev, pending_bond, i)
                pending_bond = None
            i += step
        elif ch == ".":
            if pending_bond is not None:
                raise SmilesParseError("bond symbol before '.'", pending_offset)
            if prev is None:
                raise SmilesParseError("'.' before any atom", i)
            prev = None
            expect_atom_at = i
            i += 1
        elif ch.isspace():
            raise SmilesParseError("whitespace inside SMILES", i)
        else:
            raise SmilesParseError(f"unexpected character {ch!r}", i)

    if pending_bond is not None:
        raise SmilesParseError("dangling bond at end of input", pending_offset)
    if branch_stack:
        raise SmilesParseError("unclosed branch", branch_stack[-1][1])
    if rings:
        num, (_, _, off) = min(rings.items(), key=lambda kv: kv[1][2])
        raise SmilesParseError(f"unclosed ring bond {num}", off)
    if expect_atom_at is not None:
        raise SmilesParseError("expected an atom after '.'", expect_atom_at)
    if not atoms:
        raise SmilesParseError("empty SMILES", 0)

    order_sums = [0.0] * len(atoms)
    for a, b, order in bonds:
        contribution = 1.5 if order == AROMATIC else order
        order_sums[a] += contribution
        order_sums[b] += contribution
    final = []
    for idx, pa in enumerate(atoms):
        hcount = pa.hcount
        if hcount is None:
            hcount = implicit_hcount(pa.element, pa.aromatic, order_sums[idx])
        final.append(
            Atom(element=pa.element, charge=pa.charge, hcount=hcount, aromatic=pa.aromatic)
        )
    return MoleculeGraph(atoms=tuple(final), bonds=tuple(bonds)), info


def parse(smiles: str) -> MoleculeGraph:
    """Parse a SMILES string; raises SmilesParseError with a byte offset."""
    graph, _ = parse_full(smiles)
    return graph
