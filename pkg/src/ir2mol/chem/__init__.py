"""SMILES parsing, canonicalization, and structure equivalence."""

from .canon import (
    CanonicalForm,
    ComparisonResult,
    atom_types,
    canonical_smiles,
    canonicalize,
    carbon_count,
    compare,
    equivalent,
    scaffold,
)
from .graph import (
    AROMATIC,
    ATOMIC_NUMBERS,
    Atom,
    GraphError,
    MoleculeGraph,
    implicit_hcount,
)
from .parser import ParseInfo, SmilesParseError, parse, parse_full

__all__ = [
    "AROMATIC",
    "ATOMIC_NUMBERS",
    "Atom",
    "CanonicalForm",
    "ComparisonResult",
    "GraphError",
    "MoleculeGraph",
    "ParseInfo",
    "SmilesParseError",
    "atom_types",
    "canonical_smiles",
    "canonicalize",
    "carbon_count",
    "compare",
    "equivalent",
    "implicit_hcount",
    "parse",
    "parse_full",
    "scaffold",
]
