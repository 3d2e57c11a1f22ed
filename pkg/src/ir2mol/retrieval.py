"""Cosine-similarity retrieval over a spectra database.

The database is an in-memory matrix of absorbance spectra sharing one
grid, each labeled with its molecule's SMILES. Retrieval is an exact
exhaustive scan: at ~1e4 spectra x 3.5k dims brute force is fast, exact,
and trivially deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .spectra import ABSORBANCE, Spectrum, WavenumberGrid, ZeroNormWarning


class RetrievalError(ValueError):
    """Raised for invalid databases or query/grid mismatches."""


@dataclass(frozen=True)
class RetrievalHit:
    smiles: str
    similarity: float
    id: str


class SpectraDatabase:
    """Immutable collection of labeled absorbance spectra on one grid."""

    def __init__(self, entries: Sequence[Spectrum]):
        entries = list(entries)
        if not entries:
            raise RetrievalError("database needs at least one entry")
        grid = entries[0].grid
        seen = set()
        for e in entries:
            if e.grid != grid:
                raise RetrievalError(
                    f"entry {e.id!r} grid {e.grid} differs from database grid {grid}"
                )
            if e.mode != ABSORBANCE:
                raise RetrievalError(f"entry {e.id!r} is not in absorbance mode")
            if e.smiles is None:
                raise RetrievalError(f"entry {e.id!r} has no SMILES label")
            if e.id in seen:
                raise RetrievalError(f"duplicate id {e.id!r}")
            seen.add(e.id)
        self.entries = tuple(entries)
        self.grid = grid
        self._matrix = np.stack([e.values for e in entries])
        self._norms = np.linalg.norm(self._matrix, axis=1)

    def __len__(self) -> int:
        return len(self.entries)

    def exclude_self(self, query_id: str) -> "SpectraDatabase":
        """View without the entry whose id equals query_id (if present)."""
        kept = [e for e in self.entries if e.id != query_id]
        if len(kept) == len(self.entries):
            return self
        return SpectraDatabase(kept)


def retrieve(db: SpectraDatabase, query: Spectrum, n: int = 10) -> List[RetrievalHit]:
    """Top-n entries by cosine similarity to the query.

    Hits are sorted by similarity descending, ties broken by id
    ascending. A zero-norm query or entry contributes similarity 0 and
    is flagged with a warning. Fewer than n entries returns them all.
    """
    if n < 1:
        raise RetrievalError(f"n must be >= 1, got {n}")
    if query.grid != db.grid:
        raise RetrievalError(
            f"query grid {query.grid} does not match database grid {db.grid}"
        )
    qnorm = float(np.linalg.norm(query.values))
    zero_entries = int(np.count_nonzero(db._norms == 0.0))
    if qnorm == 0.0 or zero_entries:
        what = []
        if qnorm == 0.0:
            what.append("query")
        if zero_entries:
            what.append(f"{zero_entries} database entries")
        warnings.warn(
            f"zero-norm spectra ({', '.join(what)}): similarity defined as 0",
            ZeroNormWarning,
            stacklevel=2,
        )
    dots = db._matrix @ query.values
    denom = db._norms * qnorm
    sims = np.divide(dots, denom, out=np.zeros_like(dots), where=denom != 0.0)
    order = sorted(range(len(db)), key=lambda i: (-sims[i], db.entries[i].id))
    return [
        RetrievalHit(smiles=db.entries[i].smiles, similarity=float(sims[i]), id=db.entries[i].id)
        for i in order[:n]
    ]
