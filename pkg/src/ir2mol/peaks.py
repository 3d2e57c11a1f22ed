"""Peak extraction and absorption-table assignment.

Peaks are strict local maxima of the absorbance trace (plateaus collapse
to their floor midpoint), filtered by height and pruned highest-first so
no two surviving peaks are within `distance` grid indices. Each peak is
then matched against wavenumber bands of an absorption table and turned
into a fixed-template interpretation sentence; the sentences are what
downstream prompts consume, so their bytes are part of the contract.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .spectra import ABSORBANCE, Spectrum

#: Half-width used to expand single-point table entries into bands.
POINT_WINDOW = 5.0

INTERPRETATION_TEMPLATE = (
    "Peaks observed between {high} and {low} cm-1 are typically associated "
    "with {group} ({bond})."
)
NO_MATCH_TEMPLATE = "No table entry matches the peak at {wavenumber} cm-1."


class TableError(ValueError):
    """Raised for malformed absorption-table files."""


class PeakError(ValueError):
    """Raised for invalid peak-extraction parameters or inputs."""


@dataclass(frozen=True)
class AbsorptionBand:
    """One absorption-table row: a wavenumber interval and its substructure."""

    low: float
    high: float
    group: str
    bond: str = ""
    appearance: Optional[str] = None

    def __post_init__(self):
        if not self.low < self.high:
            raise TableError(f"band must have low < high, got [{self.low}, {self.high}]")
        if not self.group:
            raise TableError("band group must be nonempty")

    def contains(self, wavenumber: float) -> bool:
        return self.low <= wavenumber <= self.high


@dataclass(frozen=True)
class Peak:
    index: int
    wavenumber: float
    absorbance: float


@dataclass(frozen=True)
class PeakAssignment:
    peak: Peak
    bands: tuple
    interpretation: tuple


def _fmt(x: float) -> str:
    """Render wavenumbers the way the table prints them: no trailing .0."""
    return f"{x:g}"


def load_table(path) -> List[AbsorptionBand]:
    """Load an absorption-table CSV.

    Schema: header low,high,group,bond,appearance (an optional extra
    `point` column is accepted). A row with an empty `high` (or a value
    only in `point`) is a single-point entry and is expanded to
    [p-5, p+5]. Bands are returned sorted by low wavenumber descending,
    matching the table convention of listing high wavenumbers first.
    """
    bands = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        cols = [c.strip().lower() for c in reader.fieldnames]
        if "group" not in cols:
            raise TableError(f"{path}: header must include a 'group' column")
        for rowno, row in enumerate(reader, start=2):
            row = {(k or "").strip().lower(): (v or "").strip() for k, v in row.items()}
            try:
                point = row.get("point", "")
                low = row.get("low", "")
                high = row.get("high", "")
                if point:
                    center = float(point)
                    lo, hi = center - POINT_WINDOW, center + POINT_WINDOW
                elif low and not high:
                    center = float(low)
                    lo, hi = center - POINT_WINDOW, center + POINT_WINDOW
                else:
                    lo, hi = float(low), float(high)
                    if lo == hi:
                        lo, hi = lo - POINT_WINDOW, hi + POINT_WINDOW
                    elif lo > hi:
                        lo, hi = hi, lo
                bands.append(
                    AbsorptionBand(
                        low=lo,
                        high=hi,
                        group=row.get("group", ""),
                        bond=row.get("bond", ""),
                        appearance=row.get("appearance") or None,
                    )
                )
            except (ValueError, TableError) as exc:
                raise TableError(f"{path}:{rowno}: {exc}") from exc
    bands.sort(key=lambda b: (-b.low, -b.high, b.group, b.bond))
    return bands


def save_table(bands: Sequence[AbsorptionBand], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["low", "high", "group", "bond", "appearance"])
        for b in bands:
            writer.writerow([_fmt(b.low), _fmt(b.high), b.group, b.bond, b.appearance or ""])


def _plateau_maxima(values: np.ndarray) -> List[int]:
    """Indices of strict local maxima; plateaus collapse to floor midpoint.

    A maximal run of equal values counts as one maximum when both the
    sample before the run and the sample after it are strictly smaller;
    runs touching either boundary are not maxima.
    """
    n = len(values)
    out = []
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j < n - 1 and values[j + 1] == values[i]:
                j += 1
            if j < n - 1 and values[j + 1] < values[i]:
                out.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    return out


def find_peaks(s: Spectrum, height: float = 1.0, distance: int = 50) -> List[Peak]:
    """Extract peaks from an absorbance spectrum.

    Candidates are plateau-collapsed strict local maxima with absorbance
    >= height. They are then processed in descending absorbance (ties:
    lower index first); a candidate is kept only if no already-kept peak
    lies within `distance` indices (|i - j| <= distance suppresses).
    Result is sorted by index ascending.
    """
    if s.mode != ABSORBANCE:
        raise PeakError(f"find_peaks expects an absorbance spectrum, got {s.mode!r}")
    if distance < 1:
        raise PeakError(f"distance must be >= 1, got {distance}")
    values = s.values
    candidates = [i for i in _plateau_maxima(values) if values[i] >= height]
    candidates.sort(key=lambda i: (-values[i], i))
    kept: List[int] = []
    for i in candidates:
        pos = bisect.bisect_left(kept, i)
        if pos > 0 and i - kept[pos - 1] <= distance:
            continue
        if pos < len(kept) and kept[pos] - i <= distance:
            continue
        kept.insert(pos, i)
    return [Peak(index=i, wavenumber=s.grid.point(i), absorbance=float(values[i])) for i in kept]


def assign(peaks: Sequence[Peak], table: Sequence[AbsorptionBand]) -> List[PeakAssignment]:
    """Match each peak against all containing table bands.

    Matching bands keep the table's order. A peak without any match gets
    an empty band list and the fixed no-match sentence.
    """
    out = []
    for peak in peaks:
        bands = tuple(b for b in table if b.contains(peak.wavenumber))
        if bands:
            text = tuple(
                INTERPRETATION_TEMPLATE.format(
                    high=_fmt(b.high), low=_fmt(b.low), group=b.group, bond=b.bond
                )
                for b in bands
            )
        else:
            text = (NO_MATCH_TEMPLATE.format(wavenumber=_fmt(peak.wavenumber)),)
        out.append(PeakAssignment(peak=peak, bands=bands, interpretation=text))
    return out


def assignments_to_records(assignments: Sequence[PeakAssignment]) -> List[dict]:
    """JSON-ready form of assignments (the CLI `peaks` output)."""
    return [
        {
            "wavenumber": a.peak.wavenumber,
            "absorbance": a.peak.absorbance,
            "matches": [
                {"low": b.low, "high": b.high, "group": b.group, "bond": b.bond}
                for b in a.bands
            ],
            "text": list(a.interpretation),
        }
        for a in assignments
    ]
