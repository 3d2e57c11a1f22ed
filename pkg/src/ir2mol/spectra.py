"""Canonical-grid IR spectra and their preprocessing.

A spectrum lives on a uniform wavenumber grid (default 500-4000 cm^-1 at
1 cm^-1 resolution). Raw instrument data with arbitrary sampling is
interpolated onto the grid; transmittance traces are converted to
absorbance with the clamped -log10 transform. All operations are pure
and leave grid metadata untouched.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

TRANSMITTANCE = "transmittance"
ABSORBANCE = "absorbance"
MODES = (TRANSMITTANCE, ABSORBANCE)

#: Floor applied before the log transform so zero transmittance stays finite.
TRANSMITTANCE_FLOOR = 1e-10

DEFAULT_GRID_START = 500.0
DEFAULT_GRID_END = 4000.0
DEFAULT_GRID_COUNT = 3501


class SpectrumError(ValueError):
    """Raised for malformed spectra or invalid preprocessing inputs."""


class TransmittanceClampWarning(UserWarning):
    """Transmittance values above 1 were clamped (measurement noise)."""


class ZeroNormWarning(UserWarning):
    """A spectrum with zero Euclidean norm was encountered."""


@dataclass(frozen=True)
class WavenumberGrid:
    """Uniform wavenumber axis: point(i) = start + i * (end-start) / (count-1)."""

    start: float
    end: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise SpectrumError("grid endpoints must be finite")
        if not self.start < self.end:
            raise SpectrumError(f"grid start must be < end, got [{self.start}, {self.end}]")
        if self.count < 2:
            raise SpectrumError(f"grid needs at least 2 points, got {self.count}")

    @property
    def step(self) -> float:
        return (self.end - self.start) / (self.count - 1)

    def point(self, i: int) -> float:
        return self.start + i * (self.end - self.start) / (self.count - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.count)

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "WavenumberGrid":
        return cls(start=float(d["start"]), end=float(d["end"]), count=int(d["count"]))


def default_grid() -> WavenumberGrid:
    return WavenumberGrid(DEFAULT_GRID_START, DEFAULT_GRID_END, DEFAULT_GRID_COUNT)


@dataclass(frozen=True)
class Spectrum:
    """Intensity values aligned with a wavenumber grid.

    Values are finite and non-negative; the array is frozen after
    construction so spectra can be shared freely across threads.
    """

    grid: WavenumberGrid
    values: np.ndarray
    mode: str
    id: str = ""
    smiles: Optional[str] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).copy()
        if vals.ndim != 1:
            raise SpectrumError(f"values must be one-dimensional, got shape {vals.shape}")
        if vals.shape[0] != self.grid.count:
            raise SpectrumError(
                f"values length {vals.shape[0]} does not match grid count {self.grid.count}"
            )
        if self.mode not in MODES:
            raise SpectrumError(f"unknown mode {self.mode!r}")
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise SpectrumError(f"non-finite value at index {bad[0]}")
        neg = np.flatnonzero(vals < 0)
        if neg.size:
            raise SpectrumError(f"negative value {vals[neg[0]]} at index {neg[0]}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, mode: Optional[str] = None) -> "Spectrum":
        return Spectrum(
            grid=self.grid,
            values=values,
            mode=self.mode if mode is None else mode,
            id=self.id,
            smiles=self.smiles,
        )


@dataclass(frozen=True)
class RawSpectrum:
    """Irregularly sampled source data: (wavenumber, intensity) pairs."""

    points: tuple
    mode: str

    def __post_init__(self):
        pts = sorted((float(w), float(v)) for w, v in self.points)
        if len(pts) < 2:
            raise SpectrumError(f"raw spectrum needs at least 2 points, got {len(pts)}")
        if self.mode not in MODES:
            raise SpectrumError(f"unknown mode {self.mode!r}")
        for (w0, _), (w1, _) in zip(pts, pts[1:]):
            if w0 == w1:
                raise SpectrumError(f"duplicate wavenumber {w0}")
        for w, v in pts:
            if not (math.isfinite(w) and math.isfinite(v)):
                raise SpectrumError(f"non-finite raw point ({w}, {v})")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.array([w for w, _ in self.points])

    @property
    def intensities(self) -> np.ndarray:
        return np.array([v for _, v in self.points])


def to_absorbance(s: Spectrum) -> Spectrum:
    """Convert a transmittance spectrum to absorbance: A = -log10(max(T, 1e-10)).

    Transmittance above 1 is clamped to 1 with a warning (experimental
    artifacts); negative or non-finite input is rejected with the index
    of the offending sample. Uses scalar math.log10 per element so the
    transform is bit-for-bit reproducible against a straight-line
    reference (vectorized log implementations differ in the last ulp).
    """
    if s.mode != TRANSMITTANCE:
        raise SpectrumError(f"to_absorbance expects transmittance input, got {s.mode!r}")
    vals = s.values
    clamped = int(np.count_nonzero(vals > 1.0))
    if clamped:
        warnings.warn(
            f"{clamped} transmittance values > 1 clamped to 1",
            TransmittanceClampWarning,
            stacklevel=2,
        )
    out = np.array(
        [-math.log10(max(min(v, 1.0), TRANSMITTANCE_FLOOR)) for v in vals.tolist()]
    )
    return s.with_values(out, mode=ABSORBANCE)


def from_absorbance(s: Spectrum) -> Spectrum:
    """Inverse transform T = 10^(-A), for round-trip checks."""
    if s.mode != ABSORBANCE:
        raise SpectrumError(f"from_absorbance expects absorbance input, got {s.mode!r}")
    out = np.array([10.0 ** (-v) for v in s.values.tolist()])
    return s.with_values(out, mode=TRANSMITTANCE)


INTERPOLATION_KINDS = ("pchip", "cubic", "linear")


def interpolate(
    r: RawSpectrum,
    g: WavenumberGrid,
    kind: str = "pchip",
    id: str = "",
    smiles: Optional[str] = None,
) -> Spectrum:
    """Resample raw data onto a uniform grid.

    kind selects the interpolant: "pchip" (default, shape-preserving
    piecewise cubic), "cubic" (not-a-knot cubic spline, reproduces cubic
    polynomials exactly), or "linear". Outside the raw support the edge
    value is extended; negative interpolation artifacts are floored at 0.
    """
    if kind not in INTERPOLATION_KINDS:
        raise SpectrumError(f"unknown interpolation kind {kind!r}")
    x = r.wavenumbers
    y = r.intensities
    if x[-1] < g.start or x[0] > g.end:
        raise SpectrumError(
            f"raw support [{x[0]}, {x[-1]}] does not overlap grid [{g.start}, {g.end}]"
        )
    # Clamp query points into the data support: constant extension at the edges.
    q = np.clip(g.points(), x[0], x[-1])
    if kind == "linear" or len(x) == 2:
        out = np.interp(q, x, y)
    elif kind == "pchip":
        out = PchipInterpolator(x, y)(q)
    else:
        bc = "not-a-knot" if len(x) >= 4 else "natural"
        out = CubicSpline(x, y, bc_type=bc)(q)
    out = np.maximum(out, 0.0)
    return Spectrum(grid=g, values=out, mode=r.mode, id=id, smiles=smiles)


def l2_normalize(s: Spectrum) -> Spectrum:
    """Scale values to unit Euclidean norm."""
    norm = float(np.linalg.norm(s.values))
    if norm == 0.0:
        raise SpectrumError("cannot normalize an all-zero spectrum")
    return s.with_values(s.values / norm)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------
#
# Spectra database: JSON lines, one record per spectrum:
#   {"id": str, "smiles": str|null, "mode": "transmittance"|"absorbance",
#    "grid": {"start": f, "end": f, "count": n}, "values": [f, ...]}
#
# Raw ingestion: CSV with header "wavenumber,intensity" plus a mode
# declaration, either passed explicitly or read from a sidecar file
# "<csvpath>.mode" containing the mode string.


def spectrum_to_record(s: Spectrum) -> dict:
    return {
        "id": s.id,
        "smiles": s.smiles,
        "mode": s.mode,
        "grid": s.grid.to_dict(),
        "values": s.values.tolist(),
    }


def spectrum_from_record(rec: dict) -> Spectrum:
    grid = WavenumberGrid.from_dict(rec["grid"])
    values = rec["values"]
    if len(values) != grid.count:
        raise SpectrumError(
            f"values length {len(values)} does not match grid count {grid.count}"
        )
    return Spectrum(
        grid=grid,
        values=np.asarray(values, dtype=np.float64),
        mode=rec["mode"],
        id=str(rec.get("id", "")),
        smiles=rec.get("smiles"),
    )


def load_spectra_jsonl(path) -> list:
    """Load a JSON-lines spectra file; malformed lines are rejected by number."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out.append(spectrum_from_record(rec))
            except (json.JSONDecodeError, KeyError, SpectrumError, TypeError) as exc:
                raise SpectrumError(f"{path}:{lineno}: {exc}") from exc
    return out


def save_spectra_jsonl(spectra: Iterable[Spectrum], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in spectra:
            fh.write(json.dumps(spectrum_to_record(s), sort_keys=True) + "\n")


def read_raw_csv(path, mode: Optional[str] = None) -> RawSpectrum:
    """Read a wavenumber,intensity CSV; mode from argument or sidecar file."""
    path = Path(path)
    if mode is None:
        sidecar = Path(str(path) + ".mode")
        if not sidecar.exists():
            raise SpectrumError(
                f"no mode given and sidecar {sidecar} not found"
            )
        mode = sidecar.read_text(encoding="utf-8").strip()
    points = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["wavenumber", "intensity"]:
            raise SpectrumError(f"{path}: expected header 'wavenumber,intensity'")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                points.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise SpectrumError(f"{path}:{rowno}: malformed row {row!r}") from exc
    return RawSpectrum(points=tuple(points), mode=mode)
