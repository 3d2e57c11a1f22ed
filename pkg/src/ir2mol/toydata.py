"""Synthetic desk-scale fixtures: simulated IR spectra from structures.

Real corpora are licensed, so experiments and tests run on simulated
spectra: each functional-group feature of a molecule contributes a
Gaussian band at its characteristic wavenumber, scaled by how often the
feature occurs, plus a little seeded noise. The mapping is crude but
deterministic and informative enough that retrieval and a small
translator have real signal to learn.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .chem import AROMATIC, MoleculeGraph, parse
from .spectra import ABSORBANCE, Spectrum, WavenumberGrid


def _count_oh(g: MoleculeGraph) -> int:
    return sum(1 for a in g.atoms if a.element == "O" and a.hcount > 0)


def _count_nh(g: MoleculeGraph) -> int:
    return sum(1 for a in g.atoms if a.element == "N" and a.hcount > 0)


def _count_ch(g: MoleculeGraph) -> int:
    return sum(a.hcount for a in g.atoms if a.element == "C")


def _count_double_bonds_to(g: MoleculeGraph, elem_a: str, elem_b: str) -> int:
    total = 0
    for i, j, order in g.bonds:
        if order != 2:
            continue
        pair = {g.atoms[i].element, g.atoms[j].element}
        if pair == {elem_a, elem_b} or (elem_a == elem_b and pair == {elem_a}):
            total += 1
    return total


def _count_triple(g: MoleculeGraph) -> int:
    return sum(1 for _, _, order in g.bonds if order == 3)


def _count_aromatic_atoms(g: MoleculeGraph) -> int:
    return sum(1 for a in g.atoms if a.aromatic)


def _count_bonds_to(g: MoleculeGraph, element: str) -> int:
    return sum(
        1
        for i, j, _ in g.bonds
        if element in (g.atoms[i].element, g.atoms[j].element)
    )


#: (label, center wavenumber, width, strength, feature counter)
FEATURE_BANDS = (
    ("O-H stretch", 3400.0, 70.0, 1.6, _count_oh),
    ("N-H stretch", 3320.0, 50.0, 1.4, _count_nh),
    ("C-H stretch", 2950.0, 45.0, 0.35, _count_ch),
    ("C#X stretch", 2230.0, 30.0, 1.5, _count_triple),
    ("C=O stretch", 1715.0, 28.0, 1.8, lambda g: _count_double_bonds_to(g, "C", "O")),
    ("aromatic ring", 1600.0, 25.0, 0.45, _count_aromatic_atoms),
    ("C=C stretch", 1650.0, 25.0, 1.2, lambda g: _count_double_bonds_to(g, "C", "C")),
    ("C-F stretch", 1150.0, 35.0, 1.5, lambda g: _count_bonds_to(g, "F")),
    ("C-Cl stretch", 750.0, 30.0, 1.5, lambda g: _count_bonds_to(g, "Cl")),
    ("C-Br stretch", 610.0, 28.0, 1.5, lambda g: _count_bonds_to(g, "Br")),
)

#: A small pool of molecules spanning the feature space above.
TOY_SMILES = (
    "CCO",
    "CCCO",
    "CC(C)O",
    "CCOC",
    "COC",
    "CC(=O)O",
    "CC(=O)OC",
    "CC(=O)N",
    "CCN",
    "CCCN",
    "CC#N",
    "CCC#N",
    "c1ccccc1",
    "Cc1ccccc1",
    "c1ccncc1",
    "FC(F)(F)c1ccccc1",
    "Fc1ccccc1",
    "Clc1ccccc1",
    "Brc1ccccc1",
    "CCCl",
    "CCBr",
    "ClCCCl",
    "CCCC",
    "CC(C)C",
    "C=CC",
    "C=CCO",
    "OCC(O)CO",
    "CCS",
    "CC(=O)c1ccccc1",
    "OCc1ccccc1",
)


def simulate_values(
    smiles: str,
    grid: WavenumberGrid,
    rng: Optional[np.random.RandomState] = None,
    noise: float = 0.02,
) -> np.ndarray:
    """Simulated absorbance trace for a structure on a grid."""
    g = parse(smiles)
    w = grid.points()
    values = np.full(grid.count, 0.05)
    for _, center, width, strength, counter in FEATURE_BANDS:
        n = counter(g)
        if n:
            values += strength * n * np.exp(-((w - center) ** 2) / (2.0 * width**2))
    if rng is not None and noise > 0:
        values = values + noise * np.abs(rng.randn(grid.count))
    return values


def make_dataset(
    grid: WavenumberGrid,
    smiles_pool: Sequence[str] = TOY_SMILES,
    per_molecule: int = 3,
    seed: int = 0,
    noise: float = 0.02,
) -> List[Spectrum]:
    """Labeled spectra: per_molecule noisy samples of each structure."""
    rng = np.random.RandomState(seed)
    out = []
    for m_index, smiles in enumerate(smiles_pool):
        for rep in range(per_molecule):
            values = simulate_values(smiles, grid, rng=rng, noise=noise)
            out.append(
                Spectrum(
                    grid=grid,
                    values=values,
                    mode=ABSORBANCE,
                    id=f"m{m_index:03d}r{rep}",
                    smiles=smiles,
                )
            )
    return out


def toy_table_rows() -> List[Tuple[float, float, str, str]]:
    """Absorption-table rows matching the simulated bands."""
    return [
        (3200.0, 3550.0, "alcohol / hydroxyl", "O-H"),
        (3250.0, 3400.0, "amine", "N-H"),
        (2840.0, 3000.0, "alkane", "C-H"),
        (2210.0, 2260.0, "nitrile", "C#N"),
        (1690.0, 1740.0, "carbonyl compound", "C=O"),
        (1620.0, 1680.0, "alkene", "C=C"),
        (1565.0, 1615.0, "aromatic ring", "C=C"),
        (1000.0, 1200.0, "fluoro compound", "C-F"),
        (700.0, 800.0, "chloro compound", "C-Cl"),
        (580.0, 650.0, "bromo compound", "C-Br"),
    ]
