"""Shared fixtures: toy spectra, tables, and random molecule graphs."""

from __future__ import annotations

import numpy as np
import pytest

from ir2mol.chem.graph import AROMATIC, Atom, MoleculeGraph
from ir2mol.chem.parser import parse
from ir2mol.peaks import AbsorptionBand, save_table
from ir2mol.spectra import ABSORBANCE, Spectrum, WavenumberGrid, save_spectra_jsonl

AROMATIC_OK = ("B", "C", "N", "O", "P", "S")
ELEMENT_POOL = ("C", "C", "C", "C", "N", "O", "O", "S", "F", "Cl", "Br", "P", "B", "I")


def random_molecule(rng: np.random.RandomState, max_atoms: int = 12,
                    charges: bool = True) -> MoleculeGraph:
    """Random connected molecule-shaped graph.

    Spanning tree plus a few extra edges; aromatic flags only on
    aromatic-capable elements; hydrogen counts either implicit-looking
    or arbitrary small ints (the serializer brackets the difference).
    """
    n = int(rng.randint(2, max_atoms + 1))
    elements = [ELEMENT_POOL[rng.randint(len(ELEMENT_POOL))] for _ in range(n)]
    aromatic = [
        bool(rng.rand() < 0.25) and elements[i] in AROMATIC_OK for i in range(n)
    ]
    bonds = {}
    for i in range(1, n):
        j = int(rng.randint(i))
        bonds[(j, i)] = None
    extra = int(rng.randint(0, max(1, n // 3) + 1))
    for _ in range(extra):
        a, b = int(rng.randint(n)), int(rng.randint(n))
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        bonds.setdefault(key, None)
    final = []
    for (a, b) in sorted(bonds):
        if aromatic[a] and aromatic[b] and rng.rand() < 0.8:
            order = AROMATIC
        else:
            order = [1, 1, 1, 2, 3][rng.randint(5)]
        final.append((a, b, order))
    atoms = []
    for i in range(n):
        charge = int(rng.randint(-1, 2)) if charges and rng.rand() < 0.15 else 0
        hcount = int(rng.randint(0, 4))
        atoms.append(
            Atom(element=elements[i], charge=charge, hcount=hcount,
                 aromatic=aromatic[i])
        )
    return MoleculeGraph(atoms=tuple(atoms), bonds=tuple(final))


SMILES_CORPUS = [
    "C",
    "CC",
    "CCO",
    "C(C)O",
    "OCC",
    "COC",
    "CCN",
    "CC(C)O",
    "CC(=O)O",
    "CC(=O)OC",
    "C=CC",
    "C#N",
    "CC#N",
    "c1ccccc1",
    "C1=CC=CC=C1",
    "Cc1ccccc1",
    "c1ccncc1",
    "[nH]1cccc1",
    "c1ccsc1",
    "c1ccoc1",
    "c1ccc2ccccc2c1",
    "FC(F)(F)c1ccc(Br)cc1",
    "Clc1ccccc1",
    "C1CC1",
    "C1CCCCC1",
    "C1CC2CCC1CC2",
    "C%12CC%12",
    "[NH4+]",
    "[O-]C(=O)C",
    "[Na+].[Cl-]",
    "CC.OO",
    "OCC(O)CO",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(=O)OC1=CC=CC=C1C(=O)O",
    "N#Cc1ccccc1",
    "[13CH4]",
    "F/C=C/F",
    "C[C@H](N)C(=O)O",
    "[H][H]",
    "[Se]",
    "[se]1cccc1",
    "S(=O)(=O)(O)O",
    "OP(=O)(O)O",
]


@pytest.fixture
def small_grid():
    return WavenumberGrid(500.0, 4000.0, 351)


@pytest.fixture
def toy_db_entries(small_grid):
    rng = np.random.RandomState(42)
    pool = ["CCO", "CCN", "c1ccccc1", "CC(=O)O", "FC(F)(F)c1ccccc1",
            "CCCl", "CCBr", "COC", "CC(C)O", "CCCC"]
    entries = []
    for i, smi in enumerate(pool):
        values = np.abs(rng.randn(small_grid.count)) + 0.1
        values[40 + 25 * i] = 3.0
        entries.append(
            Spectrum(grid=small_grid, values=values, mode=ABSORBANCE,
                     id=f"s{i}", smiles=smi)
        )
    return entries


@pytest.fixture
def table_file(tmp_path):
    path = tmp_path / "table.csv"
    save_table(
        [
            AbsorptionBand(3200.0, 3550.0, "alcohol", "O-H", "broad"),
            AbsorptionBand(1690.0, 1740.0, "carbonyl compound", "C=O"),
            AbsorptionBand(1000.0, 1200.0, "fluoro compound", "C-F", "strong"),
        ],
        path,
    )
    return path
