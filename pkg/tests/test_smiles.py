import itertools

import numpy as np
import pytest

from conftest import SMILES_CORPUS, random_molecule
from ir2mol.chem import (
    AROMATIC,
    Atom,
    GraphError,
    MoleculeGraph,
    SmilesParseError,
    atom_types,
    canonical_smiles,
    canonicalize,
    carbon_count,
    compare,
    equivalent,
    implicit_hcount,
    parse,
    parse_full,
    scaffold,
)


def isomorphic_bruteforce(g1: MoleculeGraph, g2: MoleculeGraph) -> bool:
    """Exhaustive permutation check; exact on small graphs."""
    if len(g1) != len(g2) or len(g1.bonds) != len(g2.bonds):
        return False
    target = {(i, j): o for i, j, o in g2.bonds}
    for perm in itertools.permutations(range(len(g1))):
        if any(g1.atoms[i] != g2.atoms[perm[i]] for i in range(len(g1))):
            continue
        ok = True
        for i, j, o in g1.bonds:
            a, b = perm[i], perm[j]
            if target.get((min(a, b), max(a, b))) != o:
                ok = False
                break
        if ok:
            return True
    return False


class TestParse:
    def test_ethanol_chain(self):
        g = parse("CCO")
        assert [a.element for a in g.atoms] == ["C", "C", "O"]
        assert g.bonds == ((0, 1, 1), (1, 2, 1))
        assert [a.hcount for a in g.atoms] == [3, 2, 1]

    def test_benzene_is_aromatic_six_cycle(self):
        g = parse("c1ccccc1")
        assert len(g) == 6
        assert all(a.element == "C" and a.aromatic for a in g.atoms)
        assert len(g.bonds) == 6
        assert all(o == AROMATIC for _, _, o in g.bonds)
        assert all(a.hcount == 1 for a in g.atoms)

    def test_branch_and_double_bond(self):
        g = parse("CC(=O)O")
        orders = {(i, j): o for i, j, o in g.bonds}
        assert orders[(1, 2)] == 2 and orders[(1, 3)] == 1

    def test_unclosed_branch_offset(self):
        with pytest.raises(SmilesParseError) as err:
            parse("C1CC1C(")
        assert err.value.offset == 6
        assert "unclosed branch" in str(err.value)

    def test_unmatched_close_paren(self):
        with pytest.raises(SmilesParseError) as err:
            parse("CC)C")
        assert err.value.offset == 2

    def test_unclosed_ring(self):
        with pytest.raises(SmilesParseError, match="unclosed ring"):
            parse("C1CCC")

    def test_ring_bond_order_conflict(self):
        with pytest.raises(SmilesParseError, match="conflicting bond orders"):
            parse("C=1CCC-1")

    def test_ring_bond_order_agreement(self):
        g = parse("C=1CCC=1")
        assert any(o == 2 for _, _, o in g.bonds)

    def test_ring_bond_single_side_order(self):
        g = parse("C=1CCC1")
        orders = {(min(i, j), max(i, j)): o for i, j, o in g.bonds}
        assert orders[(0, 3)] == 2

    def test_unknown_element(self):
        with pytest.raises(SmilesParseError, match="unknown element"):
            parse("[Xx]")

    def test_bare_two_letter_only_cl_br(self):
        g = parse("CClBr")
        assert [a.element for a in g.atoms] == ["C", "Cl", "Br"]

    def test_bare_unknown_uppercase_rejected(self):
        with pytest.raises(SmilesParseError, match="brackets"):
            parse("CE")

    def test_percent_ring_numbers(self):
        assert equivalent("C%12CC%12", "C1CC1")

    def test_percent_requires_two_digits(self):
        with pytest.raises(SmilesParseError, match="two digits"):
            parse("C%1CC")

    def test_bracket_charge_forms(self):
        assert parse("[NH4+]").atoms[0] == Atom("N", charge=1, hcount=4)
        assert parse("[O-]").atoms[0].charge == -1
        assert parse("[Fe+2]").atoms[0].charge == 2
        assert parse("[Fe++]").atoms[0].charge == 2
        assert parse("[O-2]").atoms[0].charge == -2

    def test_bracket_hcount(self):
        assert parse("[CH4]").atoms[0].hcount == 4
        assert parse("[CH]").atoms[0].hcount == 1
        assert parse("[C]").atoms[0].hcount == 0

    def test_dot_components(self):
        g = parse("CC.O")
        assert len(g) == 3 and len(g.bonds) == 1
        assert len(g.components()) == 2

    def test_dot_errors(self):
        with pytest.raises(SmilesParseError):
            parse(".CC")
        with pytest.raises(SmilesParseError, match="after '.'"):
            parse("CC.")

    def test_two_bonds_in_a_row(self):
        with pytest.raises(SmilesParseError, match="two bond symbols"):
            parse("C=#C")

    def test_dangling_bond(self):
        with pytest.raises(SmilesParseError, match="dangling bond"):
            parse("CC=")

    def test_empty_branch(self):
        with pytest.raises(SmilesParseError, match="empty branch"):
            parse("C()C")

    def test_stereo_is_stripped_with_flag(self):
        g, info = parse_full("F/C=C/F")
        assert info.stereo_stripped
        orders = sorted(o for _, _, o in g.bonds)
        assert orders == [1, 1, 2]
        g2, info2 = parse_full("C[C@H](N)C(=O)O")
        assert info2.stereo_stripped
        assert g2.atoms[1].hcount == 1

    def test_isotope_ignored_with_flag(self):
        g, info = parse_full("[13CH4]")
        assert info.isotope_ignored
        assert g.atoms[0] == Atom("C", hcount=4)

    def test_aromatic_bracket_atoms(self):
        g = parse("[nH]1cccc1")
        assert g.atoms[0] == Atom("N", hcount=1, aromatic=True)
        g2 = parse("[se]1cccc1")
        assert g2.atoms[0].element == "Se" and g2.atoms[0].aromatic

    def test_explicit_aromatic_bond(self):
        g = parse("C:C")
        assert g.bonds[0][2] == AROMATIC

    def test_empty_input(self):
        with pytest.raises(SmilesParseError, match="empty"):
            parse("")


class TestImplicitHydrogens:
    @pytest.mark.parametrize("smiles,index,expected", [
        ("C", 0, 4),
        ("CC", 0, 3),
        ("C=C", 0, 2),
        ("C#C", 0, 1),
        ("O", 0, 2),
        ("OC", 0, 1),
        ("N", 0, 3),
        ("S(=O)(=O)(O)O", 0, 0),   # hexavalent sulfur
        ("OP(=O)(O)O", 1, 0),      # pentavalent phosphorus
        ("c1ccccc1", 0, 1),        # benzene CH
        ("c1ccncc1", 3, 0),        # pyridine N
        ("c1ccoc1", 3, 0),         # furan O
        ("c1ccsc1", 3, 0),         # thiophene S
        ("Cc1ccccc1", 1, 0),       # substituted ring position
    ])
    def test_counts(self, smiles, index, expected):
        assert parse(smiles).atoms[index].hcount == expected

    def test_rule_directly(self):
        assert implicit_hcount("C", False, 0) == 4
        assert implicit_hcount("S", False, 5) == 6 - 5
        assert implicit_hcount("S", True, 3) == 0
        assert implicit_hcount("C", True, 3) == 1
        assert implicit_hcount("Fe", False, 2) == 0


class TestCanonical:
    def test_traversal_invariance(self):
        assert canonical_smiles("C(C)O") == canonical_smiles("CCO")
        assert canonical_smiles("OCC") == canonical_smiles("CCO")

    def test_constitutional_difference(self):
        assert canonical_smiles("CCO") != canonical_smiles("COC")

    def test_fixed_point_on_corpus(self):
        for s in SMILES_CORPUS:
            c1 = canonical_smiles(s)
            assert canonical_smiles(c1) == c1, s

    def test_permutation_invariance_random_graphs(self):
        rng = np.random.RandomState(123)
        for _ in range(60):
            g = random_molecule(rng, max_atoms=10)
            base = canonicalize(g).text
            for _ in range(4):
                perm = list(rng.permutation(len(g)))
                assert canonicalize(g.permuted(perm)).text == base

    def test_round_trip_random_graphs(self):
        rng = np.random.RandomState(17)
        for _ in range(80):
            g = random_molecule(rng, max_atoms=10)
            text = canonicalize(g).text
            assert canonicalize(parse(text)).text == text, text

    def test_agrees_with_isomorphism_oracle(self):
        rng = np.random.RandomState(5)
        graphs = [random_molecule(rng, max_atoms=6, charges=False) for _ in range(18)]
        for g in graphs:
            perm = list(rng.permutation(len(g)))
            assert isomorphic_bruteforce(g, g.permuted(perm))
            assert canonicalize(g).text == canonicalize(g.permuted(perm)).text
        for g1, g2 in itertools.combinations(graphs, 2):
            same_canon = canonicalize(g1).text == canonicalize(g2).text
            assert same_canon == isomorphic_bruteforce(g1, g2)

    def test_multi_component_sorted(self):
        assert canonical_smiles("[Na+].[Cl-]") == canonical_smiles("[Cl-].[Na+]")

    def test_canonical_form_parses(self):
        for s in SMILES_CORPUS:
            parse(canonical_smiles(s))


class TestEquivalence:
    def test_reversed_traversal(self):
        assert equivalent("CCO", "OCC") is True

    def test_different_molecules(self):
        assert equivalent("CCO", "CCN") is False

    def test_garbage_is_false_with_flag(self):
        r = compare("garbage(", "CCO")
        assert r.equivalent is False and r.parse_failed is True
        assert equivalent("garbage(", "CCO") is False

    def test_aromatic_vs_kekule_not_equivalent(self):
        r = compare("c1ccccc1", "C1=CC=CC=C1")
        assert r.equivalent is False
        assert r.relaxed_equivalent is True

    def test_relaxed_does_not_merge_saturation(self):
        # hydrogen counts still separate benzene from cyclohexane
        r = compare("c1ccccc1", "C1CCCCC1")
        assert r.equivalent is False and r.relaxed_equivalent is False

    def test_stereo_ignored_in_equivalence(self):
        r = compare("F/C=C/F", "F/C=C\\F")
        assert r.equivalent is True and r.stereo_stripped is True

    def test_is_equivalence_relation(self):
        pool = [s for s in SMILES_CORPUS]
        # reflexive
        for s in pool:
            assert equivalent(s, s)
        # symmetric + transitive over canonical classes
        for a in pool[:15]:
            for b in pool[:15]:
                assert equivalent(a, b) == equivalent(b, a)
        trio = ("CCO", "C(C)O", "OCC")
        assert equivalent(trio[0], trio[1]) and equivalent(trio[1], trio[2])
        assert equivalent(trio[0], trio[2])


class TestDerivedInfo:
    def test_atom_types_by_atomic_number(self):
        g = parse("FC(F)(F)c1ccc(Br)cc1")
        assert atom_types(g) == ["C", "F", "Br"]

    def test_carbon_count_includes_aromatic(self):
        assert carbon_count(parse("Cc1ccccc1")) == 7

    def test_scaffold_strips_substituents(self):
        assert scaffold(parse("CC(C)c1ccc(O)cc1")) == canonical_smiles("c1ccccc1")

    def test_scaffold_keeps_linkers(self):
        got = scaffold(parse("c1ccccc1Cc1ccccc1"))
        assert got == canonical_smiles("c1ccccc1Cc1ccccc1")

    def test_acyclic_has_no_scaffold(self):
        assert scaffold(parse("CCO")) is None


class TestGraphValidation:
    def test_rejects_self_bond(self):
        with pytest.raises(GraphError):
            MoleculeGraph(atoms=(Atom("C"), Atom("C")), bonds=((0, 0, 1),))

    def test_rejects_duplicate_bond(self):
        with pytest.raises(GraphError, match="duplicate"):
            MoleculeGraph(atoms=(Atom("C"), Atom("C")), bonds=((0, 1, 1), (1, 0, 2)))

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            MoleculeGraph(atoms=(Atom("C"),), bonds=((0, 1, 1),))

    def test_rejects_unknown_element(self):
        with pytest.raises(GraphError, match="unknown element"):
            Atom("Xx")

    def test_rejects_aromatic_halogen(self):
        with pytest.raises(GraphError, match="aromatic"):
            Atom("F", aromatic=True)
