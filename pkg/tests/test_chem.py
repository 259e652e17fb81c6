"""Parser, molecule graph, and corpus I/O behavior."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from motifms.chem import (
    CorpusError,
    SmilesSyntaxError,
    SmilesWarning,
    ValenceError,
    parse_smiles,
    read_corpus,
    to_smiles,
)
from motifms.canon import canonical_key


class TestParseSmiles:
    """Grammar coverage and structural postconditions."""

    def test_ethanol_counts(self):
        mol = parse_smiles("CCO")
        assert mol.num_atoms == 3
        assert mol.num_bonds == 2
        assert all(b.order == 1 for b in mol.bonds)
        assert mol.ring_count == 0

    def test_benzene_aromatic_ring(self):
        mol = parse_smiles("c1ccccc1")
        assert mol.num_atoms == 6
        assert mol.num_bonds == 6
        assert all(a.aromatic and a.in_ring for a in mol.atoms)
        assert all(b.aromatic and b.in_ring for b in mol.bonds)
        assert mol.ring_count == 1

    def test_ring_membership_flags(self):
        mol = parse_smiles("C1CC1C")
        assert [a.in_ring for a in mol.atoms] == [True, True, True, False]

    @pytest.mark.parametrize("smiles,heavy,hydrogens", [
        ("C", 1, 4),
        ("CC", 2, 6),
        ("CCO", 3, 6),
        ("C=C", 2, 4),
        ("C#N", 2, 1),
        ("c1ccccc1", 6, 6),
        ("c1cc[nH]c1", 5, 5),
        ("C[N+](=O)[O-]", 4, 3),
        ("OC(=O)c1ccccc1", 9, 6),
        ("[CH3][CH2]O", 3, 6),
    ])
    def test_hydrogen_resolution(self, smiles, heavy, hydrogens):
        mol = parse_smiles(smiles)
        assert mol.num_atoms == heavy
        assert mol.total_hydrogens() == hydrogens

    @pytest.mark.parametrize("smiles,charge_index,charge", [
        ("C[N+](=O)[O-]", 1, 1),
        ("C[N+](=O)[O-]", 3, -1),
        ("[NH4+]", 0, 1),
    ])
    def test_formal_charges(self, smiles, charge_index, charge):
        mol = parse_smiles(smiles)
        assert mol.atoms[charge_index].formal_charge == charge

    @pytest.mark.parametrize("smiles", [
        "C1CC",        # unclosed ring
        "C(C",         # unclosed branch
        "C)C",         # stray close
        "[Xx]",        # unknown element
        "",            # empty
        "C..C",        # stray dots
        "%12C",        # dangling ring label
    ])
    def test_syntax_errors(self, smiles):
        with pytest.raises(SmilesSyntaxError):
            parse_smiles(smiles)

    @pytest.mark.parametrize("smiles", [
        "C(C)(C)(C)(C)C",   # pentavalent carbon
        "O=C(=O)=O",        # over-bonded oxygen chain
        "FF(F)F",           # fluorine with 3 bonds
    ])
    def test_valence_errors(self, smiles):
        with pytest.raises(ValenceError):
            parse_smiles(smiles)

    def test_stereo_markers_warn_and_parse(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            mol = parse_smiles("C[C@H](N)C(=O)O")
        assert mol.num_atoms == 6
        assert any(issubclass(w.category, SmilesWarning) for w in caught)

    def test_percent_ring_closure(self):
        mol = parse_smiles("C%12CCCCC%12")
        assert mol.ring_count == 1

    def test_two_letter_elements(self):
        mol = parse_smiles("ClCBr")
        assert [a.element for a in mol.atoms] == ["Cl", "C", "Br"]


class TestMoleculeGraph:
    """Adjacency bookkeeping and induced subgraphs."""

    def test_neighbors_match_bonds(self, small_molecules):
        for mol in small_molecules:
            for bi, bond in enumerate(mol.bonds):
                assert (bond.b, bi) in mol.neighbors(bond.a)
                assert (bond.a, bi) in mol.neighbors(bond.b)
            degree_total = sum(mol.degree(i) for i in range(mol.num_atoms))
            assert degree_total == 2 * mol.num_bonds

    def test_subgraph_keeps_parent_hydrogens(self):
        mol = parse_smiles("CCO")
        piece = mol.subgraph([0, 1])
        assert piece.num_atoms == 2
        assert piece.num_bonds == 1
        # Each carbon keeps its hydrogen count from the parent (3 and 2).
        assert sorted(a.hydrogens for a in piece.atoms) == [2, 3]

    def test_subgraph_ring_flags_recomputed(self):
        mol = parse_smiles("C1CCCCC1")
        path = mol.subgraph([0, 1, 2])
        assert all(not a.in_ring for a in path.atoms)
        assert all(not b.in_ring for b in path.bonds)

    def test_disconnected_subgraph_components(self):
        mol = parse_smiles("CCCCC")
        ends = mol.subgraph([0, 4])
        assert ends.component_count() == 2
        assert not ends.is_connected()


class TestRoundTrip:
    """SMILES writer output re-parses to an isomorphic molecule."""

    @pytest.mark.parametrize("smiles", [
        "CCO", "CC(C)=O", "c1ccccc1", "Cc1ccccn1", "C1CCCCC1",
        "OC(=O)c1ccccc1", "C[N+](=O)[O-]", "ClC(Cl)Cl", "CCBr",
        "c1ccc2ccccc2c1", "COP(=O)(OC)OC", "CS(C)=O",
    ])
    def test_reparse_is_isomorphic(self, smiles):
        mol = parse_smiles(smiles)
        again = parse_smiles(to_smiles(mol))
        assert canonical_key(mol) == canonical_key(again)
        assert again.total_hydrogens() == mol.total_hydrogens()


class TestReadCorpus:
    """Corpus file format handling and diagnostics."""

    def test_reads_fixture_file(self, tmp_path):
        path = tmp_path / "corpus.tsv"
        path.write_text("# comment\nm1\tCCO\n\nm2\tc1ccccc1\n", encoding="utf-8")
        mols = read_corpus(path)
        assert [m.id for m in mols] == ["m1", "m2"]
        assert mols[1].ring_count == 1

    @pytest.mark.parametrize("content,phrase", [
        ("m1 CCO\n", "expected"),
        ("m1\tCCO\nm1\tCC\n", "duplicate"),
        ("m1\t\n", "expected"),
        ("m1\tC1CC\n", "m1"),
    ])
    def test_line_diagnostics(self, tmp_path, content, phrase):
        path = tmp_path / "bad.tsv"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(CorpusError) as err:
            read_corpus(path)
        assert phrase in str(err.value)
        assert err.value.line >= 1
