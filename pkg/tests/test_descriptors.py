"""Masses, path fingerprints, and Murcko scaffolds."""

from __future__ import annotations

import numpy as np
import pytest

from motifms.canon import canonical_key
from motifms.chem import parse_smiles
from motifms.descriptors import (
    ACYCLIC_SCAFFOLD,
    FP_BITS,
    FP_HASH_SEED,
    FP_MAX_PATH_BONDS,
    fnv1a64,
    molecular_weight,
    monoisotopic_mass,
    murcko_scaffold,
    murcko_scaffold_graph,
    path_fingerprint,
)

from _oracles import permute_molecule, reference_fingerprint_bits, reference_fnv1a64


class TestMasses:
    """Average and monoisotopic masses against hand-summed table values."""

    @pytest.mark.parametrize("smiles,expected,tol", [
        ("C", 16.04, 0.01),
        ("c1ccccc1", 78.11, 0.01),
        ("CCO", 46.07, 0.01),
    ])
    def test_molecular_weight(self, smiles, expected, tol):
        assert molecular_weight(parse_smiles(smiles)) == pytest.approx(expected, abs=tol)

    @pytest.mark.parametrize("smiles,expected,tol", [
        ("c1ccccc1", 78.0470, 0.0005),
        ("CO", 32.0262, 0.0005),
        ("C", 16.0313, 0.0005),
    ])
    def test_monoisotopic_mass(self, smiles, expected, tol):
        assert monoisotopic_mass(parse_smiles(smiles)) == pytest.approx(expected, abs=tol)

    def test_mass_sanity_envelope(self, small_molecules):
        for mol in small_molecules:
            mw = molecular_weight(mol)
            mono = monoisotopic_mass(mol)
            assert mw > 0 and mono > 0
            # Chlorine splits 3:1 over M/M+2, so its average mass sits almost
            # half a Dalton above monoisotopic; allow that per heavy atom.
            assert abs(mw - mono) < 0.5 * (mol.num_atoms + mol.total_hydrogens())


class TestPathFingerprint:
    """Hashed linear paths against the independent enumerator."""

    def test_reference_hash_agrees(self):
        for payload in (b"", b"C1C", b"Cl2Br", b"c" * 40):
            assert fnv1a64(payload) == reference_fnv1a64(payload, FP_HASH_SEED)

    def test_single_atom_is_empty(self):
        assert path_fingerprint(parse_smiles("C")).n_bits_set == 0

    @pytest.mark.parametrize("smiles", ["CCO", "CC(C)=O", "c1ccccc1", "ClCBr", "C1CC1C"])
    def test_exact_bits_match_oracle(self, smiles):
        mol = parse_smiles(smiles)
        expected = reference_fingerprint_bits(mol, FP_BITS, FP_MAX_PATH_BONDS, FP_HASH_SEED)
        assert set(path_fingerprint(mol).on_bits()) == expected

    def test_reindexing_invariance(self, small_molecules):
        rng = np.random.default_rng(3)
        for mol in small_molecules:
            reference = path_fingerprint(mol)
            for _ in range(10):
                perm = [int(p) for p in rng.permutation(mol.num_atoms)]
                assert path_fingerprint(permute_molecule(mol, perm)) == reference

    def test_isomeric_inputs_identical(self):
        assert path_fingerprint(parse_smiles("CCO")) == path_fingerprint(parse_smiles("OCC"))


class TestMurckoScaffold:
    """Side-chain stripping down to ring systems plus linkers."""

    def test_toluene_reduces_to_benzene(self):
        assert murcko_scaffold(parse_smiles("Cc1ccccc1")) == canonical_key(parse_smiles("c1ccccc1"))

    def test_benzene_is_fixpoint(self):
        benzene = parse_smiles("c1ccccc1")
        assert murcko_scaffold(benzene) == canonical_key(benzene)

    @pytest.mark.parametrize("smiles", ["CCO", "CC(C)=O", "CCN(CC)CC", "ClC(Cl)Cl"])
    def test_acyclic_reserved_key(self, smiles):
        assert murcko_scaffold(parse_smiles(smiles)) == ACYCLIC_SCAFFOLD

    def test_biphenyl_keeps_linker(self):
        scaffold = murcko_scaffold_graph(parse_smiles("Cc1ccc(-c2ccccc2)cc1"))
        assert scaffold is not None
        assert scaffold.num_atoms == 12  # both rings plus the bridging bond

    def test_idempotent(self, small_molecules):
        for mol in small_molecules:
            scaffold = murcko_scaffold_graph(mol)
            if scaffold is None:
                assert murcko_scaffold(mol) == ACYCLIC_SCAFFOLD
            else:
                assert murcko_scaffold(scaffold) == canonical_key(scaffold)
