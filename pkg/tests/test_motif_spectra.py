"""Motif reference spectra: isotopes, cleavage fragments, prior matrix."""

from __future__ import annotations

import numpy as np
import pytest

from motifms.canon import canonical_key
from motifms.chem import parse_smiles
from motifms.descriptors import monoisotopic_mass
from motifms.mining import mine_vocabulary
from motifms.motif_spectra import (
    FRAGMENT_INTENSITY,
    MAX_FRAGMENTS,
    build_motif_spectrum,
    cleavage_fragments,
    isotope_pattern,
    load_motif_matrix,
    motif_spectrum_matrix,
    save_motif_matrix,
)
from motifms.spectra import M_MAX, mz_bin

from _oracles import isotope_shift_mc


def _formula(mol):
    counts: dict[str, int] = {}
    for atom in mol.atoms:
        counts[atom.element] = counts.get(atom.element, 0) + 1
    counts["H"] = counts.get("H", 0) + mol.total_hydrogens()
    return {el: n for el, n in counts.items() if n}


class TestIsotopePattern:
    """Multinomial expansion against a Monte-Carlo oracle."""

    def test_benzene_m_plus_one(self, benzene):
        pattern = dict(isotope_pattern(benzene))
        assert pattern[0] == 1.0
        assert pattern[1] == pytest.approx(0.0646, abs=0.005)

    def test_single_carbon(self):
        pattern = dict(isotope_pattern(parse_smiles("[C]")))
        assert pattern[1] == pytest.approx(0.0107, abs=0.0005)

    def test_fluorine_single_isotope(self):
        # Fluorine is monoisotopic; CF4-like pieces only shift through carbon.
        pattern = dict(isotope_pattern(parse_smiles("FC(F)(F)F")))
        assert pattern[1] == pytest.approx(0.0107, abs=0.0005)

    @pytest.mark.parametrize("smiles", ["c1ccccc1", "CCO", "CS(C)=O", "ClCCl"])
    def test_matches_monte_carlo(self, smiles):
        mol = parse_smiles(smiles)
        pattern = dict(isotope_pattern(mol))
        rng = np.random.default_rng(41)
        mc = isotope_shift_mc(_formula(mol), trials=200_000, rng=rng)
        for shift in (1, 2, 3):
            expected = mc[shift] / mc[0]
            assert pattern.get(shift, 0.0) == pytest.approx(expected, abs=0.01)

    def test_nonincreasing_without_m_plus_two_elements(self, small_molecules):
        # S, Cl, Br carry dominant M+2 isotopes that break monotonic decay.
        for mol in small_molecules:
            if any(a.element in ("S", "Cl", "Br", "I") for a in mol.atoms):
                continue
            pattern = dict(isotope_pattern(mol))
            tail = [pattern.get(s, 0.0) for s in (1, 2, 3)]
            assert tail[0] >= tail[1] >= tail[2]


class TestCleavageFragments:
    """Single-bond cleavage enumeration."""

    def test_ethanol_fragment_keys(self, ethanol):
        keys = {canonical_key(f) for f in cleavage_fragments(ethanol)}
        expected = {
            canonical_key(parse_smiles(s)) for s in ("CC", "CO", "C", "O")
        }
        assert keys == expected

    def test_benzene_has_no_cleavable_bonds(self, benzene):
        assert cleavage_fragments(benzene) == []

    def test_ethane_deduplicates_symmetric_sides(self):
        fragments = cleavage_fragments(parse_smiles("CC"))
        assert len(fragments) == 1
        assert fragments[0].num_atoms == 1

    def test_fragments_keep_parent_hydrogens(self):
        fragments = cleavage_fragments(parse_smiles("CCO"))
        methyls = [f for f in fragments if f.num_atoms == 1 and f.atoms[0].element == "C"]
        assert methyls and methyls[0].atoms[0].hydrogens == 3

    def test_cap_prefers_heaviest(self):
        mol = parse_smiles("CCCCCCCCCCCC")  # 11 cuts, 20+ distinct sides
        fragments = cleavage_fragments(mol)
        assert len(fragments) <= MAX_FRAGMENTS
        masses = sorted(monoisotopic_mass(f) for f in fragments)
        # The retained set is the heaviest of the deduplicated candidates:
        # for a 12-carbon chain these are the 8 largest chain pieces.
        assert masses[0] > monoisotopic_mass(parse_smiles("CCC"))


class TestMotifSpectrum:
    """Spectrum assembly and support bounds."""

    def test_benzene_peaks(self, benzene):
        spectrum = build_motif_spectrum(benzene).spectrum
        nonzero = dict(spectrum.nonzero_bins())
        ion = mz_bin(monoisotopic_mass(benzene))
        assert ion == 78
        assert set(nonzero) <= {78, 79, 80, 81}
        assert nonzero[79] / nonzero[78] == pytest.approx(0.0646, abs=0.005)

    def test_ethane_fragment_bin(self):
        spectrum = build_motif_spectrum(parse_smiles("CC")).spectrum
        nonzero = dict(spectrum.nonzero_bins())
        assert 30 in nonzero  # molecular ion
        assert 15 in nonzero  # CH3 side
        assert nonzero[15] / nonzero[30] == pytest.approx(FRAGMENT_INTENSITY, abs=0.01)

    def test_support_bound(self, small_molecules):
        for mol in small_molecules:
            spectrum = build_motif_spectrum(mol).spectrum
            top = mz_bin(monoisotopic_mass(mol)) + 3
            populated = [k for k, _ in spectrum.nonzero_bins()]
            assert max(populated) <= top

    def test_unit_norm(self, benzene):
        spectrum = build_motif_spectrum(benzene).spectrum
        assert np.linalg.norm(spectrum.bins) == pytest.approx(1.0, abs=1e-12)


class TestMatrix:
    """The |V| x M_MAX prior matrix and its binary file format."""

    def test_rows_match_single_builds(self, corpus_molecules):
        vocab = mine_vocabulary(corpus_molecules[:30], 8)
        matrix = motif_spectrum_matrix(vocab)
        assert matrix.shape == (len(vocab), M_MAX)
        for row, entry in zip(matrix, vocab.entries):
            expected = build_motif_spectrum(entry.fragment).spectrum.bins
            assert np.allclose(row, expected, atol=1e-7)
            norm = np.linalg.norm(row)
            assert norm == pytest.approx(1.0, abs=1e-6) or norm == 0.0

    def test_round_trip(self, tmp_path, corpus_molecules):
        vocab = mine_vocabulary(corpus_molecules[:30], 8)
        matrix = motif_spectrum_matrix(vocab)
        path = tmp_path / "prior.bin"
        save_motif_matrix(matrix, path)
        back = load_motif_matrix(path)
        assert back.dtype == matrix.dtype
        assert np.array_equal(back, matrix)
