"""A bundled 64-molecule corpus with deterministic reference spectra.

The corpus mixes aromatic scaffolds (benzenes, pyridines, furans,
thiophenes, fused systems), saturated rings, and acyclic chains, covering
charges, halogens, sulfur and phosphorus.  Each reference spectrum is
derived from the molecule itself: the same ion/isotope/cleavage expansion
used for motifs, rescaled to a base peak of 999.  That makes the targets a
pure function of structure, so training runs are reproducible and small
models can overfit them.
"""

from __future__ import annotations

import os
from itertools import combinations

import numpy as np

from .chem import Molecule, parse_smiles
from .descriptors import monoisotopic_mass
from .motif_spectra import cleavage_fragments
from .spectra import M_MAX, Spectrum, mz_bin, normalize, spectrum_to_peaklist, write_msp_file

FIXTURE_SMILES: tuple[tuple[str, str], ...] = (
    ("fix000", "c1ccccc1"),
    ("fix001", "Cc1ccccc1"),
    ("fix002", "CCc1ccccc1"),
    ("fix003", "Oc1ccccc1"),
    ("fix004", "Nc1ccccc1"),
    ("fix005", "O=Cc1ccccc1"),
    ("fix006", "OC(=O)c1ccccc1"),
    ("fix007", "Clc1ccccc1"),
    ("fix008", "Fc1ccccc1"),
    ("fix009", "COc1ccccc1"),
    ("fix010", "C=Cc1ccccc1"),
    ("fix011", "N#Cc1ccccc1"),
    ("fix012", "c1ccncc1"),
    ("fix013", "Cc1ccccn1"),
    ("fix014", "Cc1cccnc1"),
    ("fix015", "Nc1ccncc1"),
    ("fix016", "c1ccoc1"),
    ("fix017", "Cc1ccco1"),
    ("fix018", "O=Cc1ccco1"),
    ("fix019", "c1ccsc1"),
    ("fix020", "Cc1cccs1"),
    ("fix021", "O=Cc1cccs1"),
    ("fix022", "c1cc[nH]c1"),
    ("fix023", "Cn1cccc1"),
    ("fix024", "C1CCCCC1"),
    ("fix025", "OC1CCCCC1"),
    ("fix026", "O=C1CCCCC1"),
    ("fix027", "C1CCCC1"),
    ("fix028", "OC1CCCC1"),
    ("fix029", "CC1CCCC1"),
    ("fix030", "C1CCOC1"),
    ("fix031", "CC1CCCO1"),
    ("fix032", "c1ccc2ccccc2c1"),
    ("fix033", "c1ccc(-c2ccccc2)cc1"),
    ("fix034", "c1ccc2ncccc2c1"),
    ("fix035", "c1ccc2[nH]ccc2c1"),
    ("fix036", "c1ccc2occc2c1"),
    ("fix037", "c1ccc2sccc2c1"),
    ("fix038", "CCO"),
    ("fix039", "CCCO"),
    ("fix040", "CCCCC"),
    ("fix041", "CC(C)=O"),
    ("fix042", "CCC(C)=O"),
    ("fix043", "CC(=O)O"),
    ("fix044", "CCOC(C)=O"),
    ("fix045", "CCOCC"),
    ("fix046", "CCCC"),
    ("fix047", "CCCCCC"),
    ("fix048", "CC#N"),
    ("fix049", "CCN"),
    ("fix050", "CCN(CC)CC"),
    ("fix051", "CS(C)=O"),
    ("fix052", "CSC"),
    ("fix053", "OCCO"),
    ("fix054", "OCC(O)CO"),
    ("fix055", "ClC(Cl)Cl"),
    ("fix056", "ClCCl"),
    ("fix057", "CCBr"),
    ("fix058", "CI"),
    ("fix059", "COP(=O)(OC)OC"),
    ("fix060", "CN(C)C"),
    ("fix061", "NC(N)=O"),
    ("fix062", "CCCCCCC"),
    ("fix063", "C[N+](=O)[O-]"),
)


def fixture_molecules() -> list[Molecule]:
    return [parse_smiles(smiles, mol_id=mol_id) for mol_id, smiles in FIXTURE_SMILES]


SHOULDER_FRACTION = 0.15
PIECE_INTENSITY = 0.8
CLEAVAGE_INTENSITY = 0.5
ION_CLUSTER_INTENSITY = 0.4
ION_CLUSTER_SIGMA = 1.0
ION_CLUSTER_HALF_WIDTH = 2


def _small_piece_bins(mol: Molecule) -> dict[int, int]:
    """Mass bins of every bonded pair and every three-atom path.

    Electron impact shatters molecules into small pieces, so the low-mass
    region mirrors local composition: C-C pairs of an alkane sit at
    different masses than the C-O and C-N pairs of an ether or amine.
    Atoms keep the hydrogen counts they carry in the parent, and each
    occurrence counts once, so the result is a pure function of structure
    that differs between molecules of different composition.
    """
    counts: dict[int, int] = {}
    pieces: list[list[int]] = [[bond.a, bond.b] for bond in mol.bonds]
    for center in range(mol.num_atoms):
        adjacent = [other for other, _ in mol.neighbors(center)]
        for left, right in combinations(sorted(adjacent), 2):
            pieces.append([left, center, right])
    for members in pieces:
        k = mz_bin(monoisotopic_mass(mol.subgraph(members)))
        if 1 <= k <= M_MAX:
            counts[k] = counts.get(k, 0) + 1
    return counts


def reference_spectrum(mol: Molecule) -> Spectrum:
    """The deterministic target for one molecule, base peak scaled to 999.

    Three additive components mimic an electron-impact spectrum: a broad
    molecular-ion cluster centered on the monoisotopic mass, single-bond
    cleavage fragments, and the small-piece profile of bonded pairs and
    three-atom paths.  Hydrogen gain/loss shoulders one bin to either side
    finish the shape.  Everything is a pure function of the structure, so
    the targets are reproducible and carry composition-specific detail.
    """
    spec = np.zeros(M_MAX, dtype=np.float64)
    ion = mz_bin(monoisotopic_mass(mol))
    for offset in range(-ION_CLUSTER_HALF_WIDTH, ION_CLUSTER_HALF_WIDTH + 1):
        k = ion + offset
        if 1 <= k <= M_MAX:
            spec[k - 1] += ION_CLUSTER_INTENSITY * np.exp(-0.5 * (offset / ION_CLUSTER_SIGMA) ** 2)
    for fragment in cleavage_fragments(mol):
        k = mz_bin(monoisotopic_mass(fragment))
        if 1 <= k <= M_MAX:
            spec[k - 1] += CLEAVAGE_INTENSITY
    pieces = _small_piece_bins(mol)
    if pieces:
        heaviest = max(pieces.values())
        for k, count in pieces.items():
            spec[k - 1] += PIECE_INTENSITY * count / heaviest
    shoulders = np.zeros_like(spec)
    shoulders[:-1] += SHOULDER_FRACTION * spec[1:]
    shoulders[1:] += SHOULDER_FRACTION * spec[:-1]
    return normalize(Spectrum(spec + shoulders), mode="basepeak")


def fixture_spectra(molecules=None) -> dict[str, Spectrum]:
    if molecules is None:
        molecules = fixture_molecules()
    return {mol.id: reference_spectrum(mol) for mol in molecules}


def write_fixture_files(directory) -> tuple[str, str]:
    """Write corpus TSV and spectra MSP files; returns their paths."""
    os.makedirs(directory, exist_ok=True)
    corpus_path = os.path.join(directory, "fixture_corpus.tsv")
    msp_path = os.path.join(directory, "fixture_spectra.msp")
    with open(corpus_path, "w", encoding="utf-8") as handle:
        handle.write("# bundled fixture corpus\n")
        for mol_id, smiles in FIXTURE_SMILES:
            handle.write(f"{mol_id}\t{smiles}\n")
    molecules = fixture_molecules()
    records = [
        spectrum_to_peaklist(reference_spectrum(mol), name=mol.id, compound_id=mol.id)
        for mol in molecules
    ]
    write_msp_file(records, msp_path)
    return corpus_path, msp_path
