"""Shared fixtures: the bundled corpus and a few parsed molecules."""

from __future__ import annotations

import pytest

from motifms.chem import parse_smiles
from motifms.fixture import fixture_molecules, fixture_spectra


@pytest.fixture(scope="session")
def corpus_molecules():
    return fixture_molecules()


@pytest.fixture(scope="session")
def corpus_spectra(corpus_molecules):
    return fixture_spectra(corpus_molecules)


@pytest.fixture(scope="session")
def benzene():
    return parse_smiles("c1ccccc1", mol_id="benzene")


@pytest.fixture(scope="session")
def ethanol():
    return parse_smiles("CCO", mol_id="ethanol")


@pytest.fixture(scope="session")
def small_molecules():
    """A compact mixed bag used by property tests."""
    smiles = [
        "C", "CC", "CCO", "OCC", "CC(C)=O", "c1ccccc1", "Cc1ccccc1",
        "c1ccncc1", "C1CCCCC1", "C1CC1C", "CCN(CC)CC", "ClC(Cl)Cl",
        "CS(C)=O", "C[N+](=O)[O-]", "c1ccc2ccccc2c1", "OC(=O)c1ccccc1",
    ]
    return [parse_smiles(s, mol_id=f"sm{i:02d}") for i, s in enumerate(smiles)]
