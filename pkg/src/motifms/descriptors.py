"""Whole-molecule descriptors: masses, path fingerprints, Murcko scaffolds."""

from __future__ import annotations

import numpy as np

from .canon import canonical_key
from .chem import Molecule
from .elements import AVERAGE_WEIGHT, monoisotopic_mass_of

FP_BITS = 2048
FP_MAX_PATH_BONDS = 7
FP_HASH_SEED = 0x5D

# Reserved scaffold key for ring-free molecules.
ACYCLIC_SCAFFOLD = "ACYCLIC"

_H_AVG = AVERAGE_WEIGHT["H"]
_H_MONO = monoisotopic_mass_of("H")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def molecular_weight(mol: Molecule) -> float:
    """Average molecular weight including implicit hydrogens."""
    total = sum(AVERAGE_WEIGHT[atom.element] for atom in mol.atoms)
    return total + mol.total_hydrogens() * _H_AVG


def monoisotopic_mass(mol: Molecule) -> float:
    """Sum of most-abundant-isotope masses including implicit hydrogens."""
    total = sum(monoisotopic_mass_of(atom.element) for atom in mol.atoms)
    return total + mol.total_hydrogens() * _H_MONO


def fnv1a64(data: bytes, seed: int = FP_HASH_SEED) -> int:
    """Seeded 64-bit FNV-1a hash; platform-independent by construction."""
    h = _FNV_OFFSET ^ seed
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class Fingerprint:
    """A 2048-bit path fingerprint."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        if bits.shape != (FP_BITS,):
            raise ValueError(f"fingerprint must have {FP_BITS} bits")
        self.bits = bits.astype(bool)

    @property
    def n_bits_set(self) -> int:
        return int(self.bits.sum())

    def on_bits(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.bits))

    def as_float_array(self) -> np.ndarray:
        return self.bits.astype(np.float64)

    def __eq__(self, other) -> bool:
        return isinstance(other, Fingerprint) and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())


_BOND_ORDER_CHAR = {(1, False): b"1", (2, False): b"2", (3, False): b"3", (1, True): b"a"}


def _path_bytes(mol: Molecule, atom_path: list[int], bond_path: list[int]) -> bytes:
    parts = [mol.atoms[atom_path[0]].element.encode()]
    for atom, bi in zip(atom_path[1:], bond_path):
        bond = mol.bonds[bi]
        parts.append(_BOND_ORDER_CHAR[(bond.order, bond.aromatic)])
        parts.append(mol.atoms[atom].element.encode())
    return b"".join(parts)


def _reverse_path_bytes(mol: Molecule, atom_path: list[int], bond_path: list[int]) -> bytes:
    return _path_bytes(mol, atom_path[::-1], bond_path[::-1])


def path_fingerprint(mol: Molecule) -> Fingerprint:
    """Hash all simple bond paths of length 1..7 into a 2048-bit vector.

    Each path contributes the seeded 64-bit hash of its (element, bond order)
    sequence, read in whichever direction compares smaller so the fingerprint
    is independent of atom numbering.  Single atoms have no paths and produce
    the all-zero fingerprint.
    """
    bits = np.zeros(FP_BITS, dtype=bool)

    def walk(atom_path: list[int], bond_path: list[int], visited: set[int]) -> None:
        current = atom_path[-1]
        for other, bi in mol.neighbors(current):
            if other in visited:
                continue
            atom_path.append(other)
            bond_path.append(bi)
            visited.add(other)
            forward = _path_bytes(mol, atom_path, bond_path)
            backward = _reverse_path_bytes(mol, atom_path, bond_path)
            bits[fnv1a64(min(forward, backward)) % FP_BITS] = True
            if len(bond_path) < FP_MAX_PATH_BONDS:
                walk(atom_path, bond_path, visited)
            visited.remove(other)
            atom_path.pop()
            bond_path.pop()

    for start in range(mol.num_atoms):
        walk([start], [], {start})
    return Fingerprint(bits)


def murcko_scaffold_graph(mol: Molecule) -> Molecule | None:
    """The molecule's ring framework, or None for ring-free molecules.

    Degree-one atoms outside rings are deleted repeatedly until none remain,
    leaving the ring systems and the linkers connecting them.
    """
    if mol.ring_count == 0:
        return None
    keep = set(range(mol.num_atoms))
    while True:
        degree = {i: 0 for i in keep}
        for bond in mol.bonds:
            if bond.a in keep and bond.b in keep:
                degree[bond.a] += 1
                degree[bond.b] += 1
        removable = [
            i for i in keep if not mol.atoms[i].in_ring and degree[i] == 1
        ]
        if not removable:
            break
        keep.difference_update(removable)
    return mol.subgraph(keep)


def murcko_scaffold(mol: Molecule) -> str:
    """Canonical key of the ring framework, or ``"ACYCLIC"`` with no rings."""
    graph = murcko_scaffold_graph(mol)
    if graph is None:
        return ACYCLIC_SCAFFOLD
    return canonical_key(graph)
