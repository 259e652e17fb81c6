"""Canonical string keys for attributed molecular graphs.

Two molecules get the same key exactly when they are isomorphic as attributed
graphs over (element, formal charge, aromatic flag) atom labels and
(order, aromatic flag) bond labels.  Hydrogen counts and ring flags do not
participate: they are derivable or contextual attributes.

The construction is colour refinement (Weisfeiler-Lehman) followed by an
individualization-refinement search that exhaustively resolves refinement
ties, taking the lexicographically smallest vertex-order encoding over all
leaves of the search tree.
"""

from __future__ import annotations

from .chem import Molecule


class DisconnectedFragmentError(ValueError):
    """Canonical keys are defined for connected graphs only."""


_BOND_CHAR = {(1, False): "-", (2, False): "=", (3, False): "#", (1, True): ":"}


def _atom_token(mol: Molecule, i: int) -> str:
    atom = mol.atoms[i]
    token = atom.element.lower() if atom.aromatic else atom.element
    if atom.formal_charge:
        token += f"{atom.formal_charge:+d}"
    return token


def _bond_char(mol: Molecule, bi: int) -> str:
    bond = mol.bonds[bi]
    return _BOND_CHAR[(bond.order, bond.aromatic)]


def _refine(mol: Molecule, colors: list[int]) -> list[int]:
    """Iterate neighbourhood colour refinement until the partition is stable."""
    n = mol.num_atoms
    while True:
        signatures = []
        for v in range(n):
            nbr_sig = sorted(
                (_bond_char(mol, bi), colors[u]) for u, bi in mol.neighbors(v)
            )
            signatures.append((colors[v], tuple(nbr_sig)))
        ranking = {sig: rank for rank, sig in enumerate(sorted(set(signatures)))}
        new_colors = [ranking[signatures[v]] for v in range(n)]
        if new_colors == colors:
            return colors
        colors = new_colors


def _initial_colors(mol: Molecule) -> list[int]:
    labels = [_atom_token(mol, i) for i in range(mol.num_atoms)]
    ranking = {lab: rank for rank, lab in enumerate(sorted(set(labels)))}
    return [ranking[lab] for lab in labels]


def _encode(mol: Molecule, order: list[int]) -> tuple:
    """Comparable encoding of the graph under the given vertex order."""
    position = {v: pos for pos, v in enumerate(order)}
    atom_part = tuple(_atom_token(mol, v) for v in order)
    bond_part = []
    for bi, bond in enumerate(mol.bonds):
        i, j = position[bond.a], position[bond.b]
        if i > j:
            i, j = j, i
        bond_part.append((i, j, _bond_char(mol, bi)))
    return (atom_part, tuple(sorted(bond_part)))


def _search(mol: Molecule, colors: list[int], best: list) -> None:
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    target = None
    for c in sorted(cells):
        if len(cells[c]) > 1:
            target = cells[c]
            break
    if target is None:
        order = sorted(range(mol.num_atoms), key=lambda v: colors[v])
        candidate = _encode(mol, order)
        if best[0] is None or candidate < best[0]:
            best[0] = candidate
        return
    for v in target:
        # Individualize v within its cell, then re-refine.
        branched = [2 * c for c in colors]
        branched[v] -= 1
        _search(mol, _refine(mol, branched), best)


def canonical_key(mol: Molecule) -> str:
    """Canonical key of a connected molecule or fragment.

    Raises :class:`DisconnectedFragmentError` on disconnected or empty input.
    """
    if mol.num_atoms == 0 or not mol.is_connected():
        raise DisconnectedFragmentError(
            "canonical keys require a connected, non-empty fragment"
        )
    colors = _refine(mol, _initial_colors(mol))
    best: list = [None]
    _search(mol, colors, best)
    atom_part, bond_part = best[0]
    bonds = ".".join(f"{i}{ch}{j}" for i, j, ch in bond_part)
    return ",".join(atom_part) + "|" + bonds
