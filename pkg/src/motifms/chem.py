"""Molecular graphs and a SMILES reader/writer for a fixed organic subset.

The accepted language covers bare organic-subset atoms (``B C N O P S F Cl Br
I``), aromatic lowercase forms, bracket atoms with hydrogen counts and formal
charges, branches, ring closures (single digits and ``%nn``), and the bond
symbols ``- = # :``.  Stereo markers (``@``, ``/``, ``\\``) are accepted and
ignored with a warning.  Isotope labels and dot-disconnected input are
rejected.

Aromaticity is purely notational: an atom or bond is aromatic exactly when the
input writes it that way.  No electron counting is performed.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace

from .elements import (
    AROMATIC_ELEMENTS,
    BASE_VALENCES,
    ELEMENTS,
    ORGANIC_SUBSET,
    allowed_valences,
)


class SmilesError(ValueError):
    """Base class for molecule construction failures."""


class SmilesSyntaxError(SmilesError):
    """Malformed SMILES text: bad characters, unbalanced rings or brackets."""


class ValenceError(SmilesError):
    """An atom's bonds plus hydrogens exceed every allowed valence level."""


class CorpusError(ValueError):
    """A corpus file line could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SmilesWarning(UserWarning):
    """Emitted when accepted-but-ignored notation (stereo) is encountered."""


# Valence contribution of a bond: order for plain bonds, 1.5 for aromatic.
_BOND_SYMBOL_ORDER = {"-": 1, "=": 2, "#": 3}
_ORDER_SYMBOL = {1: "-", 2: "=", 3: "#"}

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<element>[A-Z][a-z]?|[bcnops])"
    r"(?P<chiral>@{1,2})?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\d+|-\d+|\++|-+)?$"
)


@dataclass(frozen=True)
class Atom:
    """One heavy atom.  ``hydrogens`` is the resolved total hydrogen count."""

    element: str
    formal_charge: int = 0
    hydrogens: int = 0
    aromatic: bool = False
    in_ring: bool = False


@dataclass(frozen=True)
class Bond:
    """An undirected bond between atom indices ``a`` and ``b`` (a < b)."""

    a: int
    b: int
    order: int = 1
    aromatic: bool = False
    in_ring: bool = False

    def valence_order(self) -> float:
        return 1.5 if self.aromatic else float(self.order)


class Molecule:
    """An immutable attributed graph of heavy atoms."""

    __slots__ = ("id", "smiles", "atoms", "bonds", "_neighbors")

    def __init__(self, atoms, bonds, mol_id: str = ""):
        self.id = mol_id
        self.smiles = ""
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        nbrs: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bi, bond in enumerate(self.bonds):
            nbrs[bond.a].append((bond.b, bi))
            nbrs[bond.b].append((bond.a, bi))
        self._neighbors = tuple(tuple(sorted(n)) for n in nbrs)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def neighbors(self, i: int) -> tuple[tuple[int, int], ...]:
        """Pairs ``(other_atom, bond_index)`` sorted by atom index."""
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self._neighbors[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        for other, bi in self._neighbors[i]:
            if other == j:
                return self.bonds[bi]
        return None

    def component_count(self) -> int:
        seen = [False] * self.num_atoms
        count = 0
        for start in range(self.num_atoms):
            if seen[start]:
                continue
            count += 1
            stack = [start]
            seen[start] = True
            while stack:
                cur = stack.pop()
                for other, _ in self._neighbors[cur]:
                    if not seen[other]:
                        seen[other] = True
                        stack.append(other)
        return count

    def is_connected(self) -> bool:
        return self.num_atoms > 0 and self.component_count() == 1

    @property
    def ring_count(self) -> int:
        """Cyclomatic number: the size of any smallest cycle basis."""
        return self.num_bonds - self.num_atoms + self.component_count()

    def total_hydrogens(self) -> int:
        return sum(a.hydrogens for a in self.atoms)

    def subgraph(self, atom_indices, mol_id: str | None = None) -> "Molecule":
        """Induced subgraph on ``atom_indices`` with ring flags recomputed.

        Atom attributes (element, charge, hydrogens, aromatic flags) are
        inherited unchanged, so fragments keep the hydrogen counts their atoms
        had in the parent molecule.
        """
        order = sorted(set(atom_indices))
        index_of = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[i] for i in order]
        bonds = []
        for bond in self.bonds:
            if bond.a in index_of and bond.b in index_of:
                a, b = index_of[bond.a], index_of[bond.b]
                if a > b:
                    a, b = b, a
                bonds.append(replace(bond, a=a, b=b))
        new_id = self.id if mol_id is None else mol_id
        return _with_ring_flags(atoms, bonds, new_id)


def _bridges(n_atoms: int, bonds) -> set[int]:
    """Indices of bridge bonds, found with an iterative low-link DFS."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for bi, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, bi))
        adj[bond.b].append((bond.a, bi))
    visited = [False] * n_atoms
    disc = [0] * n_atoms
    low = [0] * n_atoms
    bridges: set[int] = set()
    timer = 0
    for root in range(n_atoms):
        if visited[root]:
            continue
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]
        while stack:
            node, parent_bond, ptr = stack.pop()
            if ptr == 0:
                visited[node] = True
                disc[node] = low[node] = timer
                timer += 1
            if ptr < len(adj[node]):
                stack.append((node, parent_bond, ptr + 1))
                other, bi = adj[node][ptr]
                if bi == parent_bond:
                    continue
                if visited[other]:
                    low[node] = min(low[node], disc[other])
                else:
                    stack.append((other, bi, 0))
            elif parent_bond != -1:
                # All children of `node` are done; propagate its low-link.
                for other, bi in adj[node]:
                    if bi == parent_bond:
                        parent = other
                        break
                low[parent] = min(low[parent], low[node])
                if low[node] > disc[parent]:
                    bridges.add(parent_bond)
    return bridges


def _with_ring_flags(atoms, bonds, mol_id: str) -> Molecule:
    """Build a Molecule with in_ring flags derived from bridge detection."""
    bridge_set = _bridges(len(atoms), bonds)
    flagged_bonds = []
    ring_atoms: set[int] = set()
    for bi, bond in enumerate(bonds):
        in_ring = bi not in bridge_set
        flagged_bonds.append(replace(bond, in_ring=in_ring))
        if in_ring:
            ring_atoms.add(bond.a)
            ring_atoms.add(bond.b)
    flagged_atoms = [
        replace(atom, in_ring=(i in ring_atoms)) for i, atom in enumerate(atoms)
    ]
    return Molecule(flagged_atoms, flagged_bonds, mol_id)


class _PendingAtom:
    __slots__ = ("element", "aromatic", "charge", "explicit_h", "bracket")

    def __init__(self, element, aromatic, charge=0, explicit_h=None, bracket=False):
        self.element = element
        self.aromatic = aromatic
        self.charge = charge
        self.explicit_h = explicit_h
        self.bracket = bracket


def _parse_bracket(body: str, pos: int) -> _PendingAtom:
    match = _BRACKET_RE.match(body)
    if match is None:
        raise SmilesSyntaxError(f"malformed bracket atom [{body}] at position {pos}")
    if match.group("isotope"):
        raise SmilesSyntaxError(f"isotope labels are not supported: [{body}]")
    symbol = match.group("element")
    aromatic = symbol.islower()
    element = symbol.capitalize() if aromatic else symbol
    if element not in ELEMENTS:
        raise SmilesSyntaxError(f"unknown element {symbol!r} at position {pos}")
    if element == "H":
        raise SmilesSyntaxError(
            "explicit hydrogen atoms are not supported; use bracket H counts"
        )
    if aromatic and element not in AROMATIC_ELEMENTS:
        raise SmilesSyntaxError(f"element {element} cannot be aromatic")
    if match.group("chiral"):
        warnings.warn(
            f"ignoring chirality marker in [{body}]", SmilesWarning, stacklevel=3
        )
    hcount = match.group("hcount")
    if hcount is None:
        explicit_h = 0
    elif hcount == "H":
        explicit_h = 1
    else:
        explicit_h = int(hcount[1:])
    charge_text = match.group("charge")
    if charge_text is None:
        charge = 0
    elif charge_text in {"+", "-"} or set(charge_text) in ({"+"}, {"-"}):
        charge = len(charge_text) * (1 if charge_text[0] == "+" else -1)
    else:
        charge = int(charge_text)
    return _PendingAtom(element, aromatic, charge, explicit_h, bracket=True)


def parse_smiles(text: str, mol_id: str = "", strict_aromaticity: bool = True) -> Molecule:
    """Parse one connected SMILES string into a :class:`Molecule`.

    With ``strict_aromaticity`` (the default) an aromatic atom or an explicit
    ``:`` bond that ends up outside every ring is a syntax error.  The
    permissive mode exists so that serialized motif fragments, which may be
    partial slices of aromatic rings, round-trip exactly.

    Raises :class:`SmilesSyntaxError` for malformed text and
    :class:`ValenceError` when an atom exceeds every allowed valence.
    """
    if not text:
        raise SmilesSyntaxError("empty SMILES string")
    atoms: list[_PendingAtom] = []
    # Bond records hold (a, b, symbol) where symbol is an explicit bond
    # character or None for an implicit bond.
    bond_records: list[tuple[int, int, str | None]] = []
    prev: int | None = None
    pending: str | None = None
    branch_stack: list[int] = []
    ring_open: dict[int, tuple[int, str | None]] = {}

    def add_atom(atom: _PendingAtom) -> None:
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            bond_records.append((prev, idx, pending))
        elif pending is not None:
            raise SmilesSyntaxError("bond symbol before the first atom")
        pending = None
        prev = idx

    def close_ring(number: int, pos: int) -> None:
        nonlocal pending
        if prev is None:
            raise SmilesSyntaxError(f"ring closure before any atom at position {pos}")
        if number in ring_open:
            partner, opening_bond = ring_open.pop(number)
            if partner == prev:
                raise SmilesSyntaxError(f"ring bond {number} closes on its own atom")
            if opening_bond and pending and opening_bond != pending:
                raise SmilesSyntaxError(
                    f"conflicting bond symbols on ring closure {number}"
                )
            for a, b, _ in bond_records:
                if {a, b} == {partner, prev}:
                    raise SmilesSyntaxError(
                        f"duplicate bond between atoms {partner} and {prev}"
                    )
            bond_records.append((partner, prev, opening_bond or pending))
        else:
            ring_open[number] = (prev, pending)
        pending = None

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesSyntaxError(f"unclosed bracket at position {i}")
            add_atom(_parse_bracket(text[i + 1 : end], i))
            i = end + 1
        elif text[i : i + 2] in ("Cl", "Br"):
            add_atom(_PendingAtom(text[i : i + 2], aromatic=False))
            i += 2
        elif ch in "BCNOPSFI":
            add_atom(_PendingAtom(ch, aromatic=False))
            i += 1
        elif ch in "bcnops":
            add_atom(_PendingAtom(ch.upper(), aromatic=True))
            i += 1
        elif ch in "-=#:":
            if pending is not None:
                raise SmilesSyntaxError(f"doubled bond symbol at position {i}")
            if prev is None:
                raise SmilesSyntaxError("bond symbol before the first atom")
            pending = ch
            i += 1
        elif ch in "/\\":
            warnings.warn(
                f"ignoring bond direction marker at position {i}",
                SmilesWarning,
                stacklevel=2,
            )
            if pending is not None:
                raise SmilesSyntaxError(f"doubled bond symbol at position {i}")
            pending = "-"
            i += 1
        elif ch.isdigit():
            close_ring(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                raise SmilesSyntaxError(f"malformed %nn ring closure at position {i}")
            close_ring(int(text[i + 1 : i + 3]), i)
            i += 3
        elif ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch opened before any atom")
            if pending is not None:
                raise SmilesSyntaxError(f"bond symbol before '(' at position {i}")
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesSyntaxError(f"unmatched ')' at position {i}")
            if pending is not None:
                raise SmilesSyntaxError(f"dangling bond symbol before ')' at position {i}")
            prev = branch_stack.pop()
            i += 1
        elif ch == ".":
            raise SmilesSyntaxError("disconnected (dot-separated) input is not supported")
        else:
            raise SmilesSyntaxError(f"unexpected character {ch!r} at position {i}")

    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol at end of input")
    if branch_stack:
        raise SmilesSyntaxError("unclosed branch: missing ')'")
    if ring_open:
        numbers = ", ".join(str(k) for k in sorted(ring_open))
        raise SmilesSyntaxError(f"unclosed ring bond(s): {numbers}")
    if not atoms:
        raise SmilesSyntaxError("no atoms in SMILES string")

    mol = _assemble(atoms, bond_records, mol_id, strict_aromaticity)
    mol.smiles = text.strip()
    return mol


def _assemble(pending_atoms, bond_records, mol_id, strict_aromaticity) -> Molecule:
    """Resolve bond orders, ring flags, aromaticity, and hydrogen counts."""
    raw_bonds = []
    for a, b, symbol in bond_records:
        if a > b:
            a, b = b, a
        if symbol == ":":
            if not (pending_atoms[a].aromatic and pending_atoms[b].aromatic):
                raise SmilesSyntaxError(
                    f"':' bond between atoms {a} and {b} requires aromatic atoms"
                )
            raw_bonds.append(Bond(a, b, order=1, aromatic=True))
        elif symbol is None:
            both_aromatic = pending_atoms[a].aromatic and pending_atoms[b].aromatic
            raw_bonds.append(Bond(a, b, order=1, aromatic=both_aromatic))
        else:
            raw_bonds.append(Bond(a, b, order=_BOND_SYMBOL_ORDER[symbol]))

    bridge_set = _bridges(len(pending_atoms), raw_bonds)
    bonds = []
    ring_atoms: set[int] = set()
    for bi, bond in enumerate(raw_bonds):
        in_ring = bi not in bridge_set
        aromatic = bond.aromatic
        if aromatic and not in_ring:
            symbol_was_explicit = bond_records[bi][2] == ":"
            if strict_aromaticity and symbol_was_explicit:
                raise SmilesSyntaxError(
                    f"aromatic bond between atoms {bond.a} and {bond.b} is not in a ring"
                )
            if not symbol_was_explicit:
                # Implicit bond between two aromatic atoms outside any ring,
                # e.g. the biphenyl linker: resolve to a single bond.
                aromatic = False
        bonds.append(replace(bond, aromatic=aromatic, in_ring=in_ring))
        if in_ring:
            ring_atoms.add(bond.a)
            ring_atoms.add(bond.b)

    atoms = []
    for idx, pa in enumerate(pending_atoms):
        in_ring = idx in ring_atoms
        if pa.aromatic and not in_ring and strict_aromaticity:
            raise SmilesSyntaxError(f"aromatic atom at index {idx} is not in a ring")
        incident = [b for b in bonds if idx in (b.a, b.b)]
        hydrogens = _resolve_hydrogens(pa, incident, idx)
        atoms.append(
            Atom(
                element=pa.element,
                formal_charge=pa.charge,
                hydrogens=hydrogens,
                aromatic=pa.aromatic,
                in_ring=in_ring,
            )
        )
    return Molecule(atoms, bonds, mol_id)


def _resolve_hydrogens(pa: _PendingAtom, incident_bonds, idx: int) -> int:
    """Hydrogen count for one atom, with the valence legality check.

    Aromatic atoms reserve one valence unit for the ring pi system: every
    aromatic bond counts 1 toward the sigma framework and bare aromatic atoms
    fill up to ``default - (bonds + 1)`` hydrogens, which gives benzene
    carbons one hydrogen and pyridine nitrogens none.
    """
    allowed = allowed_valences(pa.element, pa.charge)
    max_allowed = max(allowed)
    bond_sum = sum(1 if b.aromatic else b.order for b in incident_bonds)
    if pa.aromatic:
        capacity = max_allowed + 1
        if pa.bracket:
            h = pa.explicit_h or 0
            if bond_sum + h > capacity:
                raise ValenceError(
                    f"atom {idx} ({pa.element}): {bond_sum} bonds plus {h} hydrogens "
                    f"exceed valence {capacity}"
                )
            return h
        h = max(0, min(allowed) - (bond_sum + 1))
        if bond_sum > capacity:
            raise ValenceError(
                f"aromatic atom {idx} ({pa.element}) has {bond_sum} bonds, "
                f"more than valence {capacity} allows"
            )
        return h
    if pa.bracket:
        h = pa.explicit_h or 0
        if bond_sum + h > max_allowed:
            raise ValenceError(
                f"atom {idx} ({pa.element}{pa.charge:+d}): {bond_sum} bonds plus "
                f"{h} hydrogens exceed valence {max_allowed}"
            )
        return h
    for level in allowed:
        if bond_sum <= level:
            return level - bond_sum
    raise ValenceError(
        f"atom {idx} ({pa.element}) has bond order sum {bond_sum}, "
        f"more than valence {max_allowed} allows"
    )


def _implied_hydrogens(element: str, aromatic: bool, bond_sum: int) -> int | None:
    """Hydrogen count the parser would infer for a bare atom, or None."""
    allowed = BASE_VALENCES[element]
    if aromatic:
        if bond_sum > max(allowed) + 1:
            return None
        return max(0, min(allowed) - (bond_sum + 1))
    for level in allowed:
        if bond_sum <= level:
            return level - bond_sum
    return None


def to_smiles(mol: Molecule) -> str:
    """Serialize a molecule (or fragment) to parseable SMILES.

    Atoms are written bare only when re-parsing would reproduce the stored
    hydrogen count; otherwise they are bracketed with an explicit H count, so
    fragments cut out of larger molecules round-trip exactly.  Aromatic bonds
    outside rings (partial ring slices) are written with an explicit ``:``,
    which the permissive parser mode accepts.
    """
    if mol.num_atoms == 0:
        raise SmilesError("cannot serialize an empty molecule")
    if not mol.is_connected():
        raise SmilesError("cannot serialize a disconnected molecule")

    def atom_token(i: int) -> str:
        atom = mol.atoms[i]
        symbol = atom.element.lower() if atom.aromatic else atom.element
        bond_sum = sum(
            1 if mol.bonds[bi].aromatic else mol.bonds[bi].order
            for _, bi in mol.neighbors(i)
        )
        if (
            atom.formal_charge == 0
            and atom.element in ORGANIC_SUBSET
            and _implied_hydrogens(atom.element, atom.aromatic, bond_sum) == atom.hydrogens
        ):
            return symbol
        h = atom.hydrogens
        h_part = "" if h == 0 else ("H" if h == 1 else f"H{h}")
        q = atom.formal_charge
        if q == 0:
            q_part = ""
        elif q == 1:
            q_part = "+"
        elif q == -1:
            q_part = "-"
        else:
            q_part = f"{q:+d}"
        return f"[{symbol}{h_part}{q_part}]"

    def bond_token(bi: int) -> str:
        bond = mol.bonds[bi]
        if bond.aromatic:
            return "" if bond.in_ring else ":"
        if bond.order == 1:
            a_arom = mol.atoms[bond.a].aromatic
            b_arom = mol.atoms[bond.b].aromatic
            return "-" if (a_arom and b_arom) else ""
        return _ORDER_SYMBOL[bond.order]

    # Spanning-tree DFS from atom 0; non-tree bonds become ring closures.
    visited = [False] * mol.num_atoms
    tree_children: list[list[tuple[int, int]]] = [[] for _ in range(mol.num_atoms)]
    closure_bonds: list[int] = []
    used_bonds: set[int] = set()
    stack = [0]
    visited[0] = True
    order = [0]
    while stack:
        cur = stack.pop()
        for other, bi in mol.neighbors(cur):
            if bi in used_bonds:
                continue
            if visited[other]:
                used_bonds.add(bi)
                closure_bonds.append(bi)
            else:
                used_bonds.add(bi)
                visited[other] = True
                tree_children[cur].append((other, bi))
                stack.append(other)
                order.append(other)

    closure_number: dict[int, int] = {
        bi: num + 1 for num, bi in enumerate(sorted(closure_bonds))
    }

    def closure_token(num: int) -> str:
        return str(num) if num <= 9 else f"%{num:02d}"

    def write_atom(i: int) -> str:
        parts = [atom_token(i)]
        for bi in sorted(closure_number):
            bond = mol.bonds[bi]
            if i in (bond.a, bond.b):
                parts.append(bond_token(bi) + closure_token(closure_number[bi]))
        children = tree_children[i]
        for child, bi in children[:-1]:
            parts.append("(" + bond_token(bi) + write_atom(child) + ")")
        if children:
            child, bi = children[-1]
            parts.append(bond_token(bi) + write_atom(child))
        return "".join(parts)

    return write_atom(0)


def read_corpus(path) -> list[Molecule]:
    """Read a ``id<TAB>SMILES`` corpus file.

    Blank lines and lines starting with ``#`` are ignored.  Molecule ids must
    be unique.  Raises :class:`CorpusError` with a line number on any
    malformed entry.
    """
    molecules: list[Molecule] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(
                    f"expected 'id<TAB>SMILES', got {line!r}", lineno
                )
            mol_id, smiles = parts[0].strip(), parts[1].strip()
            if not mol_id or not smiles:
                raise CorpusError("empty id or SMILES field", lineno)
            if mol_id in seen_ids:
                raise CorpusError(f"duplicate molecule id {mol_id!r}", lineno)
            seen_ids.add(mol_id)
            try:
                molecules.append(parse_smiles(smiles, mol_id=mol_id))
            except SmilesError as exc:
                raise CorpusError(f"molecule {mol_id!r}: {exc}", lineno) from exc
    return molecules
