"""Independent reference implementations used to cross-check the package.

Every oracle here is deliberately naive: exhaustive search, brute-force
recounting, Monte-Carlo simulation, or closed-form hand arithmetic.  None
of them share code paths with the implementations under test beyond basic
data types, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from motifms.canon import canonical_key
from motifms.chem import Atom, Bond, Molecule
from motifms.elements import ISOTOPES


# ---------------------------------------------------------------------------
# Graph isomorphism and relabeling


def permute_molecule(mol: Molecule, perm) -> Molecule:
    """Rebuild a molecule with atom i moved to position perm[i]."""
    inverse = [0] * len(perm)
    for old, new in enumerate(perm):
        inverse[new] = old
    atoms = [mol.atoms[inverse[new]] for new in range(mol.num_atoms)]
    bonds = [
        Bond(
            a=min(perm[b.a], perm[b.b]),
            b=max(perm[b.a], perm[b.b]),
            order=b.order,
            aromatic=b.aromatic,
            in_ring=b.in_ring,
        )
        for b in mol.bonds
    ]
    bonds.sort(key=lambda b: (b.a, b.b))
    return Molecule(atoms, bonds, mol_id=mol.id)


def _atom_attrs(atom: Atom) -> tuple:
    return (atom.element, atom.formal_charge, atom.aromatic)


def _bond_table(mol: Molecule) -> dict[tuple[int, int], tuple]:
    return {
        (b.a, b.b): (b.order, b.aromatic)
        for b in mol.bonds
    }


def brute_force_isomorphic(a: Molecule, b: Molecule) -> bool:
    """Exhaustive bijection search; only usable for small fragments."""
    if a.num_atoms != b.num_atoms or a.num_bonds != b.num_bonds:
        return False
    table_a = _bond_table(a)
    table_b = _bond_table(b)
    for perm in permutations(range(b.num_atoms)):
        if any(
            _atom_attrs(a.atoms[i]) != _atom_attrs(b.atoms[perm[i]])
            for i in range(a.num_atoms)
        ):
            continue
        ok = True
        for (i, j), attrs in table_a.items():
            pi, pj = min(perm[i], perm[j]), max(perm[i], perm[j])
            if table_b.get((pi, pj)) != attrs:
                ok = False
                break
        if ok and len(table_a) == len(table_b):
            return True
    return False


# ---------------------------------------------------------------------------
# Path enumeration and FNV-1a hashing (fingerprint reference)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def reference_fnv1a64(data: bytes, seed: int) -> int:
    value = (_FNV_OFFSET ^ seed) & 0xFFFFFFFFFFFFFFFF
    for byte in data:
        value = ((value ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return value


def enumerate_simple_paths(mol: Molecule, max_bonds: int):
    """All simple bond paths as (elements tuple, orders tuple), both directions."""
    paths = []

    def extend(atom_path, bond_orders):
        current = atom_path[-1]
        for other, bi in mol.neighbors(current):
            if other in atom_path:
                continue
            orders = bond_orders + [
                "a" if mol.bonds[bi].aromatic else str(mol.bonds[bi].order)
            ]
            nxt = atom_path + [other]
            paths.append((
                tuple(mol.atoms[i].element for i in nxt),
                tuple(orders),
            ))
            if len(orders) < max_bonds:
                extend(nxt, orders)

    for start in range(mol.num_atoms):
        extend([start], [])
    return paths


def reference_fingerprint_bits(mol: Molecule, n_bits: int, max_bonds: int,
                               seed: int) -> set[int]:
    """Expected set bits: canonical-direction path hashes mod n_bits.

    Paths are serialized as alternating element symbols and bond characters
    ("1", "2", "3", or "a" for aromatic) with no separator, reading in
    whichever direction compares smaller as bytes.
    """
    bits = set()
    for elements, orders in enumerate_simple_paths(mol, max_bonds):
        tokens = [elements[0]]
        for order, element in zip(orders, elements[1:]):
            tokens.extend((order, element))
        forward = "".join(tokens).encode("utf-8")
        backward = "".join(reversed(tokens)).encode("utf-8")
        bits.add(reference_fnv1a64(min(forward, backward), seed) % n_bits)
    return bits


# ---------------------------------------------------------------------------
# Exhaustive motif miner


class _NaivePartition:
    def __init__(self, mol: Molecule):
        self.mol = mol
        self.fragments: list[tuple[int, ...]] = [(i,) for i in range(mol.num_atoms)]

    def adjacent_pairs(self):
        member = {}
        for fi, atoms in enumerate(self.fragments):
            for atom in atoms:
                member[atom] = fi
        pairs = set()
        for bond in self.mol.bonds:
            fa, fb = member[bond.a], member[bond.b]
            if fa != fb:
                pairs.add((min(fa, fb), max(fa, fb)))
        return sorted(pairs)

    def merged(self, fa: int, fb: int) -> tuple[int, ...]:
        return tuple(sorted(self.fragments[fa] + self.fragments[fb]))

    def merge_all(self, key: str):
        """Merge non-overlapping occurrences of key, lowest atom index first."""
        candidates = []
        for fa, fb in self.adjacent_pairs():
            atoms = self.merged(fa, fb)
            if canonical_key(self.mol.subgraph(atoms)) == key:
                lo_a, lo_b = self.fragments[fa][0], self.fragments[fb][0]
                candidates.append((min(lo_a, lo_b), max(lo_a, lo_b), fa, fb))
        used = set()
        for _, _, fa, fb in sorted(candidates):
            if fa in used or fb in used:
                continue
            union = self.merged(fa, fb)
            used.update((fa, fb))
            self.fragments[fa] = union
            self.fragments[fb] = ()
        self.fragments = [f for f in self.fragments if f]


def exhaustive_mine(corpus, k: int, max_atoms: int = 30):
    """Reference miner: naive recount every round, same tie-break rules.

    Returns (entries, ops) where entries are (key, count) in vocabulary
    order and ops is the full merge sequence including invalid/duplicate
    winners.
    """
    partitions = [_NaivePartition(m) for m in corpus]
    entries: list[tuple[str, int]] = []
    seen = set()
    ops: list[str] = []
    for _ in range(k):
        counts: dict[str, int] = {}
        rep: dict[str, tuple] = {}
        for part in partitions:
            for fa, fb in part.adjacent_pairs():
                atoms = part.merged(fa, fb)
                key = canonical_key(part.mol.subgraph(atoms))
                counts[key] = counts.get(key, 0) + 1
                marker = (part.mol.id, atoms)
                if key not in rep or marker < rep[key]:
                    rep[key] = (part.mol.id, atoms, part.mol)
        if not counts:
            break
        best = min(counts, key=lambda key: (-counts[key], key))
        for part in partitions:
            part.merge_all(best)
        ops.append(best)
        _, atoms, mol = rep[best]
        fragment = mol.subgraph(atoms)
        if fragment.is_connected() and fragment.num_atoms <= max_atoms and best not in seen:
            entries.append((best, counts[best]))
            seen.add(best)
    return entries, ops


def naive_occurrences(mol: Molecule, ops, keys) -> list[int]:
    """Replay a merge sequence on one molecule and count final fragments."""
    part = _NaivePartition(mol)
    for key in ops:
        part.merge_all(key)
    counts = [0] * len(keys)
    index = {key: i for i, key in enumerate(keys)}
    for atoms in part.fragments:
        key = canonical_key(mol.subgraph(atoms))
        if key in index:
            counts[index[key]] += 1
    return counts


# ---------------------------------------------------------------------------
# Edge-weight formulas from raw counts


def brute_pmi(n_ij: int, n_i: int, n_j: int, m: int) -> float:
    p_ij = n_ij / m
    p_i = n_i / m
    p_j = n_j / m
    if p_ij == 0.0:
        return float("-inf")
    return math.log(p_ij / (p_i * p_j))


def brute_tf_idf(c_ij: int, n_i: int, m: int) -> float:
    return c_ij * (math.log((1 + m) / (1 + n_i)) + 1.0)


# ---------------------------------------------------------------------------
# Finite differences


def finite_difference_grads(loss_fn, arrays: dict[str, np.ndarray],
                            eps: float = 1e-6) -> dict[str, np.ndarray]:
    """Central finite differences of a scalar loss over named float64 arrays.

    ``loss_fn`` must recompute the loss from the (mutated) arrays each call.
    """
    grads = {}
    for name, array in arrays.items():
        grad = np.zeros_like(array)
        flat = array.reshape(-1)
        flat_grad = grad.reshape(-1)
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + eps
            up = loss_fn()
            flat[idx] = saved - eps
            down = loss_fn()
            flat[idx] = saved
            flat_grad[idx] = (up - down) / (2.0 * eps)
        grads[name] = grad
    return grads


def gradient_max_relative_error(analytic: dict[str, np.ndarray],
                                numeric: dict[str, np.ndarray]) -> float:
    """max over parameters of |a - n| / max(1, |a|, |n|), elementwise."""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


# ---------------------------------------------------------------------------
# Isotope pattern Monte Carlo


def isotope_shift_mc(element_counts: dict[str, int], trials: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Sampled distribution of total integer mass shifts (index = shift).

    Each atom independently draws an isotope per its natural abundance;
    an isotope's integer shift is its rounded offset from the lightest.
    """
    max_shift = 16
    totals = np.zeros(trials, dtype=np.int64)
    for element, count in element_counts.items():
        isotopes = ISOTOPES[element]
        base = isotopes[0][0]
        shifts = np.array([round(mass - base) for mass, _ in isotopes])
        probs = np.array([abundance for _, abundance in isotopes])
        probs = probs / probs.sum()
        draws = rng.choice(len(isotopes), size=(trials, count), p=probs)
        totals += shifts[draws].sum(axis=1)
    hist = np.bincount(np.minimum(totals, max_shift), minlength=max_shift + 1)
    return hist / trials


# ---------------------------------------------------------------------------
# Optimizer closed form


def adam_reference(w: float, g: float, m: float, v: float, t: int,
                   lr: float, beta1: float, beta2: float, eps: float) -> tuple:
    """One hand-evaluated adaptive-moment step on a scalar."""
    m_new = beta1 * m + (1 - beta1) * g
    v_new = beta2 * v + (1 - beta2) * g * g
    m_hat = m_new / (1 - beta1 ** t)
    v_hat = v_new / (1 - beta2 ** t)
    w_new = w - lr * m_hat / (math.sqrt(v_hat) + eps)
    return w_new, m_new, v_new


# ---------------------------------------------------------------------------
# Ranking reference


def naive_true_match_rank(query_bins: np.ndarray, candidate_bins: list[np.ndarray],
                          true_index: int) -> int:
    """Pessimistic rank of the true candidate by cosine similarity."""

    def cos(a, b):
        return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))

    sims = [cos(query_bins, c) for c in candidate_bins]
    true_sim = sims[true_index]
    rank = 1
    for idx, sim in enumerate(sims):
        if idx == true_index:
            continue
        if sim >= true_sim:
            rank += 1
    return rank
