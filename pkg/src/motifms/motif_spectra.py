"""Reference mass spectra for motifs: isotope envelope plus cleavage peaks.

Each motif gets a synthetic spectrum holding its molecular-ion peak, the
M+1..M+3 isotope satellites from natural abundance, and one peak per distinct
single-bond cleavage fragment.  The motif spectra of a whole vocabulary are
stacked into a float32 matrix that can be persisted as a raw binary blob.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .canon import canonical_key
from .chem import Molecule
from .descriptors import monoisotopic_mass
from .elements import ISOTOPES, monoisotopic_mass_of
from .mining import MotifVocabulary
from .spectra import M_MAX, OutOfRangeError, Spectrum, mz_bin

MAX_ISOTOPE_SHIFT = 3
FRAGMENT_INTENSITY = 0.3
MAX_FRAGMENTS = 8

MATRIX_MAGIC = b"MSPM"
MATRIX_FORMAT_VERSION = 1


def _element_shift_distribution(element: str) -> dict[int, float]:
    """Probability of each integer mass shift for a single atom.

    Shifts are relative to the most abundant isotope, so elements whose
    principal isotope is not the lightest (boron) produce negative shifts.
    """
    principal = monoisotopic_mass_of(element)
    dist: dict[int, float] = {}
    for mass, abundance in ISOTOPES[element]:
        shift = round(mass - principal)
        dist[shift] = dist.get(shift, 0.0) + abundance
    return dist


def _convolve(a: dict[int, float], b: dict[int, float], max_shift: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for sa, pa in a.items():
        for sb, pb in b.items():
            s = sa + sb
            if -max_shift <= s <= max_shift:
                out[s] = out.get(s, 0.0) + pa * pb
    return out


def _power(dist: dict[int, float], n: int, max_shift: int) -> dict[int, float]:
    """n-fold convolution by binary exponentiation with shift truncation."""
    result = {0: 1.0}
    base = dict(dist)
    while n > 0:
        if n & 1:
            result = _convolve(result, base, max_shift)
        n >>= 1
        if n:
            base = _convolve(base, base, max_shift)
    return result


def isotope_pattern(mol: Molecule, max_shift: int = MAX_ISOTOPE_SHIFT) -> list[tuple[int, float]]:
    """Relative abundances of the M..M+max_shift molecular-ion peaks.

    The full multinomial expansion over every atom's isotope distribution
    (implicit hydrogens included) is aggregated to integer mass shifts and
    normalized so the all-principal-isotope peak at shift 0 equals 1.
    """
    counts: dict[str, int] = {}
    for atom in mol.atoms:
        counts[atom.element] = counts.get(atom.element, 0) + 1
    h = mol.total_hydrogens()
    if h:
        counts["H"] = counts.get("H", 0) + h
    total = {0: 1.0}
    for element in sorted(counts):
        per_atom = _element_shift_distribution(element)
        total = _convolve(total, _power(per_atom, counts[element], max_shift), max_shift)
    base = total.get(0, 0.0)
    if base <= 0.0:
        raise ValueError("degenerate isotope distribution: no all-principal peak")
    return [(s, total.get(s, 0.0) / base) for s in range(max_shift + 1)]


def cleavage_fragments(mol: Molecule) -> list[Molecule]:
    """Both sides of every acyclic single-bond cleavage, deduplicated.

    Fragments keep the hydrogen counts their atoms carry in the parent
    (homolytic cleavage; no hydrogen rearrangement).  Duplicates collapse by
    canonical key and at most :data:`MAX_FRAGMENTS` fragments are kept,
    preferring the heaviest; ties break on the canonical key.
    """
    seen: dict[str, tuple[float, Molecule]] = {}
    for bi, bond in enumerate(mol.bonds):
        if bond.in_ring or bond.aromatic or bond.order != 1:
            continue
        side = _component_without(mol, bond.a, bi)
        for atoms in (side, sorted(set(range(mol.num_atoms)) - set(side))):
            fragment = mol.subgraph(atoms, mol_id="")
            key = canonical_key(fragment)
            if key not in seen:
                seen[key] = (monoisotopic_mass(fragment), fragment)
    ranked = sorted(seen.items(), key=lambda item: (-item[1][0], item[0]))
    return [fragment for _, (_, fragment) in ranked[:MAX_FRAGMENTS]]


def _component_without(mol: Molecule, start: int, skip_bond: int) -> list[int]:
    """Atoms reachable from ``start`` without crossing bond ``skip_bond``."""
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for other, bi in mol.neighbors(cur):
            if bi == skip_bond or other in seen:
                continue
            seen.add(other)
            stack.append(other)
    return sorted(seen)


@dataclass
class MotifSpectrum:
    """The synthetic reference spectrum of one motif."""

    key: str
    spectrum: Spectrum


def build_motif_spectrum(motif: Molecule) -> MotifSpectrum:
    """Molecular ion at 1.0, isotope satellites, cleavage fragments at 0.3.

    The result is l2-normalized.  Raises
    :class:`~motifms.spectra.OutOfRangeError` when the molecular ion falls
    outside the bin grid.
    """
    bins = np.zeros(M_MAX, dtype=np.float64)
    ion_bin = mz_bin(monoisotopic_mass(motif))
    if ion_bin < 1 or ion_bin > M_MAX:
        raise OutOfRangeError(
            f"molecular ion at bin {ion_bin} is outside 1..{M_MAX}"
        )
    for shift, abundance in isotope_pattern(motif):
        target = ion_bin + shift
        if 1 <= target <= M_MAX:
            bins[target - 1] += abundance
    for fragment in cleavage_fragments(motif):
        frag_bin = mz_bin(monoisotopic_mass(fragment))
        if 1 <= frag_bin <= M_MAX:
            bins[frag_bin - 1] += FRAGMENT_INTENSITY
    bins /= np.linalg.norm(bins)
    return MotifSpectrum(key=canonical_key(motif), spectrum=Spectrum(bins))


def motif_spectrum_matrix(vocab: MotifVocabulary) -> np.ndarray:
    """Stack every motif spectrum into a float32 matrix of shape (|V|, M_MAX).

    A motif whose molecular ion lands outside the grid contributes a zero row
    and a warning rather than aborting the whole matrix.
    """
    matrix = np.zeros((len(vocab), M_MAX), dtype=np.float32)
    for row, entry in enumerate(vocab.entries):
        try:
            built = build_motif_spectrum(entry.fragment)
        except OutOfRangeError as exc:
            warnings.warn(
                f"motif rank {row + 1} ({entry.key}): {exc}; row zeroed",
                stacklevel=2,
            )
            continue
        matrix[row] = built.spectrum.bins.astype(np.float32)
    return matrix


def save_motif_matrix(matrix: np.ndarray, path) -> None:
    """Persist the matrix: magic, version, |V|, M_max, then row-major float32."""
    if matrix.ndim != 2 or matrix.shape[1] != M_MAX:
        raise ValueError(f"matrix must have shape (|V|, {M_MAX})")
    data = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as handle:
        handle.write(MATRIX_MAGIC)
        handle.write(struct.pack("<III", MATRIX_FORMAT_VERSION, matrix.shape[0], M_MAX))
        handle.write(data.tobytes())


def load_motif_matrix(path) -> np.ndarray:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != MATRIX_MAGIC:
            raise ValueError(f"not a motif matrix file: bad magic {magic!r}")
        version, rows, cols = struct.unpack("<III", handle.read(12))
        if version != MATRIX_FORMAT_VERSION:
            raise ValueError(f"unsupported matrix format version {version}")
        if cols != M_MAX:
            raise ValueError(f"matrix width {cols} does not match M_MAX={M_MAX}")
        payload = handle.read(rows * cols * 4)
        if len(payload) != rows * cols * 4:
            raise ValueError("truncated motif matrix payload")
        return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
