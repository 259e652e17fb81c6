"""Frequency-driven motif vocabulary mining over a molecule corpus.

The miner starts from one fragment per heavy atom and repeatedly merges the
corpus-wide most frequent adjacent fragment pair, identified by the canonical
key of the merged induced subgraph.  Each round merges every non-overlapping
occurrence of the winning pair simultaneously; the winner joins the
vocabulary when it is a valid motif (connected, at most
``MAX_MOTIF_ATOMS`` heavy atoms) and not already present.  The ordered list
of round winners (the merge sequence) is kept alongside the entries so the
exact same partition can be replayed on any single molecule later.

Results are invariant to corpus order: counts are summed over molecules, ties
break on the lexicographically smallest key, and the representative fragment
of an entry is the occurrence with the smallest (molecule id, atom indices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canon import canonical_key
from .chem import Molecule, parse_smiles, to_smiles

MAX_MOTIF_ATOMS = 30
DEFAULT_VOCAB_SIZE = 300

VOCAB_FORMAT_VERSION = 1


class MiningError(ValueError):
    """Base class for vocabulary mining failures."""


class EmptyCorpusError(MiningError):
    """Mining requires at least one molecule."""


class NoAdjacentPairsError(MiningError):
    """Every molecule is a single fragment; nothing left to merge."""


class VocabularyFormatError(MiningError):
    """Malformed vocabulary file.  Carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class VocabEntry:
    """One motif: canonical key, representative fragment, corpus frequency."""

    key: str
    fragment: Molecule
    frequency: int


class MotifVocabulary:
    """Ordered motif entries plus the merge sequence that produced them."""

    def __init__(self, entries=None, ops=None, k: int = DEFAULT_VOCAB_SIZE):
        self.entries: list[VocabEntry] = list(entries or [])
        self.ops: list[str] = list(ops or [])
        self.k = k
        self.index: dict[str, int] = {e.key: i for i, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def append(self, entry: VocabEntry) -> None:
        if entry.key in self.index:
            raise MiningError(f"duplicate vocabulary key {entry.key!r}")
        self.index[entry.key] = len(self.entries)
        self.entries.append(entry)


class _MoleculeState:
    """Mutable fragment partition of one molecule during mining."""

    __slots__ = ("mol", "frag_of", "fragments")

    def __init__(self, mol: Molecule):
        self.mol = mol
        # Atom -> fragment id; fragment id -> sorted atom tuple.
        self.frag_of = list(range(mol.num_atoms))
        self.fragments: dict[int, tuple[int, ...]] = {
            i: (i,) for i in range(mol.num_atoms)
        }

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """Distinct fragment-id pairs joined by at least one bond, sorted."""
        pairs = set()
        for bond in self.mol.bonds:
            fa, fb = self.frag_of[bond.a], self.frag_of[bond.b]
            if fa != fb:
                pairs.add((min(fa, fb), max(fa, fb)))
        return sorted(pairs)

    def merged_atoms(self, fa: int, fb: int) -> tuple[int, ...]:
        return tuple(sorted(self.fragments[fa] + self.fragments[fb]))

    def merge(self, fa: int, fb: int) -> None:
        union = self.merged_atoms(fa, fb)
        keep, drop = min(fa, fb), max(fa, fb)
        self.fragments[keep] = union
        del self.fragments[drop]
        for atom in union:
            self.frag_of[atom] = keep


class FragmentState:
    """Fragment partitions for a whole corpus, with a canonical-key cache."""

    def __init__(self, corpus):
        self.molecules: list[_MoleculeState] = [_MoleculeState(m) for m in corpus]
        self._key_cache: dict[tuple[int, tuple[int, ...]], str] = {}

    def fragment_key(self, mol_index: int, atoms: tuple[int, ...]) -> str:
        cached = self._key_cache.get((mol_index, atoms))
        if cached is None:
            sub = self.molecules[mol_index].mol.subgraph(atoms)
            cached = canonical_key(sub)
            self._key_cache[(mol_index, atoms)] = cached
        return cached

    def partitions(self) -> list[list[tuple[int, ...]]]:
        """Current fragment atom-tuples per molecule, sorted."""
        return [sorted(ms.fragments.values()) for ms in self.molecules]


@dataclass
class PairCandidate:
    """The winning adjacent pair of one round."""

    key: str
    fragment: Molecule
    count: int


def init_fragments(corpus) -> FragmentState:
    """One single-atom fragment per heavy atom of every molecule."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpusError("cannot mine an empty corpus")
    return FragmentState(corpus)


def _count_pairs(state: FragmentState):
    """Merged-key counts plus the best representative occurrence per key."""
    counts: dict[str, int] = {}
    representatives: dict[str, tuple[str, tuple[int, ...], int]] = {}
    for mi, ms in enumerate(state.molecules):
        for fa, fb in ms.adjacent_pairs():
            atoms = ms.merged_atoms(fa, fb)
            key = state.fragment_key(mi, atoms)
            counts[key] = counts.get(key, 0) + 1
            marker = (ms.mol.id, atoms, mi)
            if key not in representatives or marker < representatives[key]:
                representatives[key] = marker
    return counts, representatives


def most_frequent_pair(state: FragmentState) -> PairCandidate:
    """The adjacent pair with the highest corpus-wide occurrence count.

    Ties break toward the lexicographically smallest canonical key.  Raises
    :class:`NoAdjacentPairsError` when no molecule has two adjacent
    fragments.
    """
    counts, representatives = _count_pairs(state)
    if not counts:
        raise NoAdjacentPairsError("no adjacent fragment pairs remain")
    winner = min(counts, key=lambda key: (-counts[key], key))
    _, atoms, mi = representatives[winner]
    fragment = state.molecules[mi].mol.subgraph(atoms, mol_id="")
    return PairCandidate(key=winner, fragment=fragment, count=counts[winner])


def _merge_occurrences(ms: _MoleculeState, key: str, state: FragmentState, mi: int) -> None:
    """Merge all non-overlapping occurrences of ``key`` in one molecule.

    Candidate pairs are processed left to right by the lowest atom index of
    the combined fragment; a pair is skipped when either side was already
    merged this round.
    """
    candidates = []
    for fa, fb in ms.adjacent_pairs():
        atoms = ms.merged_atoms(fa, fb)
        if state.fragment_key(mi, atoms) == key:
            first_a = ms.fragments[fa][0]
            first_b = ms.fragments[fb][0]
            candidates.append((min(first_a, first_b), max(first_a, first_b), fa, fb))
    consumed: set[int] = set()
    for _, _, fa, fb in sorted(candidates):
        if fa in consumed or fb in consumed:
            continue
        ms.merge(fa, fb)
        consumed.update((fa, fb))


def merge_round(state: FragmentState, vocab: MotifVocabulary):
    """Execute one mining round: pick the winner, merge it, update the vocab.

    The merge always happens and is recorded in the merge sequence; the
    vocabulary gains an entry only when the winner is valid (connected and at
    most ``MAX_MOTIF_ATOMS`` atoms) and not already present.
    """
    candidate = most_frequent_pair(state)
    for mi, ms in enumerate(state.molecules):
        _merge_occurrences(ms, candidate.key, state, mi)
    vocab.ops.append(candidate.key)
    valid = (
        candidate.fragment.is_connected()
        and candidate.fragment.num_atoms <= MAX_MOTIF_ATOMS
    )
    if valid and candidate.key not in vocab:
        vocab.append(
            VocabEntry(
                key=candidate.key,
                fragment=candidate.fragment,
                frequency=candidate.count,
            )
        )
    return state, vocab


def mine_vocabulary(corpus, k: int = DEFAULT_VOCAB_SIZE) -> MotifVocabulary:
    """Run up to ``k`` merge rounds over the corpus.

    Stops early when no adjacent fragment pairs remain.  The result never
    holds more than ``k`` entries and is independent of corpus order.
    """
    if k < 0:
        raise MiningError(f"iteration count must be nonnegative, got {k}")
    state = init_fragments(corpus)
    vocab = MotifVocabulary(k=k)
    for _ in range(k):
        try:
            merge_round(state, vocab)
        except NoAdjacentPairsError:
            break
    return vocab


def replay_partition(mol: Molecule, vocab: MotifVocabulary) -> list[tuple[int, ...]]:
    """Partition one molecule by replaying the mined merge sequence.

    Applies each recorded round winner once, with the same left-to-right
    non-overlap rule the miner used, so molecules that were part of the
    mining corpus re-derive exactly the partition mining left them with.
    """
    state = FragmentState([mol])
    ms = state.molecules[0]
    for key in vocab.ops:
        _merge_occurrences(ms, key, state, 0)
    return sorted(ms.fragments.values())


def motif_occurrences(mol: Molecule, vocab: MotifVocabulary) -> np.ndarray:
    """Count how many replayed fragments of ``mol`` match each vocab entry.

    Returns an integer vector of length ``len(vocab)``; molecules sharing no
    motif with the vocabulary yield the zero vector.
    """
    counts = np.zeros(len(vocab), dtype=np.int64)
    if not vocab.ops:
        return counts
    state = FragmentState([mol])
    ms = state.molecules[0]
    for key in vocab.ops:
        _merge_occurrences(ms, key, state, 0)
    for atoms in ms.fragments.values():
        key = state.fragment_key(0, atoms)
        position = vocab.index.get(key)
        if position is not None:
            counts[position] += 1
    return counts


def save_vocabulary(vocab: MotifVocabulary, path) -> None:
    """Write the vocabulary as tab-separated text.

    Header comment lines record the format version, the requested iteration
    count, and the merge sequence; entry lines are
    ``rank<TAB>key<TAB>frequency<TAB>fragment SMILES`` with 1-based ranks.
    A save/load/save cycle is byte-identical.
    """
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# vocabulary\t{VOCAB_FORMAT_VERSION}\n")
        handle.write(f"# k\t{vocab.k}\n")
        for key in vocab.ops:
            handle.write(f"# op\t{key}\n")
        for rank, entry in enumerate(vocab.entries, start=1):
            smiles = to_smiles(entry.fragment)
            handle.write(f"{rank}\t{entry.key}\t{entry.frequency}\t{smiles}\n")


def load_vocabulary(path) -> MotifVocabulary:
    """Read a vocabulary file written by :func:`save_vocabulary`."""
    entries: list[VocabEntry] = []
    ops: list[str] = []
    k = DEFAULT_VOCAB_SIZE
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                parts = line.split("\t")
                if parts[0] == "# vocabulary":
                    if len(parts) != 2 or parts[1] != str(VOCAB_FORMAT_VERSION):
                        raise VocabularyFormatError(
                            f"unsupported format version {line!r}", lineno
                        )
                elif parts[0] == "# k" and len(parts) == 2:
                    k = int(parts[1])
                elif parts[0] == "# op" and len(parts) == 2:
                    ops.append(parts[1])
                else:
                    raise VocabularyFormatError(f"bad header line {line!r}", lineno)
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise VocabularyFormatError(
                    f"expected rank, key, frequency, SMILES, got {line!r}", lineno
                )
            rank_text, key, freq_text, smiles = parts
            try:
                rank = int(rank_text)
                frequency = int(freq_text)
            except ValueError:
                raise VocabularyFormatError(f"bad integer field in {line!r}", lineno)
            if rank != len(entries) + 1:
                raise VocabularyFormatError(
                    f"rank {rank} out of order (expected {len(entries) + 1})", lineno
                )
            fragment = parse_smiles(smiles, strict_aromaticity=False)
            if canonical_key(fragment) != key:
                raise VocabularyFormatError(
                    f"fragment {smiles!r} does not match key {key!r}", lineno
                )
            entries.append(VocabEntry(key=key, fragment=fragment, frequency=frequency))
    return MotifVocabulary(entries=entries, ops=ops, k=k)
