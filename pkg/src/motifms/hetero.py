"""The heterogeneous motif graph and its breadth-first k-hop sampler.

Nodes are the corpus molecules (ids 0..N-1) followed by the vocabulary motifs
(ids N..N+V-1).  Molecule-motif edges carry TF-IDF weights, motif-motif edges
carry PMI weights computed from per-molecule co-occurrence, and molecules are
never connected to each other.  Every node's feature vector is its
motif-occurrence counts with the molecular weight appended.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .chem import Molecule
from .descriptors import molecular_weight
from .mining import MotifVocabulary, motif_occurrences


class HeteroGraphError(ValueError):
    """Base class for motif graph failures."""


class DomainError(HeteroGraphError):
    """PMI called with zero total or marginal counts."""


class EmptyVocabularyError(HeteroGraphError):
    """Graph construction needs at least one motif."""


class InvalidSeedError(HeteroGraphError):
    """Sampling seeds must be molecule nodes."""


def pmi(n_ij: int, n_i: int, n_j: int, m: int) -> float:
    """Pointwise mutual information of two motifs over the corpus.

    Computes ``ln((n_ij/m) / ((n_i/m) * (n_j/m)))`` with the natural log.
    A zero joint count has no finite value and returns ``-inf``; callers
    treat that (like any negative value) as "no edge".  Raises
    :class:`DomainError` when the total or either marginal count is zero.
    """
    if m <= 0 or n_i <= 0 or n_j <= 0:
        raise DomainError(
            f"pmi requires positive M, N_i, N_j (got M={m}, N_i={n_i}, N_j={n_j})"
        )
    if n_ij < 0:
        raise DomainError(f"joint count must be nonnegative, got {n_ij}")
    if n_ij == 0:
        return float("-inf")
    return math.log((n_ij * m) / (n_i * n_j))


def tf_idf(c_ij: int, n_i: int, m: int) -> float:
    """Occurrence count scaled by inverse document frequency.

    Computes ``c_ij * (ln((1 + m) / (1 + n_i)) + 1)`` with the natural log.
    """
    return c_ij * (math.log((1 + m) / (1 + n_i)) + 1.0)


class HeteroMotifGraph:
    """Immutable weighted graph over molecule and motif nodes."""

    def __init__(self, molecule_ids, occurrences, motif_self_occurrences,
                 molecule_weights, motif_weights, edges):
        self.molecule_ids: tuple[str, ...] = tuple(molecule_ids)
        self.occurrences = np.asarray(occurrences, dtype=np.int64)
        self.n_molecules = len(self.molecule_ids)
        self.n_motifs = self.occurrences.shape[1]
        self.motif_doc_freq = (self.occurrences > 0).sum(axis=0).astype(np.int64)
        features = np.zeros((self.num_nodes, self.n_motifs + 1), dtype=np.float64)
        features[: self.n_molecules, : self.n_motifs] = self.occurrences
        features[: self.n_molecules, self.n_motifs] = molecule_weights
        features[self.n_molecules :, : self.n_motifs] = motif_self_occurrences
        features[self.n_molecules :, self.n_motifs] = motif_weights
        self.features = features
        adjacency: list[list[tuple[int, float]]] = [[] for _ in range(self.num_nodes)]
        self._edges: tuple[tuple[int, int, float], ...] = tuple(sorted(edges))
        for i, j, w in self._edges:
            adjacency[i].append((j, w))
            adjacency[j].append((i, w))
        self._adj = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)

    @property
    def num_nodes(self) -> int:
        return self.n_molecules + self.n_motifs

    def is_molecule_node(self, node: int) -> bool:
        return 0 <= node < self.n_molecules

    def neighbors(self, node: int) -> tuple[tuple[int, float], ...]:
        return self._adj[node]

    def node_features(self, node: int) -> np.ndarray:
        return self.features[node]

    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Undirected edges as (i, j, weight) with i < j, sorted."""
        return self._edges

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"{self.n_molecules},{self.n_motifs}".encode())
        for i, j, w in self._edges:
            digest.update(f"{i},{j},{w!r}".encode())
        digest.update(self.features.tobytes())
        return digest.hexdigest()


def build_graph(corpus, vocab: MotifVocabulary) -> HeteroMotifGraph:
    """Assemble the heterogeneous motif graph for a corpus.

    Molecule-motif edges exist wherever a motif occurs in a molecule, with
    TF-IDF weights; motif-motif edges exist for motif pairs that co-occur in
    at least one molecule and have nonnegative PMI.  Raises
    :class:`EmptyVocabularyError` on an empty vocabulary.
    """
    corpus = list(corpus)
    if len(vocab) == 0:
        raise EmptyVocabularyError("cannot build a motif graph without motifs")
    n_mol = len(corpus)
    n_motif = len(vocab)
    occ = np.zeros((n_mol, n_motif), dtype=np.int64)
    for j, mol in enumerate(corpus):
        occ[j] = motif_occurrences(mol, vocab)
    doc_freq = (occ > 0).sum(axis=0)
    total = n_mol

    edges: list[tuple[int, int, float]] = []
    for j in range(n_mol):
        for i in np.flatnonzero(occ[j]):
            weight = tf_idf(int(occ[j, i]), int(doc_freq[i]), total)
            edges.append((j, n_mol + int(i), weight))
    present = occ > 0
    for i in range(n_motif):
        if doc_freq[i] == 0:
            continue
        for k in range(i + 1, n_motif):
            if doc_freq[k] == 0:
                continue
            joint = int(np.count_nonzero(present[:, i] & present[:, k]))
            if joint == 0:
                continue
            weight = pmi(joint, int(doc_freq[i]), int(doc_freq[k]), total)
            if weight < 0.0:
                continue
            edges.append((n_mol + i, n_mol + k, weight))

    motif_self = np.zeros((n_motif, n_motif), dtype=np.int64)
    motif_weights = np.zeros(n_motif, dtype=np.float64)
    for i, entry in enumerate(vocab.entries):
        motif_self[i] = motif_occurrences(entry.fragment, vocab)
        motif_weights[i] = molecular_weight(entry.fragment)
    mol_weights = np.array([molecular_weight(m) for m in corpus], dtype=np.float64)

    return HeteroMotifGraph(
        molecule_ids=[m.id for m in corpus],
        occurrences=occ,
        motif_self_occurrences=motif_self,
        molecule_weights=mol_weights,
        motif_weights=motif_weights,
        edges=edges,
    )


class QueryOverlay:
    """A read-only view of a graph with one extra molecule node attached.

    The overlay node's edges use TF-IDF weights computed from the query's
    motif occurrences against the frozen training statistics (corpus size and
    per-motif document frequencies); the base graph is never touched.
    """

    def __init__(self, base: HeteroMotifGraph, mol: Molecule, vocab: MotifVocabulary):
        self.base = base
        self.query_id = mol.id
        self.node = base.num_nodes
        occ = motif_occurrences(mol, vocab)
        self.query_occurrences = occ
        weight = molecular_weight(mol)
        self.query_features = np.concatenate([occ.astype(np.float64), [weight]])
        links = []
        for i in np.flatnonzero(occ):
            freq = int(base.motif_doc_freq[i])
            w = tf_idf(int(occ[i]), freq, base.n_molecules)
            links.append((base.n_molecules + int(i), w))
        self._query_adj: tuple[tuple[int, float], ...] = tuple(sorted(links))
        self._linked: dict[int, float] = {node: w for node, w in self._query_adj}

    @property
    def num_nodes(self) -> int:
        return self.base.num_nodes + 1

    @property
    def n_molecules(self) -> int:
        return self.base.n_molecules

    @property
    def n_motifs(self) -> int:
        return self.base.n_motifs

    def is_molecule_node(self, node: int) -> bool:
        return self.base.is_molecule_node(node) or node == self.node

    def neighbors(self, node: int):
        if node == self.node:
            return self._query_adj
        nbrs = self.base.neighbors(node)
        if node in self._linked:
            return nbrs + ((self.node, self._linked[node]),)
        return nbrs

    def node_features(self, node: int) -> np.ndarray:
        if node == self.node:
            return self.query_features
        return self.base.node_features(node)


def attach_query(g: HeteroMotifGraph, mol: Molecule, vocab: MotifVocabulary) -> QueryOverlay:
    """Overlay one unseen molecule on the training graph, non-destructively."""
    return QueryOverlay(g, mol, vocab)


@dataclass
class SampledSubgraph:
    """Result of one breadth-first k-hop sampling pass."""

    seeds: tuple[int, ...]
    hops: tuple[tuple[int, ...], ...]
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]

    def node_position(self) -> dict[int, int]:
        return {node: pos for pos, node in enumerate(self.nodes)}

    def dense_adjacency(self) -> np.ndarray:
        """Symmetric weighted adjacency over ``nodes`` order, no self loops."""
        k = len(self.nodes)
        position = self.node_position()
        adj = np.zeros((k, k), dtype=np.float64)
        for i, j, w in self.edges:
            a, b = position[i], position[j]
            adj[a, b] = w
            adj[b, a] = w
        return adj

    def feature_matrix(self, graph_like) -> np.ndarray:
        return np.stack([graph_like.node_features(n) for n in self.nodes])


def sample_khop(graph_like, seeds, sizes, rng_seed) -> SampledSubgraph:
    """Breadth-first neighborhood sampling, hop by hop.

    At hop h every frontier node contributes at most ``sizes[h]`` of its not
    yet visited neighbors, drawn without replacement from a generator seeded
    with ``rng_seed``.  Edges are the full induced set over sampled nodes.
    Raises :class:`InvalidSeedError` unless every seed is a molecule node.
    """
    sizes = list(sizes)
    if not sizes or any(int(s) <= 0 for s in sizes):
        raise HeteroGraphError(f"sampler sizes must be positive, got {sizes}")
    seeds = list(seeds)
    if not seeds:
        raise InvalidSeedError("at least one seed node is required")
    for seed in seeds:
        if not (0 <= seed < graph_like.num_nodes):
            raise InvalidSeedError(f"seed {seed} is not a node id")
        if not graph_like.is_molecule_node(seed):
            raise InvalidSeedError(f"seed {seed} is not a molecule node")

    rng = np.random.default_rng(rng_seed)
    visited = set(seeds)
    frontier = list(dict.fromkeys(seeds))
    hops: list[tuple[int, ...]] = []
    for size in sizes:
        next_frontier: list[int] = []
        for node in frontier:
            candidates = [nbr for nbr, _ in graph_like.neighbors(node) if nbr not in visited]
            if len(candidates) > size:
                chosen_idx = rng.choice(len(candidates), size=size, replace=False)
                chosen = sorted(candidates[i] for i in chosen_idx)
            else:
                chosen = candidates
            visited.update(chosen)
            next_frontier.extend(chosen)
        hops.append(tuple(next_frontier))
        frontier = next_frontier

    nodes = list(dict.fromkeys(list(dict.fromkeys(seeds)) + [n for hop in hops for n in hop]))
    node_set = set(nodes)
    edges = []
    for node in nodes:
        for nbr, w in graph_like.neighbors(node):
            if nbr in node_set and node < nbr:
                edges.append((node, nbr, w))
    return SampledSubgraph(
        seeds=tuple(seeds),
        hops=tuple(hops),
        nodes=tuple(nodes),
        edges=tuple(sorted(edges)),
    )


def export_graph(g: HeteroMotifGraph, edges_path, manifest_path, vocab_path: str = "") -> None:
    """Write the edge list as ``i j weight`` lines plus a JSON manifest."""
    with open(edges_path, "w", encoding="utf-8") as handle:
        for i, j, w in g.edges():
            handle.write(f"{i} {j} {w:.10g}\n")
    manifest = {
        "molecule_count": g.n_molecules,
        "motif_count": g.n_motifs,
        "feature_dim": int(g.features.shape[1]),
        "edge_count": len(g.edges()),
        "vocab_path": vocab_path,
    }
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
