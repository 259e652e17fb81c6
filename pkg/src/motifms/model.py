"""The assembled spectrum predictor: molecule GNN + motif-graph GIN + prior.

A prediction concatenates three embeddings and decodes them with an MLP head:

* ``e1``: mean-pooled node embeddings of a 3-layer GNN over the molecule's
  atom graph (GCN or GIN by variant), concatenated with a learned projection
  of the 2048-bit path fingerprint;
* ``e2``: the molecule node's embedding after a 3-layer GIN over a sampled
  3-hop subgraph of the heterogeneous motif graph, whose node features pass
  through a 2-layer input MLP first;
* ``p``: a learned projection of the l2-normalized occurrence-weighted sum of
  the motif spectrum matrix rows.

The ``gcn_only``/``gin_only`` variants drop ``e2`` and ``p`` and keep only
the molecule-graph branch.  The head ends in ReLU, so spectra are
nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .autograd import Tensor, concat_columns
from .chem import Molecule
from .descriptors import FP_BITS, fnv1a64, path_fingerprint
from .elements import ELEMENTS
from .hetero import HeteroMotifGraph, QueryOverlay, attach_query, sample_khop
from .layers import GCNLayer, GINLayer, Linear, MLP, gcn_normalize
from .mining import MotifVocabulary, motif_occurrences
from .spectra import M_MAX, Spectrum

VARIANTS = ("moms_gcn", "moms_gin", "gcn_only", "gin_only")

MAX_DEGREE = 6
MAX_IMPLICIT_H = 4
ATOM_FEATURE_DIM = len(ELEMENTS) + (MAX_DEGREE + 1) + 1 + 1 + 1 + (MAX_IMPLICIT_H + 1)

_ELEMENT_INDEX = {el: i for i, el in enumerate(ELEMENTS)}


class ConfigError(ValueError):
    """Invalid model configuration."""


@dataclass
class ModelConfig:
    """Hyperparameters of the predictor and its training loop."""

    variant: str = "moms_gcn"
    vocab_size: int = 300
    sampler_sizes: tuple[int, int, int] = (10, 5, 5)
    hidden: int = 128
    molecule_layers: int = 3
    hetero_layers: int = 3
    head_layers: int = 2
    out_bins: int = M_MAX
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 100
    patience: int = 10
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.sampler_sizes = tuple(int(s) for s in self.sampler_sizes)
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        positive = {
            "vocab_size": self.vocab_size,
            "hidden": self.hidden,
            "molecule_layers": self.molecule_layers,
            "hetero_layers": self.hetero_layers,
            "head_layers": self.head_layers,
            "out_bins": self.out_bins,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "patience": self.patience,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if not self.sampler_sizes or any(s <= 0 for s in self.sampler_sizes):
            raise ConfigError(f"sampler sizes must be positive, got {self.sampler_sizes}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    @property
    def uses_motif_branch(self) -> bool:
        return self.variant in ("moms_gcn", "moms_gin")

    @property
    def molecule_gnn_kind(self) -> str:
        return "gin" if self.variant in ("moms_gin", "gin_only") else "gcn"

    def to_dict(self) -> dict:
        data = asdict(self)
        data["sampler_sizes"] = list(self.sampler_sizes)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)



def atom_features(mol: Molecule, dtype=np.float64) -> np.ndarray:
    """Per-atom feature rows: element, degree, charge, flags, hydrogen count."""
    rows = np.zeros((mol.num_atoms, ATOM_FEATURE_DIM), dtype=dtype)
    for i, atom in enumerate(mol.atoms):
        col = 0
        rows[i, col + _ELEMENT_INDEX[atom.element]] = 1.0
        col += len(ELEMENTS)
        rows[i, col + min(mol.degree(i), MAX_DEGREE)] = 1.0
        col += MAX_DEGREE + 1
        rows[i, col] = atom.formal_charge
        col += 1
        rows[i, col] = 1.0 if atom.aromatic else 0.0
        col += 1
        rows[i, col] = 1.0 if atom.in_ring else 0.0
        col += 1
        rows[i, col + min(atom.hydrogens, MAX_IMPLICIT_H)] = 1.0
    return rows


def molecule_adjacency(mol: Molecule, dtype=np.float64) -> np.ndarray:
    adj = np.zeros((mol.num_atoms, mol.num_atoms), dtype=dtype)
    for bond in mol.bonds:
        adj[bond.a, bond.b] = 1.0
        adj[bond.b, bond.a] = 1.0
    return adj


class SpectrumModel:
    """Parameters plus frozen data (vocabulary, motif matrix, training graph)."""

    def __init__(self, config: ModelConfig, vocab: MotifVocabulary,
                 motif_matrix: np.ndarray, graph: HeteroMotifGraph,
                 corpus=None):
        if motif_matrix.shape != (len(vocab), M_MAX):
            raise ConfigError(
                f"motif matrix shape {motif_matrix.shape} does not match "
                f"vocabulary size {len(vocab)}"
            )
        self.config = config
        self.vocab = vocab
        self.motif_matrix = np.asarray(motif_matrix, dtype=np.float32)
        self.graph = graph
        self.corpus = tuple(corpus) if corpus is not None else None
        if self.corpus is not None:
            ids = tuple(m.id for m in self.corpus)
            if ids != graph.molecule_ids:
                raise ConfigError("corpus molecule ids do not match the graph")
        self._node_of_id = {mol_id: i for i, mol_id in enumerate(graph.molecule_ids)}
        # Occurrence counts and molecular weights live on very different
        # scales; rescale each feature column by its max over the frozen
        # graph so GIN activations stay tame.
        col_max = np.abs(graph.features).max(axis=0)
        self._feature_scale = 1.0 / np.maximum(col_max, 1.0)
        self._mol_cache: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._subgraph_cache: dict = {}
        self._overlay_cache: dict[str, QueryOverlay] = {}
        self._prior_cache: dict[str, np.ndarray] = {}

        dtype = config.np_dtype
        rng = np.random.default_rng(config.seed)
        hidden = config.hidden

        self.mol_layers = []
        in_dim = ATOM_FEATURE_DIM
        for _ in range(config.molecule_layers):
            if config.molecule_gnn_kind == "gcn":
                self.mol_layers.append(GCNLayer(in_dim, hidden, rng, dtype))
            else:
                self.mol_layers.append(GINLayer(in_dim, hidden, rng, dtype))
            in_dim = hidden
        self.fp_proj = Linear(FP_BITS, hidden, rng, dtype)

        head_in = 2 * hidden
        if config.uses_motif_branch:
            feature_dim = graph.features.shape[1]
            self.hetero_embed = MLP([feature_dim, hidden, hidden], rng, dtype)
            self.hetero_layers = [
                GINLayer(hidden, hidden, rng, dtype) for _ in range(config.hetero_layers)
            ]
            self.prior_proj = Linear(M_MAX, hidden, rng, dtype)
            head_in += 2 * hidden

        head_dims = [head_in] + [hidden] * (config.head_layers - 1) + [config.out_bins]
        self.head = MLP(head_dims, rng, dtype, final_relu=True, final_bias_init=0.01)

    # ----- parameter bookkeeping --------------------------------------------

    def named_params(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, layer in enumerate(self.mol_layers):
            params.update(layer.named_params(f"mol_gnn.{i}"))
        params.update(self.fp_proj.named_params("fp_proj"))
        if self.config.uses_motif_branch:
            params.update(self.hetero_embed.named_params("hetero_embed"))
            for i, layer in enumerate(self.hetero_layers):
                params.update(layer.named_params(f"hetero_gnn.{i}"))
            params.update(self.prior_proj.named_params("prior_proj"))
        params.update(self.head.named_params("head"))
        return params

    def output_bias(self) -> Tensor:
        """The bias of the head's final affine layer, one entry per bin."""
        return self.head.layers[-1].bias

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.named_params()
        missing = set(params) - set(arrays)
        extra = set(arrays) - set(params)
        if missing or extra:
            raise ConfigError(
                f"parameter names do not match checkpoint "
                f"(missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        for name, tensor in params.items():
            array = arrays[name].astype(tensor.data.dtype, copy=False)
            if array.shape != tensor.data.shape:
                raise ConfigError(
                    f"parameter {name!r} shape {array.shape} does not match "
                    f"{tensor.data.shape}"
                )
            tensor.data = array.copy()

    # ----- cached per-molecule inputs ---------------------------------------

    def _molecule_inputs(self, mol: Molecule):
        cached = self._mol_cache.get(mol.id) if mol.id else None
        if cached is not None:
            return cached
        dtype = self.config.np_dtype
        feats = atom_features(mol, dtype)
        adj = molecule_adjacency(mol, dtype)
        if self.config.molecule_gnn_kind == "gcn":
            adj = gcn_normalize(adj, dtype)
        fp = path_fingerprint(mol).bits.astype(dtype).reshape(1, -1)
        value = (feats, adj, fp)
        if mol.id:
            self._mol_cache[mol.id] = value
        return value

    def _graph_view(self, mol: Molecule):
        """(graph_like, seed node, cache key) for a molecule.

        Training-corpus molecules resolve to their own node in the frozen
        graph; anything else gets a cached non-destructive query overlay.
        """
        node = self._node_of_id.get(mol.id)
        if node is not None:
            return self.graph, node, ("node", node)
        overlay = self._overlay_cache.get(mol.id) if mol.id else None
        if overlay is None:
            overlay = attach_query(self.graph, mol, self.vocab)
            if mol.id:
                self._overlay_cache[mol.id] = overlay
        return overlay, overlay.node, ("query", mol.id)

    def _sampled_subgraph(self, graph_like, seed_node: int, cache_key, sample_epoch=None):
        """(subgraph, feature matrix, adjacency, seed row), cached when canonical.

        The sampler is seeded from the config seed plus a stable per-node
        value, so the same molecule always sees the same neighborhood at
        inference and runs are reproducible end to end.  During training a
        ``sample_epoch`` is mixed into the seed instead, which redraws the
        neighborhood every epoch the way minibatch neighbor sampling does;
        those draws are not cached.
        """
        if sample_epoch is None:
            cached = self._subgraph_cache.get(cache_key)
            if cached is not None:
                return cached
        if cache_key[0] == "node":
            entropy = (self.config.seed, int(cache_key[1]))
        else:
            entropy = (self.config.seed, fnv1a64(str(cache_key[1]).encode()))
        if sample_epoch is not None:
            entropy = entropy + (1 + int(sample_epoch),)
        sub = sample_khop(
            graph_like, [seed_node], self.config.sampler_sizes, np.random.default_rng(entropy)
        )
        dtype = self.config.np_dtype
        feats = (sub.feature_matrix(graph_like) * self._feature_scale).astype(dtype)
        adj = sub.dense_adjacency().astype(dtype)
        value = (sub, feats, adj, sub.node_position()[seed_node])
        if sample_epoch is None:
            self._subgraph_cache[cache_key] = value
        return value

    def occurrence_vector(self, mol: Molecule) -> np.ndarray:
        node = self._node_of_id.get(mol.id)
        if node is not None:
            return self.graph.occurrences[node]
        graph_like, _, _ = self._graph_view(mol)
        return graph_like.query_occurrences

    # ----- forward ----------------------------------------------------------

    def head_input_tensor(self, mol: Molecule, sample_epoch=None) -> Tensor:
        """The concatenated embedding row the head decodes."""
        dtype = self.config.np_dtype
        feats, adj, fp = self._molecule_inputs(mol)
        h = Tensor(feats)
        for layer in self.mol_layers:
            h = layer(h, adj)
        pooled = h.mean_rows()
        parts = [concat_columns([pooled, self.fp_proj(Tensor(fp))])]

        if self.config.uses_motif_branch:
            graph_like, seed_node, cache_key = self._graph_view(mol)
            _, sub_feats, sub_adj, seed_row = self._sampled_subgraph(
                graph_like, seed_node, cache_key, sample_epoch=sample_epoch
            )
            hs = self.hetero_embed(Tensor(sub_feats))
            for layer in self.hetero_layers:
                hs = layer(hs, sub_adj)
            parts.append(hs.take_rows([seed_row]))

            prior = self._prior_cache.get(mol.id) if mol.id else None
            if prior is None:
                occ = self.occurrence_vector(mol).astype(np.float64)
                prior = occ @ self.motif_matrix.astype(np.float64)
                norm = np.linalg.norm(prior)
                if norm > 0:
                    prior = prior / norm
                prior = prior.astype(dtype).reshape(1, -1)
                if mol.id:
                    self._prior_cache[mol.id] = prior
            parts.append(self.prior_proj(Tensor(prior)))

        return concat_columns(parts)

    def forward_tensor(self, mol: Molecule, sample_epoch=None) -> Tensor:
        """Full forward pass returning the (1, out_bins) activation tensor."""
        return self.head(self.head_input_tensor(mol, sample_epoch=sample_epoch))

    def predict(self, mol: Molecule) -> Spectrum:
        if self.config.out_bins != M_MAX:
            raise ConfigError(
                f"predict() requires out_bins == {M_MAX}, got {self.config.out_bins}"
            )
        out = self.forward_tensor(mol)
        return Spectrum(out.data.reshape(-1).astype(np.float64))
