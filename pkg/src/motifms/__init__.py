"""Motif-aware graph neural networks for small-molecule mass spectra.

The pipeline runs corpus -> motif vocabulary -> heterogeneous motif graph
-> dual-GNN spectrum predictor -> similarity evaluation and library-search
ranking.  Each stage lives in its own module; this package root re-exports
the main entry points.
"""

from .chem import Molecule, parse_smiles, read_corpus, to_smiles
from .canon import canonical_key
from .descriptors import (
    molecular_weight,
    monoisotopic_mass,
    murcko_scaffold,
    path_fingerprint,
)
from .evaluate import (
    RankingTask,
    ReferenceEntry,
    build_ranking_task,
    evaluate_similarity,
    rank_candidates,
    top_k_percent,
)
from .fixture import fixture_molecules, fixture_spectra, write_fixture_files
from .hetero import build_graph, export_graph, pmi, sample_khop, tf_idf
from .mining import (
    MotifVocabulary,
    load_vocabulary,
    mine_vocabulary,
    motif_occurrences,
    save_vocabulary,
)
from .model import ModelConfig, SpectrumModel
from .motif_spectra import build_motif_spectrum, motif_spectrum_matrix
from .spectra import (
    M_MAX,
    PeakList,
    Spectrum,
    bin_spectrum,
    cosine_distance,
    cosine_similarity,
    normalize,
    read_msp_file,
    write_msp_file,
)
from .train import (
    TrainResult,
    constant_mean_baseline,
    load_model,
    predict_batch,
    save_model,
    scaffold_split,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "M_MAX",
    "ModelConfig",
    "Molecule",
    "MotifVocabulary",
    "PeakList",
    "RankingTask",
    "ReferenceEntry",
    "Spectrum",
    "SpectrumModel",
    "TrainResult",
    "bin_spectrum",
    "build_graph",
    "build_motif_spectrum",
    "build_ranking_task",
    "canonical_key",
    "constant_mean_baseline",
    "cosine_distance",
    "cosine_similarity",
    "evaluate_similarity",
    "export_graph",
    "fixture_molecules",
    "fixture_spectra",
    "load_model",
    "load_vocabulary",
    "mine_vocabulary",
    "molecular_weight",
    "monoisotopic_mass",
    "motif_occurrences",
    "motif_spectrum_matrix",
    "murcko_scaffold",
    "normalize",
    "parse_smiles",
    "path_fingerprint",
    "pmi",
    "predict_batch",
    "rank_candidates",
    "read_corpus",
    "read_msp_file",
    "sample_khop",
    "save_model",
    "save_vocabulary",
    "scaffold_split",
    "tf_idf",
    "to_smiles",
    "top_k_percent",
    "train",
    "write_fixture_files",
    "write_msp_file",
    "__version__",
]
