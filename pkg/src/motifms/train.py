"""Scaffold-aware splitting, the Adam training loop, and batched prediction.

Training is transductive over the motif graph: the graph is built once from
the train and validation molecules, queries outside it are attached as
overlays at prediction time.  The loop minimizes mean cosine distance
between predicted and reference spectra, tracks validation similarity every
epoch, keeps the best parameters seen, and stops early after a patience
window without improvement.
"""

from __future__ import annotations

import json
import os
import time
import logging
from dataclasses import dataclass, asdict
from concurrent.futures import ThreadPoolExecutor
from functools import reduce

import numpy as np

from .autograd import Tensor, cosine_distance_loss
from .chem import Molecule, parse_smiles
from .checkpoint import load_tensors, save_tensors
from .descriptors import murcko_scaffold
from .hetero import build_graph
from .mining import MotifVocabulary, load_vocabulary, mine_vocabulary, save_vocabulary
from .model import ModelConfig, SpectrumModel
from .motif_spectra import load_motif_matrix, motif_spectrum_matrix, save_motif_matrix
from .optim import Adam
from .spectra import M_MAX, Spectrum, ZeroSpectrumError, cosine_similarity

LOGGER = logging.getLogger("motifms.train")

THREADS_ENV_VAR = "MOMS_THREADS"


class TrainingError(RuntimeError):
    """Anything that prevents a training run from proceeding."""


class DataMismatchError(TrainingError):
    """Molecules and reference spectra do not line up."""


# ---------------------------------------------------------------------------
# Splitting


def scaffold_split(molecules, fractions=(0.7, 0.2, 0.1), seed: int = 0):
    """Partition molecules into (train, valid, test) by ring scaffold.

    All molecules sharing a scaffold land in the same fold, so test scaffolds
    are unseen during training.  Scaffold groups are ordered largest first
    (ties broken by a seeded shuffle) and assigned greedily: a fold keeps
    receiving whole groups until it has reached its rounded size target.
    """
    molecules = list(molecules)
    if not molecules:
        raise TrainingError("cannot split an empty molecule list")
    if len(fractions) != 3:
        raise TrainingError("fractions must have exactly three entries")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise TrainingError(f"fractions must be nonnegative and sum to 1, got {fractions}")

    groups: dict[str, list[Molecule]] = {}
    for mol in molecules:
        groups.setdefault(murcko_scaffold(mol), []).append(mol)

    keys = sorted(groups)
    rng = np.random.default_rng(seed)
    shuffled = [keys[i] for i in rng.permutation(len(keys))]
    ordered = sorted(shuffled, key=lambda k: -len(groups[k]))

    n = len(molecules)
    targets = (round(fractions[0] * n), round(fractions[1] * n))
    folds: tuple[list[Molecule], ...] = ([], [], [])
    fold = 0
    for key in ordered:
        while fold < 2 and len(folds[fold]) >= targets[fold]:
            fold += 1
        folds[fold].extend(groups[key])
    return folds


def constant_mean_baseline(spectra) -> Spectrum:
    """The spectrum every baseline prediction returns: the bin-wise mean."""
    stacked = [s.bins for s in spectra]
    if not stacked:
        raise TrainingError("the baseline needs at least one reference spectrum")
    return Spectrum(np.mean(stacked, axis=0))


# ---------------------------------------------------------------------------
# Training loop


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_similarity: float | None
    wall_ms: float


@dataclass
class TrainResult:
    model: SpectrumModel
    history: list[EpochRecord]
    split: tuple[list[Molecule], list[Molecule], list[Molecule]]
    best_epoch: int
    best_valid: float | None


def _check_targets(molecules, spectra: dict[str, Spectrum]) -> None:
    missing = [m.id for m in molecules if m.id not in spectra]
    if missing:
        shown = ", ".join(missing[:5])
        raise DataMismatchError(
            f"{len(missing)} molecule(s) have no reference spectrum: {shown}"
        )
    empty = [m.id for m in molecules if spectra[m.id].total_intensity() == 0.0]
    if empty:
        raise DataMismatchError(
            f"reference spectra with zero intensity: {', '.join(empty[:5])}"
        )


def mean_similarity(model: SpectrumModel, molecules, spectra: dict[str, Spectrum]) -> float:
    """Mean cosine similarity of predictions; all-zero predictions score 0."""
    sims = []
    for mol in molecules:
        try:
            sims.append(cosine_similarity(model.predict(mol), spectra[mol.id]))
        except ZeroSpectrumError:
            sims.append(0.0)
    return float(np.mean(sims)) if sims else float("nan")


def solve_readout(model: SpectrumModel, molecules, target_of, ridge: float = 1e-6) -> None:
    """Re-solve the head's final affine layer by ridge least squares.

    Holding every other parameter fixed, the last layer mapping penultimate
    activations to bins has a closed-form minimizer against the unit-norm
    targets.  Gradient steps alone leave bins stranded below the final ReLU
    with no gradient path back; alternating in this exact solve recovers
    them, after which cosine-loss training resumes as usual.
    """
    final = model.head.layers[-1]
    rows, targets = [], []
    for mol in molecules:
        phi = model.head.hidden_forward(model.head_input_tensor(mol)).data
        rows.append(phi.reshape(-1).astype(np.float64))
        t = target_of[mol.id].data.reshape(-1).astype(np.float64)
        targets.append(t / np.linalg.norm(t))
    design = np.hstack([np.stack(rows), np.ones((len(rows), 1))])
    t_mat = np.stack(targets)
    gram = design.T @ design
    lam = ridge * np.trace(gram) / gram.shape[0]
    solution = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), design.T @ t_mat)
    dtype = final.weight.data.dtype
    final.weight.data = solution[:-1].astype(dtype)
    final.bias.data = solution[-1:].astype(dtype)


def train(molecules, spectra: dict[str, Spectrum], config: ModelConfig,
          vocab: MotifVocabulary | None = None, split=None,
          log_path=None) -> TrainResult:
    """Fit a model and return it with its per-epoch history.

    ``spectra`` maps molecule id to reference spectrum.  When ``split`` is
    omitted a scaffold split with the config seed is used.  ``log_path``
    appends one JSON object per epoch with keys epoch, train_loss,
    valid_similarity and wall_ms.
    """
    if config.out_bins != M_MAX:
        raise TrainingError(
            f"training against spectra requires out_bins == {M_MAX}"
        )
    molecules = list(molecules)
    if split is None:
        split = scaffold_split(molecules, seed=config.seed)
    train_set, valid_set, test_set = (list(split[0]), list(split[1]), list(split[2]))
    if not train_set:
        raise TrainingError("the training fold is empty")
    _check_targets(train_set + valid_set, spectra)

    # The motif graph covers train+valid only; held-out molecules are
    # attached as query overlays at inference so they never leak into the
    # corpus statistics.
    graph_mols = train_set + valid_set
    if vocab is None:
        vocab = mine_vocabulary(graph_mols, config.vocab_size)
    graph = build_graph(graph_mols, vocab)
    matrix = motif_spectrum_matrix(vocab)
    model = SpectrumModel(config, vocab, matrix, graph, corpus=graph_mols)

    dtype = config.np_dtype
    target_of = {
        m.id: Tensor(spectra[m.id].bins.reshape(1, -1).astype(dtype))
        for m in train_set + valid_set
    }


    params = model.named_params()
    opt = Adam(params, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    # Alternating schedule: exact readout solves partway through and at the
    # final epoch, with cosine-loss gradient epochs in between.
    solve_epochs = {
        max(1, int(config.epochs * 0.6)),
        max(1, int(config.epochs * 0.85)),
        config.epochs,
    }

    history: list[EpochRecord] = []
    best_valid: float | None = None
    best_loss = float("inf")
    best_epoch = 0
    best_arrays: dict[str, np.ndarray] | None = None
    stall = 0
    log_handle = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            order = rng.permutation(len(train_set))
            loss_sum = 0.0
            for lo in range(0, len(order), config.batch_size):
                batch = [train_set[i] for i in order[lo:lo + config.batch_size]]
                opt.zero_grad()
                losses = [
                    cosine_distance_loss(
                        model.forward_tensor(m, sample_epoch=epoch), target_of[m.id]
                    )
                    for m in batch
                ]
                batch_loss = reduce(lambda a, b: a + b, losses) / float(len(losses))
                batch_loss.backward()
                opt.step()
                loss_sum += batch_loss.item() * len(batch)
            if epoch in solve_epochs:
                solve_readout(model, train_set, target_of)
            train_loss = loss_sum / len(train_set)

            valid_sim = mean_similarity(model, valid_set, spectra) if valid_set else None
            wall_ms = (time.perf_counter() - started) * 1000.0
            record = EpochRecord(epoch, train_loss, valid_sim, wall_ms)
            history.append(record)
            if log_handle is not None:
                log_handle.write(json.dumps(asdict(record)) + "\n")
                log_handle.flush()
            LOGGER.info(
                "epoch %d: train_loss=%.4f valid_similarity=%s (%.0f ms)",
                epoch, train_loss,
                "n/a" if valid_sim is None else f"{valid_sim:.4f}", wall_ms,
            )

            if valid_set:
                improved = best_valid is None or valid_sim > best_valid
            else:
                improved = train_loss < best_loss
            if improved:
                best_valid = valid_sim
                best_loss = train_loss
                best_epoch = epoch
                best_arrays = {k: t.data.copy() for k, t in params.items()}
                stall = 0
            else:
                stall += 1
                if stall >= config.patience:
                    LOGGER.info("stopping early at epoch %d", epoch)
                    break
    finally:
        if log_handle is not None:
            log_handle.close()

    if best_arrays is not None:
        model.load_param_arrays(best_arrays)
    return TrainResult(model, history, (train_set, valid_set, test_set),
                       best_epoch, best_valid)


# ---------------------------------------------------------------------------
# Batched prediction


def thread_budget(max_workers=None) -> int:
    """Worker count: the explicit argument, else the environment cap, else 1."""
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get(THREADS_ENV_VAR, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise TrainingError(
                f"{THREADS_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    return 1


def predict_batch(model: SpectrumModel, molecules, max_workers=None):
    """Predict spectra for many molecules, preserving input order.

    Returns ``(spectra, failures)`` where ``spectra[i]`` is None for any
    molecule whose prediction failed and ``failures`` lists ``(id, message)``
    pairs.  Worker threads are capped by ``max_workers`` or the
    ``MOMS_THREADS`` environment variable.
    """
    molecules = list(molecules)
    workers = thread_budget(max_workers)

    def run(indexed):
        i, mol = indexed
        try:
            return i, model.predict(mol), None
        except Exception as exc:  # noqa: BLE001 - reported per molecule
            return i, None, f"{type(exc).__name__}: {exc}"

    started = time.perf_counter()
    items = list(enumerate(molecules))
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, items))
    else:
        outcomes = [run(item) for item in items]

    results: list[Spectrum | None] = [None] * len(molecules)
    failures: list[tuple[str, str]] = []
    for count, (i, spec, err) in enumerate(outcomes, start=1):
        if err is None:
            results[i] = spec
        else:
            failures.append((molecules[i].id, err))
        if count % 1000 == 0:
            rate = count / (time.perf_counter() - started)
            LOGGER.info("predicted %d molecules (%.1f/s)", count, rate)
    return results, failures


# ---------------------------------------------------------------------------
# Model persistence

_CONFIG_FILE = "config.json"
_WEIGHTS_MANIFEST = "weights.json"
_WEIGHTS_PAYLOAD = "weights.bin"
_VOCAB_FILE = "vocabulary.tsv"
_MATRIX_FILE = "motif_matrix.bin"
_CORPUS_FILE = "graph_corpus.tsv"


def save_model(model: SpectrumModel, directory) -> None:
    """Write a self-contained checkpoint directory.

    Besides the weights it stores the config, the motif vocabulary, the
    motif spectrum matrix and the graph corpus, so a loaded model predicts
    without access to the original training data.
    """
    if model.corpus is None:
        raise TrainingError("the model has no corpus attached; cannot checkpoint")
    os.makedirs(directory, exist_ok=True)
    join = lambda name: os.path.join(directory, name)  # noqa: E731
    with open(join(_CONFIG_FILE), "w", encoding="utf-8") as handle:
        json.dump(model.config.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    tensors = {name: t.data for name, t in model.named_params().items()}
    save_tensors(tensors, join(_WEIGHTS_MANIFEST), join(_WEIGHTS_PAYLOAD))
    save_vocabulary(model.vocab, join(_VOCAB_FILE))
    save_motif_matrix(model.motif_matrix, join(_MATRIX_FILE))
    with open(join(_CORPUS_FILE), "w", encoding="utf-8") as handle:
        for mol in model.corpus:
            source = mol.smiles
            if not source:
                raise TrainingError(f"molecule {mol.id!r} has no source text")
            handle.write(f"{mol.id}\t{source}\n")


def load_model(directory) -> SpectrumModel:
    """Rebuild a model from a checkpoint directory written by save_model."""
    join = lambda name: os.path.join(directory, name)  # noqa: E731
    for name in (_CONFIG_FILE, _WEIGHTS_MANIFEST, _WEIGHTS_PAYLOAD,
                 _VOCAB_FILE, _MATRIX_FILE, _CORPUS_FILE):
        if not os.path.exists(join(name)):
            raise TrainingError(f"checkpoint is missing {name}")
    with open(join(_CONFIG_FILE), encoding="utf-8") as handle:
        config = ModelConfig.from_dict(json.load(handle))
    vocab = load_vocabulary(join(_VOCAB_FILE))
    matrix = load_motif_matrix(join(_MATRIX_FILE))
    corpus = []
    with open(join(_CORPUS_FILE), encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            mol_id, smiles = line.split("\t", 1)
            corpus.append(parse_smiles(smiles, mol_id=mol_id))
    graph = build_graph(corpus, vocab)
    model = SpectrumModel(config, vocab, matrix, graph, corpus=corpus)
    arrays, _ = load_tensors(join(_WEIGHTS_MANIFEST), join(_WEIGHTS_PAYLOAD))
    model.load_param_arrays(arrays)
    return model
