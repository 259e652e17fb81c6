"""Batch command-line surface for the motif-spectrum pipeline.

Subcommands cover the full workflow: ``mine`` a motif vocabulary from a
corpus, ``build-graph`` to export the heterogeneous motif graph,
``train`` a predictor from a JSON run config, ``predict`` spectra for new
molecules, ``eval`` aligned predictions against truth, and ``rank`` the
library-search experiment.  Diagnostics go to stderr; stdout carries only
data and summaries.  Exit codes: 0 success, 2 for configuration, schema
or file-format problems, 3 for data mismatches between otherwise valid
inputs.  ``MOMS_THREADS`` caps worker parallelism where supported.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .chem import CorpusError, SmilesError, read_corpus
from .evaluate import (
    DEFAULT_TOP_PERCENT,
    RankingError,
    ReferenceEntry,
    build_ranking_task,
    evaluate_similarity,
    format_ranking_summary,
    format_summary_table,
    plot_rank_histogram,
    rank_candidates,
    ranking_report,
    similarity_report,
    write_json_report,
)
from .hetero import HeteroGraphError, build_graph, export_graph
from .mining import (
    DEFAULT_VOCAB_SIZE,
    MiningError,
    load_vocabulary,
    mine_vocabulary,
    save_vocabulary,
)
from .model import ConfigError, ModelConfig
from .spectra import (
    FormatError,
    Spectrum,
    SpectrumError,
    bin_spectrum,
    read_msp_file,
    spectrum_to_peaklist,
    write_msp_file,
)
from .train import (
    DataMismatchError,
    TrainingError,
    load_model,
    mean_similarity,
    predict_batch,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

RUN_CONFIG_KEYS = frozenset(
    {"model", "corpus", "spectra", "vocabulary", "checkpoint", "output_dir"}
)
RUN_CONFIG_REQUIRED = ("model", "corpus", "spectra", "checkpoint")

_CONFIG_ERRORS = (
    ConfigError,
    CorpusError,
    SmilesError,
    MiningError,
    HeteroGraphError,
    json.JSONDecodeError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
)
_DATA_ERRORS = (DataMismatchError, RankingError, SpectrumError)


class RunConfigError(ValueError):
    """A run config file violates the schema."""


def load_run_config(path) -> dict:
    """Parse and schema-check a JSON run config.

    Required keys: model (hyperparameter object), corpus, spectra,
    checkpoint.  Optional: vocabulary (pre-mined motif file), output_dir
    (epoch logs land there).  Unknown keys are rejected outright so a
    typo cannot silently disable an option.
    """
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise RunConfigError("run config must be a JSON object")
    unknown = set(data) - RUN_CONFIG_KEYS
    if unknown:
        raise RunConfigError(f"unknown run config keys: {sorted(unknown)}")
    missing = [key for key in RUN_CONFIG_REQUIRED if key not in data]
    if missing:
        raise RunConfigError(f"run config is missing keys: {missing}")
    if not isinstance(data["model"], dict):
        raise RunConfigError("run config key 'model' must be an object")
    for key in RUN_CONFIG_KEYS - {"model"}:
        if key in data and not isinstance(data[key], str):
            raise RunConfigError(f"run config key {key!r} must be a path string")
    return data


def _load_spectra(path) -> dict[str, Spectrum]:
    """Read an MSP library into id -> binned spectrum, id taken per record."""
    spectra: dict[str, Spectrum] = {}
    for record in read_msp_file(path):
        key = record.compound_id or record.name
        if not key:
            raise DataMismatchError(f"{path}: record without a name or id")
        if key in spectra:
            raise DataMismatchError(f"{path}: duplicate spectrum id {key!r}")
        spectra[key] = bin_spectrum(record)
    if not spectra:
        raise DataMismatchError(f"{path}: no spectra found")
    return spectra


def _entries_from_msp(path) -> list[ReferenceEntry]:
    entries = []
    for record in read_msp_file(path):
        key = record.compound_id or record.name
        if not key:
            raise DataMismatchError(f"{path}: record without a name or id")
        entries.append(
            ReferenceEntry(
                compound_id=key,
                spectrum=bin_spectrum(record),
                precursor_mass=record.precursor_mz,
            )
        )
    if not entries:
        raise DataMismatchError(f"{path}: no spectra found")
    return entries


def cmd_mine(args) -> int:
    corpus = read_corpus(args.corpus)
    vocab = mine_vocabulary(corpus, args.k)
    save_vocabulary(vocab, args.out)
    freqs = [entry.frequency for entry in vocab.entries]
    marks = sorted({1, max(1, len(freqs) // 4), max(1, len(freqs) // 2), len(freqs)})
    rows = [(rank, freqs[rank - 1], vocab.entries[rank - 1].key) for rank in marks]
    print(f"mined {len(vocab)} motifs from {len(corpus)} molecules -> {args.out}")
    print("frequency decay (rank, corpus frequency, motif):")
    print(format_summary_table(rows, ("rank", "frequency", "motif")))
    return EXIT_OK


def cmd_build_graph(args) -> int:
    corpus = read_corpus(args.corpus)
    vocab = load_vocabulary(args.vocab)
    graph = build_graph(corpus, vocab)
    os.makedirs(args.out, exist_ok=True)
    edges_path = os.path.join(args.out, "edges.tsv")
    manifest_path = os.path.join(args.out, "manifest.json")
    export_graph(graph, edges_path, manifest_path, vocab_path=str(args.vocab))
    print(
        f"graph: {graph.n_molecules} molecule nodes + {graph.n_motifs} motif nodes, "
        f"{len(graph.edges())} edges -> {args.out}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    run = load_run_config(args.config)
    config = ModelConfig.from_dict(run["model"])
    corpus = read_corpus(run["corpus"])
    spectra = _load_spectra(run["spectra"])
    vocab = load_vocabulary(run["vocabulary"]) if "vocabulary" in run else None
    log_path = None
    if "output_dir" in run:
        os.makedirs(run["output_dir"], exist_ok=True)
        log_path = os.path.join(run["output_dir"], "train_log.jsonl")
    result = train(corpus, spectra, config, vocab=vocab, log_path=log_path)
    save_model(result.model, run["checkpoint"])
    train_set, valid_set, _ = result.split
    sims = [f"train={mean_similarity(result.model, train_set, spectra):.4f}"]
    if valid_set:
        sims.append(f"valid={mean_similarity(result.model, valid_set, spectra):.4f}")
    print(
        f"trained {config.variant} ({len(result.history)} epochs, "
        f"best epoch {result.best_epoch}): "
        + " ".join(sims)
        + f" -> {run['checkpoint']}"
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.checkpoint)
    corpus = read_corpus(getattr(args, "in"))
    spectra, failures = predict_batch(model, corpus)
    records = []
    for mol, spec in zip(corpus, spectra):
        if spec is not None:
            records.append(spectrum_to_peaklist(spec, name=mol.id, compound_id=mol.id))
    write_msp_file(records, args.out)
    print(f"predicted {len(records)}/{len(corpus)} spectra -> {args.out}")
    if failures:
        for mol_id, message in failures:
            print(f"prediction failed for {mol_id}: {message}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_eval(args) -> int:
    predicted = _load_spectra(args.pred)
    truth = _load_spectra(args.truth)
    missing = [key for key in truth if key not in predicted]
    if missing:
        raise DataMismatchError(
            f"{len(missing)} truth spectra lack predictions: {', '.join(missing[:5])}"
        )
    ids = sorted(truth)
    report = evaluate_similarity([predicted[i] for i in ids], [truth[i] for i in ids])
    if args.out:
        write_json_report(similarity_report(report, ids), args.out)
    print(f"mean cosine similarity: {report}")
    return EXIT_OK


def cmd_rank(args) -> int:
    queries = _entries_from_msp(args.queries)
    references = _entries_from_msp(args.refs)
    task = build_ranking_task(queries, references, mass_filter=args.mass_filter)
    results = rank_candidates(task)
    if args.out:
        write_json_report(ranking_report(results, k=args.top_percent), args.out)
    if args.plot:
        plot_rank_histogram(results, args.plot)
    print(format_ranking_summary(results, k=args.top_percent))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motifms",
        description="Motif-graph mass-spectrum prediction pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine a motif vocabulary from a corpus")
    p.add_argument("--corpus", required=True, help="id<TAB>SMILES corpus file")
    p.add_argument("--k", type=int, default=DEFAULT_VOCAB_SIZE,
                   help="vocabulary size (default %(default)s)")
    p.add_argument("--out", required=True, help="vocabulary output file")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("build-graph", help="build and export the motif graph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True, help="vocabulary file from 'mine'")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train a model from a JSON run config")
    p.add_argument("--config", required=True, help="run config JSON file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict spectra for a corpus")
    p.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p.add_argument("--in", required=True, help="id<TAB>SMILES corpus file")
    p.add_argument("--out", required=True, help="MSP output file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against truth spectra")
    p.add_argument("--pred", required=True, help="predicted MSP file")
    p.add_argument("--truth", required=True, help="reference MSP file")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="library-search ranking experiment")
    p.add_argument("--queries", required=True, help="query MSP file")
    p.add_argument("--refs", required=True, help="reference MSP file")
    p.add_argument("--top-percent", type=float, default=DEFAULT_TOP_PERCENT,
                   help="top-k%% cutoff (default %(default)s)")
    p.add_argument("--mass-filter", action="store_true",
                   help="restrict candidates to +/- 5 Da precursor mass")
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--plot", help="SVG rank-histogram path")
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RunConfigError, FormatError) + _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
