"""Spectrum-similarity scoring and the library-search ranking experiment.

Evaluation has two layers.  ``evaluate_similarity`` scores aligned
prediction/truth pairs with cosine similarity and reports mean and
population standard deviation, with a helper to aggregate repeated-seed
runs.  ``RankingTask`` frames library search: every query spectrum is
scored against a shared reference set, the references are sorted by
descending similarity, and the rank of the true match feeds the top-k%
metric (fraction of queries whose true match lands in the best
``ceil(k% of candidates)``).  Ties are broken pessimistically, so
reported ranks never flatter the model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .spectra import LengthMismatchError, Spectrum, cosine_similarity

MIN_CANDIDATES = 20
DEFAULT_TOP_PERCENT = 5.0
PRECURSOR_WINDOW_DA = 5.0


class RankingError(ValueError):
    """Base class for ranking-task failures."""


class MissingTrueMatchError(RankingError):
    """A query's true match is absent from (or duplicated in) its candidates."""


class TooFewCandidatesError(RankingError):
    """A query has fewer candidates than the top-k%% metric can resolve."""


@dataclass
class SimilarityReport:
    """Mean and population stddev over aligned prediction/truth pairs."""

    mean: float
    stddev: float
    per_pair: list[float] = field(default_factory=list)

    def __str__(self) -> str:
        return f"{self.mean:.4f} +/- {self.stddev:.4f} (n={len(self.per_pair)})"


def evaluate_similarity(predicted, truth) -> SimilarityReport:
    """Cosine similarity of aligned spectrum pairs, mean +/- population stddev.

    The two sequences must be index-aligned (same molecule at the same
    position) and of equal length; raises :class:`LengthMismatchError`
    otherwise.
    """
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise LengthMismatchError(
            f"got {len(predicted)} predictions for {len(truth)} reference spectra"
        )
    if not predicted:
        raise LengthMismatchError("cannot evaluate an empty pair of collections")
    sims = [cosine_similarity(p, t) for p, t in zip(predicted, truth)]
    return SimilarityReport(
        mean=float(np.mean(sims)), stddev=float(np.std(sims)), per_pair=sims
    )


def aggregate_seed_means(means) -> tuple[float, float]:
    """Mean and population stddev across repeated-seed run means."""
    values = np.asarray(list(means), dtype=np.float64)
    if values.size == 0:
        raise LengthMismatchError("need at least one per-seed mean to aggregate")
    return float(values.mean()), float(values.std())


@dataclass
class ReferenceEntry:
    """One library entry: the compound it belongs to plus its spectrum."""

    compound_id: str
    spectrum: Spectrum
    precursor_mass: float | None = None


@dataclass
class RankingTask:
    """Queries, a shared reference library, and per-query candidate pools.

    ``candidates[i]`` lists the reference indices eligible for query ``i``
    (all references by default, or a precursor-mass window).  Each pool
    must hold the query's true compound exactly once and at least
    :data:`MIN_CANDIDATES` entries, so a top-5% cutoff always keeps at
    least one candidate.
    """

    queries: list[ReferenceEntry]
    references: list[ReferenceEntry]
    candidates: list[list[int]]

    def validate(self) -> None:
        if len(self.candidates) != len(self.queries):
            raise RankingError(
                f"{len(self.queries)} queries but {len(self.candidates)} candidate pools"
            )
        for query, pool in zip(self.queries, self.candidates):
            if len(pool) < MIN_CANDIDATES:
                raise TooFewCandidatesError(
                    f"query {query.compound_id} has {len(pool)} candidates, "
                    f"needs at least {MIN_CANDIDATES}"
                )
            matches = sum(
                1 for idx in pool if self.references[idx].compound_id == query.compound_id
            )
            if matches != 1:
                raise MissingTrueMatchError(
                    f"query {query.compound_id} has {matches} true matches, expected 1"
                )


def build_ranking_task(queries, references, mass_filter: bool = False,
                       window: float = PRECURSOR_WINDOW_DA) -> RankingTask:
    """Assemble and validate a ranking task from query and reference entries.

    With ``mass_filter`` set, a query only keeps references whose precursor
    mass lies within ``window`` Daltons of its own; entries without a
    precursor mass are never filtered out.
    """
    queries = list(queries)
    references = list(references)
    candidates: list[list[int]] = []
    for query in queries:
        if mass_filter and query.precursor_mass is not None:
            pool = [
                idx
                for idx, ref in enumerate(references)
                if ref.precursor_mass is None
                or abs(ref.precursor_mass - query.precursor_mass) <= window
            ]
        else:
            pool = list(range(len(references)))
        candidates.append(pool)
    task = RankingTask(queries=queries, references=references, candidates=candidates)
    task.validate()
    return task


@dataclass
class QueryRank:
    """Outcome of one library search: where the true match landed."""

    compound_id: str
    rank: int
    candidate_count: int
    true_similarity: float
    best_similarity: float


def rank_candidates(task: RankingTask) -> list[QueryRank]:
    """Rank each query's candidates by descending similarity to the query.

    The true match's rank uses pessimistic tie-breaking: every candidate
    scoring strictly higher, plus every *other* candidate scoring exactly
    equal, is counted ahead of it.  Raises :class:`MissingTrueMatchError`
    (via validation) if any pool violates the task invariants.
    """
    task.validate()
    results: list[QueryRank] = []
    for query, pool in zip(task.queries, task.candidates):
        sims = np.array(
            [cosine_similarity(task.references[idx].spectrum, query.spectrum) for idx in pool]
        )
        true_pos = next(
            i for i, idx in enumerate(pool)
            if task.references[idx].compound_id == query.compound_id
        )
        true_sim = float(sims[true_pos])
        ahead = int(np.sum(sims > true_sim))
        tied_others = int(np.sum(sims == true_sim)) - 1
        results.append(
            QueryRank(
                compound_id=query.compound_id,
                rank=ahead + tied_others + 1,
                candidate_count=len(pool),
                true_similarity=true_sim,
                best_similarity=float(sims.max()),
            )
        )
    return results


def top_k_percent(ranks, counts, k: float = DEFAULT_TOP_PERCENT) -> float:
    """Fraction of queries whose true match ranks in the best ceil(k%).

    Each query is normalized by its own candidate count: rank r with c
    candidates scores a hit when ``r <= ceil(k/100 * c)``.
    """
    ranks = list(ranks)
    counts = list(counts)
    if len(ranks) != len(counts):
        raise LengthMismatchError(f"got {len(ranks)} ranks for {len(counts)} counts")
    if not ranks:
        raise LengthMismatchError("cannot score an empty ranking")
    hits = 0
    for rank, count in zip(ranks, counts):
        if rank < 1 or rank > count:
            raise RankingError(f"rank {rank} outside 1..{count}")
        if rank <= math.ceil(k / 100.0 * count):
            hits += 1
    return hits / len(ranks)


def ranking_report(results, k: float = DEFAULT_TOP_PERCENT) -> dict:
    """JSON-ready report: per-query ranks plus the aggregate top-k% score."""
    score = top_k_percent(
        [r.rank for r in results], [r.candidate_count for r in results], k=k
    )
    return {
        "top_percent": k,
        "top_k_score": score,
        "mean_rank": float(np.mean([r.rank for r in results])),
        "queries": [
            {
                "compound_id": r.compound_id,
                "rank": r.rank,
                "candidates": r.candidate_count,
                "true_similarity": round(r.true_similarity, 6),
                "best_similarity": round(r.best_similarity, 6),
            }
            for r in results
        ],
    }


def similarity_report(report: SimilarityReport, ids=None) -> dict:
    """JSON-ready report for an aligned similarity evaluation."""
    ids = list(ids) if ids is not None else [str(i) for i in range(len(report.per_pair))]
    if len(ids) != len(report.per_pair):
        raise LengthMismatchError(f"got {len(ids)} ids for {len(report.per_pair)} pairs")
    return {
        "mean": report.mean,
        "stddev": report.stddev,
        "pairs": [
            {"compound_id": cid, "similarity": round(sim, 6)}
            for cid, sim in zip(ids, report.per_pair)
        ],
    }


def format_summary_table(rows, headers) -> str:
    """Plain-text table with left-aligned, width-padded columns."""
    rows = [[str(cell) for cell in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
    return "\n".join(lines)


def format_ranking_summary(results, k: float = DEFAULT_TOP_PERCENT) -> str:
    """Human-readable twin of :func:`ranking_report`."""
    report = ranking_report(results, k=k)
    rows = [
        (r.compound_id, r.rank, r.candidate_count, f"{r.true_similarity:.4f}")
        for r in results
    ]
    table = format_summary_table(rows, ("query", "rank", "candidates", "similarity"))
    return (
        f"{table}\n"
        f"top-{k:g}%: {report['top_k_score']:.4f}   "
        f"mean rank: {report['mean_rank']:.2f}   queries: {len(results)}"
    )


def write_json_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")


def plot_rank_histogram(results, path) -> None:
    """Render the distribution of true-match ranks as an SVG bar chart."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ranks = [r.rank for r in results]
    top = max(ranks)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(ranks, bins=range(1, top + 2), align="left", rwidth=0.85, color="#4878d0")
    ax.set_xlabel("rank of true match")
    ax.set_ylabel("queries")
    ax.set_title("Library-search rank distribution")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
