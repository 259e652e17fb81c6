"""Similarity scoring and the library-search ranking experiment."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from motifms.evaluate import (
    MIN_CANDIDATES,
    MissingTrueMatchError,
    RankingError,
    RankingTask,
    ReferenceEntry,
    SimilarityReport,
    TooFewCandidatesError,
    aggregate_seed_means,
    build_ranking_task,
    evaluate_similarity,
    format_ranking_summary,
    format_summary_table,
    plot_rank_histogram,
    rank_candidates,
    ranking_report,
    similarity_report,
    top_k_percent,
    write_json_report,
)
from motifms.spectra import LengthMismatchError, M_MAX, Spectrum

from _oracles import naive_true_match_rank


def _spec(rng=None, bins=None):
    if bins is None:
        bins = np.abs(rng.normal(size=M_MAX))
    return Spectrum(np.asarray(bins, dtype=np.float64))


def _library(rng, n):
    return [
        ReferenceEntry(compound_id=f"lib{i:03d}", spectrum=_spec(rng))
        for i in range(n)
    ]


class TestEvaluateSimilarity:
    """Aligned pair scoring: mean, stddev, failure modes."""

    def test_identical_pairs_score_one(self, corpus_spectra):
        truth = [corpus_spectra[k] for k in sorted(corpus_spectra)][:10]
        report = evaluate_similarity(truth, truth)
        assert report.mean == pytest.approx(1.0, abs=1e-12)
        assert report.stddev == pytest.approx(0.0, abs=1e-12)
        assert len(report.per_pair) == 10

    def test_mean_and_population_stddev(self):
        a = np.zeros(M_MAX)
        a[0] = 1.0
        b = np.zeros(M_MAX)
        b[1] = 1.0
        predictions = [_spec(bins=a), _spec(bins=a)]
        truths = [_spec(bins=a), _spec(bins=b)]
        report = evaluate_similarity(predictions, truths)
        assert report.per_pair == pytest.approx([1.0, 0.0], abs=1e-12)
        assert report.mean == pytest.approx(0.5, abs=1e-12)
        assert report.stddev == pytest.approx(0.5, abs=1e-12)

    def test_length_mismatch_and_empty_rejected(self, corpus_spectra):
        spectra = list(corpus_spectra.values())
        with pytest.raises(LengthMismatchError):
            evaluate_similarity(spectra[:3], spectra[:4])
        with pytest.raises(LengthMismatchError):
            evaluate_similarity([], [])

    def test_report_string(self):
        report = SimilarityReport(mean=0.75149, stddev=0.20661, per_pair=[0.0] * 64)
        assert str(report) == "0.7515 +/- 0.2066 (n=64)"

    def test_aggregate_seed_means(self):
        mean, spread = aggregate_seed_means([0.6, 0.7, 0.8])
        assert mean == pytest.approx(0.7, abs=1e-12)
        assert spread == pytest.approx(np.std([0.6, 0.7, 0.8]), abs=1e-15)
        with pytest.raises(LengthMismatchError):
            aggregate_seed_means([])

    def test_similarity_report_schema(self):
        report = evaluate_similarity(
            [_spec(bins=np.ones(M_MAX))], [_spec(bins=np.ones(M_MAX))]
        )
        payload = similarity_report(report, ids=["m1"])
        assert payload["pairs"] == [{"compound_id": "m1", "similarity": 1.0}]
        with pytest.raises(LengthMismatchError):
            similarity_report(report, ids=["a", "b"])


class TestRankingTask:
    """Pool construction and validation."""

    def test_default_pools_cover_all_references(self):
        rng = np.random.default_rng(0)
        refs = _library(rng, 25)
        task = build_ranking_task([refs[3]], refs)
        assert task.candidates == [list(range(25))]

    def test_too_few_candidates_rejected(self):
        rng = np.random.default_rng(1)
        refs = _library(rng, MIN_CANDIDATES - 1)
        with pytest.raises(TooFewCandidatesError):
            build_ranking_task([refs[0]], refs)

    def test_true_match_must_appear_exactly_once(self):
        rng = np.random.default_rng(2)
        refs = _library(rng, 24)
        stranger = ReferenceEntry(compound_id="nowhere", spectrum=_spec(rng))
        with pytest.raises(MissingTrueMatchError):
            build_ranking_task([stranger], refs)
        doubled = refs + [refs[0]]
        with pytest.raises(MissingTrueMatchError):
            build_ranking_task([refs[0]], doubled)

    def test_pool_count_must_match_queries(self):
        rng = np.random.default_rng(3)
        refs = _library(rng, 22)
        task = RankingTask(queries=[refs[0], refs[1]], references=refs,
                           candidates=[list(range(22))])
        with pytest.raises(RankingError):
            task.validate()

    def test_mass_filter_window(self):
        rng = np.random.default_rng(4)
        refs = [
            ReferenceEntry(f"lib{i:03d}", _spec(rng), precursor_mass=100.0 + i)
            for i in range(30)
        ]
        refs.append(ReferenceEntry("massless", _spec(rng), precursor_mass=None))
        query = refs[5]  # mass 105, window 18 -> masses 100..123 plus massless
        task = build_ranking_task([query], refs, mass_filter=True, window=18.0)
        pool = task.candidates[0]
        assert pool == list(range(0, 24)) + [30]

    def test_mass_filter_ignored_without_query_mass(self):
        rng = np.random.default_rng(5)
        refs = _library(rng, 21)
        task = build_ranking_task([refs[2]], refs, mass_filter=True)
        assert task.candidates == [list(range(21))]


class TestRankCandidates:
    """Pessimistic tie-breaking and agreement with the brute-force oracle."""

    def test_perfect_predictions_rank_first(self):
        rng = np.random.default_rng(6)
        refs = _library(rng, 40)
        task = build_ranking_task(refs[:10], refs)
        for result in rank_candidates(task):
            assert result.rank == 1
            assert result.true_similarity == pytest.approx(1.0, abs=1e-12)
            assert result.best_similarity == pytest.approx(1.0, abs=1e-12)

    def test_ties_counted_against_the_query(self):
        base = np.zeros(M_MAX)
        base[10] = 1.0
        decoy = np.zeros(M_MAX)
        decoy[20] = 1.0
        refs = [ReferenceEntry(f"r{i}", _spec(bins=base)) for i in range(3)]
        refs += [ReferenceEntry(f"d{i}", _spec(bins=decoy)) for i in range(3, 21)]
        query = ReferenceEntry("r0", _spec(bins=base))
        results = rank_candidates(build_ranking_task([query], refs))
        # Two other references tie the true match at similarity 1.0.
        assert results[0].rank == 3
        assert results[0].candidate_count == 21

    def test_matches_naive_rank_oracle(self):
        rng = np.random.default_rng(7)
        refs = _library(rng, 30)
        noisy_queries = []
        for i in range(8):
            bins = refs[i].spectrum.bins + 0.3 * np.abs(rng.normal(size=M_MAX))
            noisy_queries.append(ReferenceEntry(refs[i].compound_id, _spec(bins=bins)))
        task = build_ranking_task(noisy_queries, refs)
        results = rank_candidates(task)
        for i, result in enumerate(results):
            expected = naive_true_match_rank(
                noisy_queries[i].spectrum.bins,
                [r.spectrum.bins for r in refs],
                true_index=i,
            )
            assert result.rank == expected

    def test_moving_prediction_toward_truth_never_hurts(self):
        """Convex interpolation toward the true spectrum is monotone in rank."""
        rng = np.random.default_rng(8)
        refs = _library(rng, 30)
        true_entry = refs[4]
        start = np.abs(rng.normal(size=M_MAX))
        previous_rank = None
        for alpha in np.linspace(0.0, 1.0, 9):
            bins = (1 - alpha) * start + alpha * true_entry.spectrum.bins
            query = ReferenceEntry(true_entry.compound_id, _spec(bins=bins))
            result = rank_candidates(build_ranking_task([query], refs))[0]
            if previous_rank is not None:
                assert result.rank <= previous_rank
            previous_rank = result.rank
        assert previous_rank == 1


class TestTopKPercent:
    """The normalized top-k% hit metric."""

    def test_hand_values(self):
        # ceil(5% of 100) = 5, so ranks 1..5 hit and 6 misses.
        assert top_k_percent([5, 6], [100, 100], k=5.0) == 0.5
        assert top_k_percent([1], [20], k=5.0) == 1.0
        assert top_k_percent([2], [20], k=5.0) == 0.0
        assert top_k_percent([2], [21], k=5.0) == 1.0  # ceil(1.05) = 2

    def test_invalid_ranks_rejected(self):
        with pytest.raises(RankingError):
            top_k_percent([0], [20])
        with pytest.raises(RankingError):
            top_k_percent([21], [20])
        with pytest.raises(LengthMismatchError):
            top_k_percent([1, 2], [20])
        with pytest.raises(LengthMismatchError):
            top_k_percent([], [])

    def test_random_predictions_hit_about_k_percent(self):
        """Uniform random ranks hit top-5% about 5% of the time."""
        rng = np.random.default_rng(9)
        count = 100
        trials = 2000
        ranks = rng.integers(1, count + 1, size=trials)
        score = top_k_percent(list(ranks), [count] * trials, k=5.0)
        assert score == pytest.approx(0.05, abs=0.02)


class TestReportsAndPlots:
    """JSON reports, text tables, and the SVG histogram."""

    @pytest.fixture()
    def ranked(self):
        rng = np.random.default_rng(10)
        refs = _library(rng, 26)
        task = build_ranking_task(refs[:6], refs)
        return rank_candidates(task)

    def test_ranking_report_schema(self, ranked):
        report = ranking_report(ranked, k=5.0)
        assert report["top_percent"] == 5.0
        assert report["top_k_score"] == 1.0
        assert report["mean_rank"] == 1.0
        assert len(report["queries"]) == 6
        assert set(report["queries"][0]) == {
            "compound_id", "rank", "candidates", "true_similarity", "best_similarity"
        }

    def test_write_json_report(self, ranked, tmp_path):
        path = tmp_path / "report.json"
        write_json_report(ranking_report(ranked), path)
        text = path.read_text()
        assert text.endswith("\n")
        assert json.loads(text)["top_k_score"] == 1.0

    def test_format_summary_table_alignment(self):
        table = format_summary_table(
            [("a", 1), ("widest", 22)], headers=("name", "rank")
        )
        lines = table.splitlines()
        assert lines[0].startswith("name")
        assert set(lines[1]) <= {"-", " "}
        assert len({len(line) for line in lines[:2]}) == 1

    def test_format_ranking_summary_mentions_score(self, ranked):
        text = format_ranking_summary(ranked, k=5.0)
        assert "top-5%: 1.0000" in text
        assert "queries: 6" in text

    def test_plot_writes_svg(self, ranked, tmp_path):
        path = tmp_path / "ranks.svg"
        plot_rank_histogram(ranked, path)
        content = path.read_text()
        assert content.lstrip().startswith("<?xml")
        assert "<svg" in content


def test_top_k_is_exact_for_echoed_truth(corpus_spectra):
    """Echoing every true spectrum back as the query gives a perfect score."""
    entries = [
        ReferenceEntry(compound_id=k, spectrum=s) for k, s in sorted(corpus_spectra.items())
    ]
    task = build_ranking_task(entries, entries)
    results = rank_candidates(task)
    ranks = [r.rank for r in results]
    counts = [r.candidate_count for r in results]
    assert math.isclose(top_k_percent(ranks, counts, k=5.0), 1.0)
    assert all(rank <= math.ceil(0.05 * len(entries)) for rank in ranks)
