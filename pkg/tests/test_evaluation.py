import random

import numpy as np
import pytest

from propspan.corpus import LabeledSpan, Technique
from propspan.errors import CoverageError
from propspan.evaluation import (
    AblationCell,
    run_ablation,
    score_si_exact,
    score_si_overlap,
    score_tc,
    table_grid,
)
from propspan.features import FeatureSet
from propspan.tagger import TaggerConfig

from helpers import (
    exact_scores_oracle,
    overlap_scores_oracle,
    random_spans,
    synthetic_si_corpus,
)


class TestScoreSiExact:
    def test_perfect(self):
        spans = [LabeledSpan(1, 0, 5), LabeledSpan(1, 8, 12)]
        m = score_si_exact(spans, list(spans))
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_near_miss_scores_zero(self):
        m = score_si_exact([LabeledSpan(1, 0, 5)], [LabeledSpan(1, 0, 10)])
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)

    def test_counting_example(self):
        pred = [LabeledSpan(1, 0, 5), LabeledSpan(1, 20, 30)]
        gold = [LabeledSpan(1, 0, 5), LabeledSpan(1, 6, 9), LabeledSpan(1, 40, 50)]
        m = score_si_exact(pred, gold)
        assert m.precision == pytest.approx(0.5)
        assert m.recall == pytest.approx(1 / 3)
        assert m.f1 == pytest.approx(0.4)

    def test_duplicate_predictions_consume_gold_once(self):
        pred = [LabeledSpan(1, 0, 5), LabeledSpan(1, 0, 5)]
        gold = [LabeledSpan(1, 0, 5)]
        m = score_si_exact(pred, gold)
        assert m.precision == pytest.approx(0.5)
        assert m.recall == pytest.approx(1.0)

    def test_counts_reported(self):
        m = score_si_exact([LabeledSpan(1, 0, 5)], [LabeledSpan(1, 0, 5), LabeledSpan(1, 7, 9)])
        assert (m.gold_count, m.pred_count) == (2, 1)


class TestScoreSiOverlap:
    def test_perfect_disjoint(self):
        spans = [LabeledSpan(1, 0, 5), LabeledSpan(1, 8, 12)]
        m = score_si_overlap(spans, list(spans))
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_pred_inside_gold(self):
        m = score_si_overlap([LabeledSpan(1, 0, 5)], [LabeledSpan(1, 0, 10)])
        assert m.precision == pytest.approx(1.0)
        assert m.recall == pytest.approx(0.5)
        assert m.f1 == pytest.approx(2 / 3)

    def test_gold_inside_pred(self):
        m = score_si_overlap([LabeledSpan(1, 0, 10)], [LabeledSpan(1, 0, 5)])
        assert m.precision == pytest.approx(0.5)
        assert m.recall == pytest.approx(1.0)
        assert m.f1 == pytest.approx(2 / 3)

    def test_disjoint_scores_zero(self):
        m = score_si_overlap([LabeledSpan(1, 0, 5)], [LabeledSpan(1, 10, 20)])
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)

    def test_both_empty_is_perfect(self):
        m = score_si_overlap([], [])
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_predictions_merged_before_scoring(self):
        # two overlapping predictions merge into [0,10): precision 1, not 2
        pred = [LabeledSpan(1, 0, 8), LabeledSpan(1, 4, 10)]
        gold = [LabeledSpan(1, 0, 10)]
        m = score_si_overlap(pred, gold)
        assert m.pred_count == 1
        assert m.precision == pytest.approx(1.0)
        assert m.recall == pytest.approx(1.0)

    def test_articles_do_not_cross(self):
        m = score_si_overlap([LabeledSpan(1, 0, 5)], [LabeledSpan(2, 0, 5)])
        assert (m.precision, m.recall) == (0.0, 0.0)

    def test_symmetry_for_disjoint_inputs(self):
        rng = random.Random(17)
        for _ in range(60):
            a = _disjoint_spans(rng)
            b = _disjoint_spans(rng)
            ab = score_si_overlap(a, b)
            ba = score_si_overlap(b, a)
            assert ab.precision == pytest.approx(ba.recall, abs=1e-12)
            assert ab.recall == pytest.approx(ba.precision, abs=1e-12)


def _disjoint_spans(rng, article_id=1, text_len=100):
    spans = []
    cursor = 0
    while cursor < text_len - 2:
        start = cursor + rng.randint(1, 10)
        end = start + rng.randint(1, 8)
        if end > text_len:
            break
        spans.append(LabeledSpan(article_id, start, end))
        cursor = end
    return spans


class TestScorersAgainstOracle:
    def test_overlap_matches_brute_force(self):
        rng = random.Random(1234)
        for _ in range(400):
            pred = random_spans(rng, 1, 150) + random_spans(rng, 2, 80)
            gold = random_spans(rng, 1, 150) + random_spans(rng, 2, 80)
            got = score_si_overlap(pred, gold)
            want_p, want_r, want_f = overlap_scores_oracle(pred, gold)
            assert got.precision == pytest.approx(want_p, abs=1e-12)
            assert got.recall == pytest.approx(want_r, abs=1e-12)
            assert got.f1 == pytest.approx(want_f, abs=1e-12)

    def test_exact_matches_brute_force(self):
        rng = random.Random(99)
        for _ in range(400):
            pred = random_spans(rng, 1, 60, max_spans=5)
            gold = random_spans(rng, 1, 60, max_spans=5)
            got = score_si_exact(pred, gold)
            want_p, want_r, want_f = exact_scores_oracle(pred, gold)
            assert got.precision == pytest.approx(want_p, abs=1e-12)
            assert got.recall == pytest.approx(want_r, abs=1e-12)
            assert got.f1 == pytest.approx(want_f, abs=1e-12)


class TestScoreTc:
    def _spans(self, techniques):
        return [
            LabeledSpan(1, i * 10, i * 10 + 5, technique)
            for i, technique in enumerate(techniques)
        ]

    def test_all_correct(self):
        gold = self._spans([Technique.DOUBT, Technique.SLOGANS])
        m = score_tc(list(gold), gold)
        assert m.micro_f1 == 1.0
        assert np.trace(m.confusion) == 2

    def test_half_correct_micro(self):
        gold = self._spans(
            [Technique.DOUBT, Technique.SLOGANS, Technique.DOUBT, Technique.FLAG_WAVING]
        )
        pred = self._spans(
            [Technique.DOUBT, Technique.DOUBT, Technique.FLAG_WAVING, Technique.FLAG_WAVING]
        )
        m = score_tc(pred, gold)
        assert m.micro_f1 == pytest.approx(0.5)

    def test_absent_class_no_support_flag(self):
        gold = self._spans([Technique.DOUBT])
        m = score_tc(list(gold), gold)
        assert Technique.REPETITION in m.no_support
        assert m.per_class_f1[Technique.REPETITION] == 0.0
        assert Technique.DOUBT not in m.no_support

    def test_per_class_f1(self):
        gold = self._spans([Technique.DOUBT, Technique.DOUBT, Technique.SLOGANS])
        pred = self._spans([Technique.DOUBT, Technique.SLOGANS, Technique.SLOGANS])
        m = score_tc(pred, gold)
        # DOUBT: precision 1/1, recall 1/2
        assert m.per_class_f1[Technique.DOUBT] == pytest.approx(2 / 3)
        # SLOGANS: precision 1/2, recall 1/1
        assert m.per_class_f1[Technique.SLOGANS] == pytest.approx(2 / 3)

    def test_missing_prediction_is_coverage_error(self):
        gold = self._spans([Technique.DOUBT, Technique.SLOGANS])
        with pytest.raises(CoverageError):
            score_tc(gold[:1], gold)

    def test_extra_prediction_is_coverage_error(self):
        gold = self._spans([Technique.DOUBT])
        pred = gold + [LabeledSpan(9, 0, 5, Technique.DOUBT)]
        with pytest.raises(CoverageError):
            score_tc(pred, gold)

    def test_micro_equals_accuracy(self):
        rng = random.Random(7)
        techniques = list(Technique)
        for _ in range(30):
            n = rng.randint(1, 30)
            gold_t = [rng.choice(techniques) for _ in range(n)]
            pred_t = [rng.choice(techniques) for _ in range(n)]
            gold = self._spans(gold_t)
            pred = self._spans(pred_t)
            m = score_tc(pred, gold)
            accuracy = sum(g == p for g, p in zip(gold_t, pred_t)) / n
            assert m.micro_f1 == pytest.approx(accuracy)


class TestAblation:
    def test_single_cell(self):
        train, table = synthetic_si_corpus(25, seed=41)
        evalc, eval_table = synthetic_si_corpus(10, seed=42, first_article_id=500)
        for key, vec in eval_table.vectors.items():
            table.add(key, vec)
        config = TaggerConfig(input_dim=1, hidden_dim=4, epochs=2, seed=0, learning_rate=0.05)
        report = run_ablation(
            [AblationCell("only_cell", True, FeatureSet())], train, evalc, table, config
        )
        assert len(report.rows) == 1
        assert report.rows[0].error is None
        assert report.to_tsv().count("\n") == 2  # header + one row

    def test_grid_shape_and_determinism(self):
        train, table = synthetic_si_corpus(25, seed=43)
        evalc, eval_table = synthetic_si_corpus(8, seed=44, first_article_id=500)
        for key, vec in eval_table.vectors.items():
            table.add(key, vec)
        config = TaggerConfig(input_dim=1, hidden_dim=4, epochs=2, seed=1, learning_rate=0.05)
        grid = table_grid()
        assert [c.name for c in grid] == [
            "lstm_embeddings_only",
            "lstm_all_features",
            "lstm_without_pos",
            "lstm_without_ner",
            "lstm_without_kw",
            "upstream_probs_plus_features",
        ]
        r1 = run_ablation(grid, train, evalc, table, config)
        r2 = run_ablation(grid, train, evalc, table, config)
        assert len(r1.rows) == 6
        assert all(row.error is None for row in r1.rows)
        assert r1.to_tsv() == r2.to_tsv()
        # wall times differ but the structured log carries the same hashes
        assert [r.config_hash for r in r1.rows] == [r.config_hash for r in r2.rows]

    def test_identical_configs_identical_metrics(self):
        train, table = synthetic_si_corpus(20, seed=45)
        evalc, eval_table = synthetic_si_corpus(8, seed=46, first_article_id=500)
        for key, vec in eval_table.vectors.items():
            table.add(key, vec)
        config = TaggerConfig(input_dim=1, hidden_dim=4, epochs=2, seed=1, learning_rate=0.05)
        cells = [
            AblationCell("twin_a", True, FeatureSet()),
            AblationCell("twin_b", True, FeatureSet()),
        ]
        report = run_ablation(cells, train, evalc, table, config)
        a, b = report.rows
        assert (a.precision, a.recall, a.f1) == (b.precision, b.recall, b.f1)

    def test_failing_cell_recorded_others_run(self):
        train, table = synthetic_si_corpus(10, seed=47)
        evalc, eval_table = synthetic_si_corpus(5, seed=48, first_article_id=500)
        for key, vec in eval_table.vectors.items():
            table.add(key, vec)
        config = TaggerConfig(input_dim=1, hidden_dim=4, epochs=1, seed=1)
        # a cell with no input columns at all cannot train
        bad = AblationCell("broken", False, None)
        good = AblationCell("fine", True, FeatureSet())
        report = run_ablation([bad, good], train, evalc, table, config)
        assert report.rows[0].error is not None
        assert report.rows[1].error is None
        assert "ERROR" in report.to_tsv()
