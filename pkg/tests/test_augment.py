import random

import numpy as np
import pytest

from propspan.augment import (
    AugmentPlan,
    Lexicon,
    TcSample,
    augment_corpus,
    augment_span,
    load_silver,
    plan_targets,
    samples_from_corpus,
    write_silver,
)
from propspan.corpus import Corpus, LabeledSpan, Technique, load_articles
from propspan.errors import DataFormatError

from helpers import OFFICIAL_CLASS_COUNTS, make_articles_dir


def demo_lexicon():
    lex = Lexicon()
    lex.add_synonyms("stop", ["halt", "cease"])
    lex.add_synonyms("invasion", ["incursion"])
    lex.add_synonyms("attack", ["assault", "strike"])
    lex.add_synonyms("danger", ["peril"])
    lex.proper_nouns["PERSON"] = ["John", "Mary"]
    lex.proper_nouns["GPE"] = ["Rome", "Paris"]
    return lex


class TestPlanTargets:
    def test_zero_budget_adds_nothing(self):
        plan = plan_targets(OFFICIAL_CLASS_COUNTS, total_new=0)
        assert plan.targets == {t: OFFICIAL_CLASS_COUNTS[t] for t in Technique}

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            plan_targets(OFFICIAL_CLASS_COUNTS, total_new=-1)

    def test_top_two_receive_nothing_twelve_receive_something(self):
        plan = plan_targets(OFFICIAL_CLASS_COUNTS, total_new=3000)
        added = {t: plan.targets[t] - OFFICIAL_CLASS_COUNTS[t] for t in Technique}
        assert added[Technique.LOADED_LANGUAGE] == 0
        assert added[Technique.NAME_CALLING_LABELING] == 0
        minority = [t for t in Technique if t not in
                    (Technique.LOADED_LANGUAGE, Technique.NAME_CALLING_LABELING)]
        assert len(minority) == 12
        assert all(added[t] > 0 for t in minority)

    def test_proportional_deficits(self):
        # top-2 at 50/45; reference class C and nine others tie at 40;
        # the two interesting minorities sit 30 and 10 below the reference
        counts = {t: 40 for t in Technique}
        counts[Technique.LOADED_LANGUAGE] = 50
        counts[Technique.NAME_CALLING_LABELING] = 45
        counts[Technique.SLOGANS] = 10  # deficit 30
        counts[Technique.DOUBT] = 30  # deficit 10
        plan = plan_targets(counts, total_new=40)
        assert plan.targets[Technique.SLOGANS] - counts[Technique.SLOGANS] == 30
        assert plan.targets[Technique.DOUBT] - counts[Technique.DOUBT] == 10

    def test_targets_never_below_counts(self):
        rng = random.Random(3)
        for _ in range(50):
            counts = {t: rng.randint(0, 500) for t in Technique}
            plan = plan_targets(counts, total_new=rng.randint(0, 4000))
            assert all(plan.targets[t] >= counts[t] for t in Technique)

    def test_deterministic(self):
        p1 = plan_targets(OFFICIAL_CLASS_COUNTS, total_new=3000, seed=5)
        p2 = plan_targets(OFFICIAL_CLASS_COUNTS, total_new=3000, seed=5)
        assert p1 == p2


class TestAugmentSpan:
    def test_empty_lexicon_discards(self):
        rng = random.Random(0)
        assert augment_span("stop the invasion", Technique.SLOGANS, Lexicon(), rng) is None

    def test_forced_synonym_replacement(self):
        lex = Lexicon()
        lex.add_synonyms("stop", ["halt"])
        rng = random.Random(0)
        sample = augment_span(
            "stop the invasion", Technique.SLOGANS, lex, rng, replace_prob=1.0
        )
        assert sample is not None
        assert sample.text == "halt the invasion"
        assert sample.technique == Technique.SLOGANS
        assert sample.silver

    def test_gazetteer_swap_never_unchanged(self):
        lex = demo_lexicon()
        for seed in range(20):
            rng = random.Random(seed)
            sample = augment_span("John attacked Rome", Technique.DOUBT, lex, rng)
            assert sample is not None
            first = sample.text.split()[0]
            last = sample.text.split()[-1]
            assert first == "Mary"
            assert last == "Paris"

    def test_self_mapping_dropped(self):
        lex = Lexicon()
        lex.add_synonyms("stop", ["stop"])
        assert "stop" not in lex.synonyms

    def test_offsets_and_punctuation_preserved(self):
        lex = Lexicon()
        lex.add_synonyms("danger", ["peril"])
        rng = random.Random(1)
        sample = augment_span(
            "a danger, she said", Technique.DOUBT, lex, rng, replace_prob=1.0
        )
        assert sample.text == "a peril, she said"


def tiny_tc_samples():
    samples = []
    for i in range(6):
        samples.append(TcSample(f"big claim {i}", Technique.LOADED_LANGUAGE))
    for i in range(4):
        samples.append(TcSample(f"label {i}", Technique.NAME_CALLING_LABELING))
    samples.append(TcSample("stop the invasion", Technique.SLOGANS))
    samples.append(TcSample("John attacked Rome", Technique.SLOGANS))
    samples.append(TcSample("a danger to us", Technique.DOUBT))
    return samples


class TestAugmentCorpus:
    def test_all_zero_plan_is_identity(self):
        samples = tiny_tc_samples()
        counts = {}
        for s in samples:
            counts[s.technique] = counts.get(s.technique, 0) + 1
        plan = AugmentPlan(targets={t: counts.get(t, 0) for t in Technique})
        out, report = augment_corpus(samples, demo_lexicon(), plan)
        assert out == samples
        assert report.total_generated == 0

    def test_exact_target_counts_and_flags(self):
        samples = tiny_tc_samples()
        targets = {t: 0 for t in Technique}
        for s in samples:
            targets[s.technique] += 1
        targets[Technique.SLOGANS] += 5
        out, report = augment_corpus(
            samples, demo_lexicon(), AugmentPlan(targets=targets, seed=3), replace_prob=1.0
        )
        new = [s for s in out if s.silver]
        assert len(new) == 5
        assert report.generated[Technique.SLOGANS] == 5
        assert all(s.technique == Technique.SLOGANS for s in new)
        assert all(s.source_index is not None for s in new)
        assert not report.shortfall

    def test_label_preservation(self):
        samples = tiny_tc_samples()
        targets = {t: 0 for t in Technique}
        for s in samples:
            targets[s.technique] += 1
        targets[Technique.SLOGANS] += 3
        targets[Technique.DOUBT] += 2
        out, _ = augment_corpus(
            samples, demo_lexicon(), AugmentPlan(targets=targets, seed=1), replace_prob=1.0
        )
        for silver in (s for s in out if s.silver):
            assert silver.technique == samples[silver.source_index].technique

    def test_attempt_cap_shortfall(self, caplog):
        samples = tiny_tc_samples()
        targets = {t: 0 for t in Technique}
        for s in samples:
            targets[s.technique] += 1
        targets[Technique.DOUBT] += 3
        with caplog.at_level("WARNING"):
            out, report = augment_corpus(samples, Lexicon(), AugmentPlan(targets=targets))
        assert report.generated[Technique.DOUBT] == 0
        assert report.shortfall[Technique.DOUBT] == 3
        assert all(not s.silver for s in out)
        assert any("shortfall" in r.message for r in caplog.records)

    def test_deterministic_given_seed(self):
        samples = tiny_tc_samples()
        targets = {t: 0 for t in Technique}
        for s in samples:
            targets[s.technique] += 1
        targets[Technique.SLOGANS] += 4
        plan = AugmentPlan(targets=targets, seed=11)
        out1, _ = augment_corpus(samples, demo_lexicon(), plan, replace_prob=1.0)
        out2, _ = augment_corpus(samples, demo_lexicon(), plan, replace_prob=1.0)
        assert out1 == out2

    def test_silver_never_used_as_source(self):
        samples = tiny_tc_samples()
        targets = {t: 0 for t in Technique}
        for s in samples:
            targets[s.technique] += 1
        targets[Technique.SLOGANS] += 4
        out, _ = augment_corpus(
            samples, demo_lexicon(), AugmentPlan(targets=targets, seed=2), replace_prob=1.0
        )
        gold_indexes = {i for i, s in enumerate(samples) if not s.silver}
        assert all(s.source_index in gold_indexes for s in out if s.silver)

    def test_variance_of_proportions_decreases(self):
        plan = plan_targets(OFFICIAL_CLASS_COUNTS, total_new=3000)
        before = np.array([OFFICIAL_CLASS_COUNTS[t] for t in Technique], dtype=float)
        after = np.array([plan.targets[t] for t in Technique], dtype=float)
        assert np.var(after / after.sum()) < np.var(before / before.sum())


class TestSilverFile:
    def test_round_trip_with_awkward_text(self, tmp_path):
        samples = [
            TcSample("tab\there", Technique.DOUBT, silver=True, source_index=2),
            TcSample("two\nlines \\ slash", Technique.SLOGANS, silver=True, source_index=0),
        ]
        path = tmp_path / "silver.tsv"
        n = write_silver(samples, path)
        assert n == 2
        loaded = load_silver(path)
        assert [(s.text, s.technique, s.source_index) for s in loaded] == [
            (s.text, s.technique, s.source_index) for s in samples
        ]
        assert all(s.silver for s in loaded)

    def test_five_columns(self, tmp_path):
        path = tmp_path / "silver.tsv"
        write_silver(
            [TcSample("plain words", Technique.DOUBT, silver=True, source_index=1)], path
        )
        line = path.read_text().splitlines()[0]
        assert line.split("\t") == ["SILVER", "Doubt", "1", "0", "plain words"]

    def test_gold_samples_not_written(self, tmp_path):
        path = tmp_path / "silver.tsv"
        n = write_silver([TcSample("x", Technique.DOUBT)], path)
        assert n == 0
        assert path.read_text() == ""

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "silver.tsv"
        path.write_text("GOLD\tDoubt\t0\t0\tx\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_silver(path)


class TestSamplesFromCorpus:
    def test_cuts_span_texts(self, tmp_path):
        articles_dir = make_articles_dir(tmp_path, {1: "stop the invasion now\n"})
        corpus = Corpus.build(
            load_articles(articles_dir),
            [LabeledSpan(1, 0, 4, Technique.SLOGANS), LabeledSpan(1, 9, 17, Technique.DOUBT)],
        )
        samples = samples_from_corpus(corpus)
        assert [(s.text, s.technique) for s in samples] == [
            ("stop", Technique.SLOGANS),
            ("invasion", Technique.DOUBT),
        ]
        assert all(s.span is not None and not s.silver for s in samples)

    def test_missing_technique_rejected(self, tmp_path):
        articles_dir = make_articles_dir(tmp_path, {1: "abc\n"})
        corpus = Corpus.build(load_articles(articles_dir), [LabeledSpan(1, 0, 2)])
        with pytest.raises(DataFormatError):
            samples_from_corpus(corpus)
