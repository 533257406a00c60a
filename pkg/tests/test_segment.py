import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propspan.corpus import Article, LabeledSpan
from propspan.errors import AlignmentError
from propspan.segment import (
    merge_spans,
    project_labels,
    read_token_stream,
    segment_article,
    tokens_to_spans,
    unprojectable_spans,
    write_token_stream,
)

from helpers import (
    projection_oracle,
    random_article_text,
    random_spans,
    token_aligned_spans,
)


class TestSegmentArticle:
    def test_empty_text_like(self):
        # a lone newline has no tokens at all
        assert segment_article(Article(1, "\n")) == []

    def test_single_sentence(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        assert len(sentences) == 1
        triples = [(t.text, t.start, t.end) for t in sentences[0].tokens]
        assert triples == [("Stop", 0, 4), ("them", 5, 9), (".", 9, 10)]

    def test_blank_line_skipped_with_global_offsets(self):
        text = "A b\n\nC d\n"
        sentences = segment_article(Article(1, text))
        assert len(sentences) == 2
        # hand count: the empty line's newline is character 4, so C sits at 5
        assert [(t.text, t.start) for t in sentences[1].tokens] == [("C", 5), ("d", 7)]
        assert all(text[t.start : t.end] == t.text for s in sentences for t in s.tokens)
        assert [s.index for s in sentences] == [0, 1]

    def test_adjacent_lines_global_offsets(self):
        sentences = segment_article(Article(1, "A b\nC d\n"))
        assert len(sentences) == 2
        assert [(t.text, t.start) for t in sentences[1].tokens] == [("C", 4), ("d", 6)]

    def test_punctuation_is_single_char_tokens(self):
        sentences = segment_article(Article(1, "don't!!\n"))
        assert [t.text for t in sentences[0].tokens] == ["don", "'", "t", "!", "!"]

    def test_alphanumeric_runs_stay_together(self):
        sentences = segment_article(Article(1, "room101 4ever\n"))
        assert [t.text for t in sentences[0].tokens] == ["room101", "4ever"]

    def test_no_trailing_newline(self):
        sentences = segment_article(Article(1, "one two"))
        assert [t.text for t in sentences[0].tokens] == ["one", "two"]


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_offset_fidelity_property(seed):
    """Slicing the article text at token offsets reproduces token.text."""
    rng = random.Random(seed)
    text = random_article_text(rng)
    article = Article(1, text)
    for sentence in segment_article(article):
        for token in sentence.tokens:
            assert text[token.start : token.end] == token.text
            assert not any(ch.isspace() for ch in token.text)


class TestProjectLabels:
    def test_no_spans_all_zero(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        assert project_labels(sentences, []) == [[0, 0, 0]]

    def test_whole_token_span(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        labels = project_labels(sentences, [LabeledSpan(1, 5, 9)])
        assert labels == [[0, 1, 0]]

    def test_partial_overlap_counts(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        labels = project_labels(sentences, [LabeledSpan(1, 2, 6)])
        assert labels == [[1, 1, 0]]

    def test_whitespace_only_span_is_unprojectable(self):
        sentences = segment_article(Article(1, "a b\n"))
        span = LabeledSpan(1, 1, 2)  # just the blank between tokens
        assert project_labels(sentences, [span]) == [[0, 0]]
        assert unprojectable_spans(sentences, [span]) == [span]


class TestTokensToSpans:
    def test_all_zero(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        assert tokens_to_spans(1, sentences, [[0, 0, 0]]) == []

    def test_run_to_span(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        spans = tokens_to_spans(1, sentences, [[0, 1, 1]])
        assert spans == [LabeledSpan(1, 5, 10)]

    def test_two_runs(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        spans = tokens_to_spans(1, sentences, [[1, 0, 1]])
        assert spans == [LabeledSpan(1, 0, 4), LabeledSpan(1, 9, 10)]

    def test_length_mismatch(self):
        sentences = segment_article(Article(1, "Stop them.\n"))
        with pytest.raises(AlignmentError):
            tokens_to_spans(1, sentences, [[1, 0]])
        with pytest.raises(AlignmentError):
            tokens_to_spans(1, sentences, [])


class TestMergeSpans:
    def test_empty(self):
        assert merge_spans([]) == []

    def test_overlapping_union(self):
        spans = [LabeledSpan(1, 5, 10), LabeledSpan(1, 8, 12)]
        assert merge_spans(spans) == [LabeledSpan(1, 5, 12)]

    def test_touching_stay_separate(self):
        spans = [LabeledSpan(1, 5, 10), LabeledSpan(1, 10, 12)]
        assert merge_spans(spans) == spans

    def test_contained_span_absorbed(self):
        spans = [LabeledSpan(1, 0, 10), LabeledSpan(1, 2, 3)]
        assert merge_spans(spans) == [LabeledSpan(1, 0, 10)]

    def test_does_not_merge_across_articles(self):
        spans = [LabeledSpan(1, 0, 10), LabeledSpan(2, 5, 8)]
        assert merge_spans(spans) == spans

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_idempotent_order_independent_disjoint(self, seed):
        rng = random.Random(seed)
        spans = random_spans(rng, 1, 120, max_spans=8)
        merged = merge_spans(spans)
        # pairwise disjoint
        for a in merged:
            for b in merged:
                if a is not b:
                    assert not a.overlaps(b)
        # idempotent
        assert merge_spans(merged) == merged
        # order independent
        shuffled = spans[:]
        rng.shuffle(shuffled)
        assert merge_spans(shuffled) == merged
        # character mass preserved
        chars = set()
        for s in spans:
            chars.update(range(s.start, s.end))
        merged_chars = set()
        for s in merged:
            merged_chars.update(range(s.start, s.end))
        assert chars == merged_chars


class TestProjectionOracle:
    def test_random_articles_match_brute_force(self):
        rng = random.Random(421)
        for _ in range(300):
            text = random_article_text(rng)
            article = Article(1, text)
            sentences = segment_article(article)
            spans = random_spans(rng, 1, len(text))
            assert project_labels(sentences, spans) == projection_oracle(sentences, spans)


class TestRoundTrip:
    def test_token_aligned_spans_survive(self):
        rng = random.Random(99)
        for _ in range(300):
            text = random_article_text(rng)
            article = Article(1, text)
            sentences = segment_article(article)
            spans = token_aligned_spans(rng, 1, sentences)
            labels = project_labels(sentences, spans)
            recovered = merge_spans(tokens_to_spans(1, sentences, labels))
            assert recovered == sorted(spans, key=LabeledSpan.sort_key)


class TestTokenStream:
    def test_round_trip(self, tmp_path):
        article = Article(3, "Stop them.\nNow.\n")
        sentences = segment_article(article)
        path = tmp_path / "tokens.jsonl"
        n = write_token_stream(path, [(3, sentences)])
        records = read_token_stream(path)
        assert n == len(records) == 5
        assert records[0].article_id == 3
        assert records[0].text == "Stop"
        assert (records[3].sentence_index, records[3].token_index) == (1, 0)
        assert [r.text for r in records] == ["Stop", "them", ".", "Now", "."]
