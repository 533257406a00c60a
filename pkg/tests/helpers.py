"""Shared fixtures: random corpora, brute-force oracles, synthetic data.

The oracles here are deliberately independent of the library code they
check: label projection is recomputed per character, and span scores are
recomputed from explicit character sets.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from propspan.corpus import Article, Corpus, LabeledSpan, Technique
from propspan.embeddings import EmbeddingTable
from propspan.segment import Sentence, segment_article

# ---------------------------------------------------------------------------
# corpus directories on disk

def make_articles_dir(tmp_path: Path, texts: dict[int, str]) -> Path:
    directory = tmp_path / "articles"
    directory.mkdir(exist_ok=True)
    for article_id, text in texts.items():
        (directory / f"article{article_id}.txt").write_text(text, encoding="utf-8")
    return directory


def write_rows(path: Path, rows: list[str]) -> Path:
    path.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# random articles and spans

_CHARS = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "     ..,,!?;:'\"()-\n\néü€"
)


def random_article_text(rng: random.Random, max_len: int = 200) -> str:
    n = rng.randint(1, max_len)
    text = "".join(rng.choice(_CHARS) for _ in range(n))
    # articles must be non-empty and not a lone newline block
    return text if text.strip() else text + "x"


def random_spans(
    rng: random.Random, article_id: int, text_len: int, max_spans: int = 8
) -> list[LabeledSpan]:
    spans = []
    for _ in range(rng.randint(0, max_spans)):
        start = rng.randrange(text_len)
        end = rng.randint(start + 1, text_len)
        spans.append(LabeledSpan(article_id, start, end))
    return spans


def token_aligned_spans(
    rng: random.Random, article_id: int, sentences: list[Sentence]
) -> list[LabeledSpan]:
    """Disjoint spans covering whole-token runs, separated by >= 1 token."""
    spans = []
    for sentence in sentences:
        i = 0
        n = len(sentence.tokens)
        while i < n:
            if rng.random() < 0.4:
                run = rng.randint(1, min(3, n - i))
                first, last = sentence.tokens[i], sentence.tokens[i + run - 1]
                spans.append(LabeledSpan(article_id, first.start, last.end))
                i += run + 1  # at least one unlabeled token between runs
            else:
                i += 1
    return spans


# ---------------------------------------------------------------------------
# brute-force oracles

def projection_oracle(sentences: list[Sentence], spans: list[LabeledSpan]) -> list[list[int]]:
    """Per-character membership: label 1 iff any token char is in a span."""
    covered = set()
    for span in spans:
        covered.update(range(span.start, span.end))
    out = []
    for sentence in sentences:
        out.append(
            [
                1 if any(c in covered for c in range(t.start, t.end)) else 0
                for t in sentence.tokens
            ]
        )
    return out


def overlap_scores_oracle(
    pred: list[LabeledSpan], gold: list[LabeledSpan]
) -> tuple[float, float, float]:
    """Character-set recomputation of the overlap-proportional scores.

    Predictions are first merged per the documented convention (union
    spans whose character sets intersect; touching spans stay separate),
    then every score term is recomputed with explicit set intersections.
    """
    pred_sets: list[tuple[int, set[int]]] = []
    by_article: dict[int, list[LabeledSpan]] = {}
    for s in pred:
        by_article.setdefault(s.article_id, []).append(s)
    for aid, spans in by_article.items():
        group: set[int] = set()
        for s in sorted(spans, key=lambda x: (x.start, x.end)):
            chars = set(range(s.start, s.end))
            if group and group & chars:
                group |= chars
            else:
                if group:
                    pred_sets.append((aid, group))
                group = chars
        if group:
            pred_sets.append((aid, group))
    gold_sets = [(g.article_id, set(range(g.start, g.end))) for g in gold]
    if not pred_sets and not gold_sets:
        return 1.0, 1.0, 1.0
    p_sum = sum(
        len(ps & gs) / len(ps)
        for pa, ps in pred_sets
        for ga, gs in gold_sets
        if pa == ga
    )
    r_sum = sum(
        len(ps & gs) / len(gs)
        for ga, gs in gold_sets
        for pa, ps in pred_sets
        if pa == ga
    )
    precision = p_sum / len(pred_sets) if pred_sets else 0.0
    recall = r_sum / len(gold_sets) if gold_sets else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _contiguous_blocks(chars: set[int]) -> list[set[int]]:
    blocks = []
    current: set[int] = set()
    for c in sorted(chars):
        if current and c - 1 not in current:
            blocks.append(current)
            current = set()
        current.add(c)
    if current:
        blocks.append(current)
    return blocks


def exact_scores_oracle(
    pred: list[LabeledSpan], gold: list[LabeledSpan]
) -> tuple[float, float, float]:
    """Exact-match counting with one-to-one consumption of gold spans."""
    from collections import Counter

    gold_counts = Counter(g.sort_key() for g in gold)
    tp = 0
    for p in sorted(pred, key=LabeledSpan.sort_key):
        if gold_counts[p.sort_key()] > 0:
            gold_counts[p.sort_key()] -= 1
            tp += 1
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# ---------------------------------------------------------------------------
# synthetic separable corpora

POSITIVE_VOCAB = [f"prop{i}" for i in range(12)]
NEGATIVE_VOCAB = [f"norm{i}" for i in range(12)]


def synthetic_si_corpus(
    n_sentences: int,
    dim: int = 8,
    seed: int = 7,
    first_article_id: int = 1,
    tokens_per_sentence: int = 8,
) -> tuple[Corpus, EmbeddingTable]:
    """One-sentence articles with distinct positive/negative vocabularies.

    Positive tokens carry an embedding near +pattern, negative tokens
    near -pattern; gold spans cover the maximal positive runs, so they
    are whole-token aligned by construction.
    """
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    pattern = np.ones(dim)
    articles = []
    spans = []
    table = EmbeddingTable(dim=dim)
    for i in range(n_sentences):
        article_id = first_article_id + i
        words = []
        labels = []
        for _ in range(tokens_per_sentence):
            if rng.random() < 0.35:
                words.append(rng.choice(POSITIVE_VOCAB))
                labels.append(1)
            else:
                words.append(rng.choice(NEGATIVE_VOCAB))
                labels.append(0)
        text = " ".join(words) + "\n"
        articles.append(Article(id=article_id, text=text))
        sentences = segment_article(articles[-1])
        for token, label in zip(sentences[0].tokens, labels):
            base = pattern if label else -pattern
            noise = nrng.normal(0, 0.1, size=dim)
            table.add((article_id, 0, token.token_index), (base + noise).astype(np.float32))
        # gold spans: maximal runs of positive tokens
        run_start = None
        prev = None
        for token, label in zip(sentences[0].tokens, labels):
            if label:
                if run_start is None:
                    run_start = token
                prev = token
            elif run_start is not None:
                spans.append(LabeledSpan(article_id, run_start.start, prev.end))
                run_start = None
        if run_start is not None:
            spans.append(LabeledSpan(article_id, run_start.start, prev.end))
    return Corpus.build(articles, spans), table


TC_CLASSES = [Technique.SLOGANS, Technique.DOUBT, Technique.FLAG_WAVING]

# Training-set class counts reconstructed from the published proportions
# (35/17/10/8/8/5/4/3/2/2 percent and four classes at <=2%) of the 6,129
# technique-classification training spans.
OFFICIAL_CLASS_COUNTS = {
    Technique.LOADED_LANGUAGE: 2145,
    Technique.NAME_CALLING_LABELING: 1042,
    Technique.REPETITION: 613,
    Technique.DOUBT: 490,
    Technique.EXAGGERATION_MINIMISATION: 490,
    Technique.APPEAL_TO_FEAR_PREJUDICE: 306,
    Technique.FLAG_WAVING: 245,
    Technique.CAUSAL_OVERSIMPLIFICATION: 184,
    Technique.APPEAL_TO_AUTHORITY: 123,
    Technique.SLOGANS: 123,
    Technique.WHATABOUTISM_STRAW_MEN_RED_HERRING: 92,
    Technique.BLACK_AND_WHITE_FALLACY: 92,
    Technique.THOUGHT_TERMINATING_CLICHES: 92,
    Technique.BANDWAGON_REDUCTIO_AD_HITLERUM: 92,
}
assert sum(OFFICIAL_CLASS_COUNTS.values()) == 6129


def synthetic_tc_instances(
    n_per_class: int, dim: int = 8, seed: int = 11
) -> list:
    """Span instances whose embedding rows identify their class."""
    from propspan.classifier import SpanInstance

    nrng = np.random.default_rng(seed)
    rng = random.Random(seed)
    patterns = {}
    for i, technique in enumerate(TC_CLASSES):
        pattern = np.zeros(dim)
        pattern[i % dim] = 2.0
        pattern[(i + 3) % dim] = -1.0
        patterns[technique] = pattern
    instances = []
    for technique in TC_CLASSES:
        for _ in range(n_per_class):
            n_tokens = rng.randint(2, 6)
            rows = patterns[technique] + nrng.normal(0, 0.15, size=(n_tokens, dim))
            instances.append(SpanInstance(embeddings=rows, features=None, technique=technique))
    return instances
