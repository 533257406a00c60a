"""Offset-preserving sentence segmentation and tokenization.

Sentences are the newline-delimited lines of the article file. Tokens
are maximal runs of alphanumeric characters or single non-whitespace
punctuation characters; every token records its exact character offsets
into the original article text, so slicing the article at
``(token.start, token.end)`` always reproduces ``token.text``.

The module also converts between character-indexed spans and binary
per-token label sequences (a token counts as labeled when any of its
characters falls inside a span) and merges overlapping predicted spans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Article, LabeledSpan
from .errors import AlignmentError, DataFormatError

LabelSeq = list[int]


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    sentence_index: int
    token_index: int


@dataclass(frozen=True)
class Sentence:
    index: int
    start: int
    end: int
    tokens: list[Token]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class TokenRecord:
    """One line of the token-stream export."""

    article_id: int
    sentence_index: int
    token_index: int
    text: str
    start: int
    end: int


def tokenize_line(text: str, base_offset: int = 0, sentence_index: int = 0) -> list[Token]:
    """Tokenize one line; offsets are relative to ``base_offset``."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
        else:
            j = i + 1
        tokens.append(
            Token(
                text=text[i:j],
                start=base_offset + i,
                end=base_offset + j,
                sentence_index=sentence_index,
                token_index=len(tokens),
            )
        )
        i = j
    return tokens


def segment_article(article: Article) -> list[Sentence]:
    """Split an article into sentences (one per non-blank line) and tokens.

    Lines without any token (empty or all-whitespace) yield no sentence;
    sentence indexes number the emitted sentences consecutively.
    """
    sentences: list[Sentence] = []
    offset = 0
    for line in article.text.split("\n"):
        tokens = tokenize_line(line, base_offset=offset, sentence_index=len(sentences))
        if tokens:
            sentences.append(
                Sentence(
                    index=len(sentences),
                    start=offset,
                    end=offset + len(line),
                    tokens=tokens,
                )
            )
        offset += len(line) + 1
    return sentences


def project_labels(sentences: list[Sentence], spans: list[LabeledSpan]) -> list[LabelSeq]:
    """Binary token labels: 1 iff the token's character range intersects a span.

    Partial overlap counts, so spans covering fragments of a token still
    label it. ``spans`` must belong to the article the sentences come from.
    """
    intervals = [(s.start, s.end) for s in spans]
    seqs = []
    for sentence in sentences:
        seq = []
        for token in sentence.tokens:
            hit = any(max(token.start, a) < min(token.end, b) for a, b in intervals)
            seq.append(1 if hit else 0)
        seqs.append(seq)
    return seqs


def unprojectable_spans(
    sentences: list[Sentence], spans: list[LabeledSpan]
) -> list[LabeledSpan]:
    """Spans that overlap no token at all (e.g. whitespace-only ranges).

    Such spans project to all-zero label sequences and are invisible to
    token-level models; callers report their count as a diagnostic.
    """
    tokens = [t for s in sentences for t in s.tokens]
    missed = []
    for span in spans:
        if not any(max(t.start, span.start) < min(t.end, span.end) for t in tokens):
            missed.append(span)
    return missed


def tokens_to_spans(
    article_id: int, sentences: list[Sentence], label_seqs: list[LabelSeq]
) -> list[LabeledSpan]:
    """Turn maximal runs of 1-labeled tokens back into character spans.

    Each run within one sentence becomes a span from the run's first
    token start to its last token end.
    """
    if len(sentences) != len(label_seqs):
        raise AlignmentError(
            f"{len(sentences)} sentences but {len(label_seqs)} label sequences"
        )
    spans = []
    for sentence, labels in zip(sentences, label_seqs):
        if len(sentence.tokens) != len(labels):
            raise AlignmentError(
                f"sentence {sentence.index}: {len(sentence.tokens)} tokens "
                f"but {len(labels)} labels"
            )
        run_start: Token | None = None
        prev: Token | None = None
        for token, label in zip(sentence.tokens, labels):
            if label:
                if run_start is None:
                    run_start = token
                prev = token
            elif run_start is not None:
                spans.append(LabeledSpan(article_id, run_start.start, prev.end))
                run_start = None
        if run_start is not None:
            spans.append(LabeledSpan(article_id, run_start.start, prev.end))
    return spans


def merge_spans(spans: list[LabeledSpan]) -> list[LabeledSpan]:
    """Union strictly overlapping spans until none overlap.

    Touching spans (one ends where the next starts) stay separate. The
    result is sorted and pairwise disjoint per article. Merged spans keep
    their technique only when every constituent agrees on it.
    """
    merged: list[LabeledSpan] = []
    by_article: dict[int, list[LabeledSpan]] = {}
    for span in spans:
        by_article.setdefault(span.article_id, []).append(span)
    for article_id in sorted(by_article):
        group = sorted(by_article[article_id], key=LabeledSpan.sort_key)
        current = group[0]
        techniques = {current.technique}
        for span in group[1:]:
            if span.start < current.end:
                techniques.add(span.technique)
                if span.end > current.end:
                    current = LabeledSpan(
                        article_id,
                        current.start,
                        span.end,
                        current.technique if len(techniques) == 1 else None,
                    )
                elif len(techniques) > 1 and current.technique is not None:
                    current = LabeledSpan(article_id, current.start, current.end, None)
            else:
                merged.append(current)
                current = span
                techniques = {span.technique}
        merged.append(current)
    return merged


def write_token_stream(
    path: str | Path, items: Iterable[tuple[int, list[Sentence]]]
) -> int:
    """Write the token-stream export: one JSON record per token.

    Records carry (article_id, sentence_index, token_index, text, start,
    end) and appear in (article, sentence, token) order. Returns the
    number of records written.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for article_id, sentences in items:
            for sentence in sentences:
                for token in sentence.tokens:
                    record = {
                        "article_id": article_id,
                        "sentence_index": token.sentence_index,
                        "token_index": token.token_index,
                        "text": token.text,
                        "start": token.start,
                        "end": token.end,
                    }
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                    count += 1
    return count


def read_token_stream(path: str | Path) -> list[TokenRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    TokenRecord(
                        article_id=int(obj["article_id"]),
                        sentence_index=int(obj["sentence_index"]),
                        token_index=int(obj["token_index"]),
                        text=str(obj["text"]),
                        start=int(obj["start"]),
                        end=int(obj["end"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad token record: {exc}") from exc
    return records
