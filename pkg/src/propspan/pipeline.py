"""Instance assembly: turn corpora into model inputs.

Builders combine segmentation, handcrafted features, embedding lookups
and optional upstream probabilities into the per-sentence instances the
tagger trains on, and into per-span instances for the classifier. Span
tokens are mapped to embedding keys through the article token that
contains them, so spans starting mid-token still reuse that token's
vector; detached silver texts have no article tokens and fall back to
synthetic keys (filled only if an embedding dump was produced for them,
zero vectors otherwise).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .augment import TcSample
from .classifier import SpanInstance
from .corpus import Article, Corpus, LabeledSpan
from .embeddings import EmbeddingTable, sentence_vectors
from .errors import AlignmentError, DataFormatError, MissingEmbeddingError
from .features import (
    FeatureSet,
    Gazetteer,
    KwTable,
    SidecarAnnotations,
    featurize,
)
from .segment import Sentence, project_labels, segment_article, tokenize_line
from .tagger import SentenceInstance

# Detached silver texts get embedding keys in a reserved article-id range:
# the i-th silver sample in a training list is article SILVER_ARTICLE_BASE+i.
SILVER_ARTICLE_BASE = 1 << 30


@dataclass
class InstanceBuilder:
    """Shared recipe for turning sentences into model input rows."""

    embedding_table: EmbeddingTable | None = None
    kw_table: KwTable | None = None
    feature_set: FeatureSet | None = FeatureSet()
    gazetteer: Gazetteer | None = None
    sidecar: SidecarAnnotations | None = None
    oov_policy: str = "zero"
    upstream: dict[tuple[int, int, int], float] | None = None

    def input_dim(self) -> int:
        dim = self.embedding_table.dim if self.embedding_table is not None else 0
        if self.feature_set is not None:
            dim += self.feature_set.dim(with_upstream=self.upstream is not None)
        return dim

    def _upstream_for(self, article_id: int, sentence: Sentence) -> list[float] | None:
        if self.upstream is None:
            return None
        probs = []
        for token in sentence.tokens:
            key = (article_id, token.sentence_index, token.token_index)
            if key not in self.upstream:
                raise AlignmentError(
                    f"no upstream probability for article {article_id} sentence "
                    f"{token.sentence_index} token {token.token_index}"
                )
            probs.append(self.upstream[key])
        return probs

    def sentence_instance(
        self, article_id: int, sentence: Sentence, labels: list[int] | None = None
    ) -> SentenceInstance:
        embeddings = None
        if self.embedding_table is not None:
            embeddings = sentence_vectors(
                self.embedding_table, article_id, sentence, oov_policy=self.oov_policy
            )
        features = None
        if self.feature_set is not None:
            pos = ner = None
            if self.sidecar is not None:
                pos = self.sidecar.pos_for(article_id, sentence) if self.feature_set.pos else None
                ner = self.sidecar.ner_for(article_id, sentence) if self.feature_set.ner else None
            features = featurize(
                sentence,
                self.kw_table,
                pos_tags=pos,
                ner_tags=ner,
                gazetteer=self.gazetteer,
                upstream_probs=self._upstream_for(article_id, sentence),
                feature_set=self.feature_set,
            )
        if embeddings is None and features is None:
            raise DataFormatError("builder produces no input columns at all")
        return SentenceInstance(embeddings=embeddings, features=features, labels=labels)


@dataclass
class SiDataset:
    """Per-article sentences and instances plus a flat training view."""

    article_ids: list[int]
    sentences: dict[int, list[Sentence]]
    instances: dict[int, list[SentenceInstance]]

    def flat_instances(self) -> list[SentenceInstance]:
        return [inst for aid in self.article_ids for inst in self.instances[aid]]

    def flat_keys(self) -> list[tuple[int, Sentence]]:
        return [(aid, s) for aid in self.article_ids for s in self.sentences[aid]]


def build_si_dataset(
    corpus: Corpus,
    builder: InstanceBuilder,
    with_labels: bool = True,
) -> SiDataset:
    """Segment every article and build one instance per sentence."""
    article_ids = sorted(corpus.articles)
    sentences: dict[int, list[Sentence]] = {}
    instances: dict[int, list[SentenceInstance]] = {}
    spans_by_article: dict[int, list[LabeledSpan]] = {aid: [] for aid in article_ids}
    for span in corpus.spans:
        spans_by_article[span.article_id].append(span)
    for aid in article_ids:
        sents = segment_article(corpus.articles[aid])
        sentences[aid] = sents
        if with_labels:
            label_seqs = project_labels(sents, spans_by_article[aid])
        else:
            label_seqs = [None] * len(sents)
        instances[aid] = [
            builder.sentence_instance(aid, sentence, labels)
            for sentence, labels in zip(sents, label_seqs)
        ]
    return SiDataset(article_ids=article_ids, sentences=sentences, instances=instances)


class ArticleTokenIndex:
    """Find the article token (and embedding key) covering a character."""

    def __init__(self, sentences: list[Sentence]):
        self._starts: list[int] = []
        self._tokens: list[tuple[int, int, int, int]] = []  # start, end, sent, tok
        for sentence in sentences:
            for token in sentence.tokens:
                self._starts.append(token.start)
                self._tokens.append(
                    (token.start, token.end, token.sentence_index, token.token_index)
                )

    def key_at(self, char_pos: int) -> tuple[int, int] | None:
        """(sentence_index, token_index) of the token containing char_pos."""
        idx = bisect.bisect_right(self._starts, char_pos) - 1
        if idx < 0:
            return None
        start, end, sent, tok = self._tokens[idx]
        if start <= char_pos < end:
            return (sent, tok)
        return None


def build_tc_instances(
    samples: list[TcSample],
    builder: InstanceBuilder,
    articles: dict[int, Article] | None = None,
    for_eval: bool = False,
) -> list[SpanInstance]:
    """Tokenize each sample's text and build classifier instances.

    Gold samples look up embeddings through the article token containing
    each span token; silver samples use their synthetic article ids.
    Evaluation sets must not contain silver samples.
    """
    token_indexes: dict[int, ArticleTokenIndex] = {}
    instances = []
    silver_ordinal = 0
    for sample in samples:
        if sample.silver and for_eval:
            raise DataFormatError("silver samples must not enter evaluation sets")
        tokens = tokenize_line(sample.text)
        sentence = Sentence(index=0, start=0, end=len(sample.text), tokens=tokens)
        features = None
        if builder.feature_set is not None:
            features = featurize(
                sentence,
                builder.kw_table,
                gazetteer=builder.gazetteer,
                feature_set=builder.feature_set,
            )
        embeddings = None
        if builder.embedding_table is not None:
            embeddings = _span_embeddings(
                sample, sentence, builder, token_indexes, articles, silver_ordinal
            )
        if sample.silver:
            silver_ordinal += 1
        instances.append(
            SpanInstance(embeddings=embeddings, features=features, technique=sample.technique)
        )
    return instances


def _span_embeddings(
    sample: TcSample,
    sentence: Sentence,
    builder: InstanceBuilder,
    token_indexes: dict[int, ArticleTokenIndex],
    articles: dict[int, Article] | None,
    silver_ordinal: int,
) -> np.ndarray:
    table = builder.embedding_table
    out = np.zeros((len(sentence.tokens), table.dim), dtype=np.float64)
    if sample.silver or sample.span is None:
        synthetic_id = SILVER_ARTICLE_BASE + silver_ordinal
        for i, token in enumerate(sentence.tokens):
            vec = table.get((synthetic_id, 0, token.token_index))
            if vec is not None:
                out[i] = vec
        return out
    aid = sample.span.article_id
    index = token_indexes.get(aid)
    if index is None:
        if articles is None or aid not in articles:
            raise DataFormatError(
                f"article {aid} text needed to align span embeddings but not provided"
            )
        index = token_indexes[aid] = ArticleTokenIndex(segment_article(articles[aid]))
    for i, token in enumerate(sentence.tokens):
        key = index.key_at(sample.span.start + token.start)
        vec = table.get((aid, key[0], key[1])) if key is not None else None
        if vec is None:
            if builder.oov_policy == "error":
                raise MissingEmbeddingError(
                    f"no embedding for span token {token.text!r} of article {aid} "
                    f"span [{sample.span.start},{sample.span.end})"
                )
            continue
        out[i] = vec
    return out


@dataclass
class TcDataset:
    samples: list[TcSample]
    instances: list[SpanInstance] = field(default_factory=list)


def export_silver_token_stream(samples: list[TcSample]) -> list[tuple[int, list[Sentence]]]:
    """Token-stream items for silver samples under their synthetic ids.

    Feeding these to the embedding exporter lets re-generated dumps cover
    silver texts; numbering matches build_tc_instances.
    """
    items = []
    ordinal = 0
    for sample in samples:
        if not sample.silver:
            continue
        tokens = tokenize_line(sample.text)
        sentence = Sentence(index=0, start=0, end=len(sample.text), tokens=tokens)
        items.append((SILVER_ARTICLE_BASE + ordinal, [sentence]))
        ordinal += 1
    return items
