"""Span scorers and the feature-ablation harness.

Two span-identification scorers ship side by side: a strict one that
only credits exact (start, end) matches, and the default
overlap-proportional one, which grants each predicted span credit equal
to its character overlap with gold spans divided by the prediction's
length (and symmetrically for recall). Predictions are merged before
overlap scoring; gold spans never are, since gold data may legitimately
overlap. Scores are global over all articles.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import NUM_TECHNIQUES, Corpus, LabeledSpan, Technique
from .embeddings import EmbeddingTable
from .errors import CoverageError, DataFormatError
from .features import FeatureSet, build_kw_table
from .pipeline import InstanceBuilder, build_si_dataset
from .segment import merge_spans
from .tagger import TaggerConfig, decode_spans, predict_probs, train_tagger

log = logging.getLogger(__name__)


@dataclass
class SiMetrics:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _by_article(spans: list[LabeledSpan]) -> dict[int, list[LabeledSpan]]:
    grouped: dict[int, list[LabeledSpan]] = {}
    for span in spans:
        grouped.setdefault(span.article_id, []).append(span)
    return grouped


def score_si_exact(
    pred_spans: list[LabeledSpan], gold_spans: list[LabeledSpan]
) -> SiMetrics:
    """Strict scoring: credit only exact (article, start, end) matches.

    Matching is greedy one-to-one over spans sorted by (article, start,
    end), so duplicate predictions consume gold spans at most once.
    """
    pred_by_article = _by_article(pred_spans)
    gold_by_article = _by_article(gold_spans)
    tp = 0
    for aid, preds in pred_by_article.items():
        unmatched = sorted(g.sort_key() for g in gold_by_article.get(aid, []))
        for pred in sorted(preds, key=LabeledSpan.sort_key):
            key = pred.sort_key()
            for i, gold_key in enumerate(unmatched):
                if gold_key == key:
                    unmatched.pop(i)
                    tp += 1
                    break
    if not pred_spans and not gold_spans:
        precision = recall = 1.0
    else:
        precision = tp / len(pred_spans) if pred_spans else 0.0
        recall = tp / len(gold_spans) if gold_spans else 0.0
    return SiMetrics(precision, recall, _f1(precision, recall), len(gold_spans), len(pred_spans))


def score_si_overlap(
    pred_spans: list[LabeledSpan], gold_spans: list[LabeledSpan]
) -> SiMetrics:
    """Overlap-proportional scoring with merged predictions.

    precision = (1/|S|) sum over predictions s of sum over gold t of
    |s∩t|/|s|; recall symmetrically with gold lengths. Gold spans are
    left unmerged.
    """
    merged_preds = merge_spans(pred_spans)
    pred_by_article = _by_article(merged_preds)
    gold_by_article = _by_article(gold_spans)
    precision_sum = 0.0
    recall_sum = 0.0
    for aid, preds in pred_by_article.items():
        for s in preds:
            for t in gold_by_article.get(aid, []):
                inter = min(s.end, t.end) - max(s.start, t.start)
                if inter > 0:
                    precision_sum += inter / s.length()
    for aid, golds in gold_by_article.items():
        for t in golds:
            for s in pred_by_article.get(aid, []):
                inter = min(s.end, t.end) - max(s.start, t.start)
                if inter > 0:
                    recall_sum += inter / t.length()
    if not merged_preds and not gold_spans:
        precision = recall = 1.0
    else:
        precision = precision_sum / len(merged_preds) if merged_preds else 0.0
        recall = recall_sum / len(gold_spans) if gold_spans else 0.0
    return SiMetrics(
        precision, recall, _f1(precision, recall), len(gold_spans), len(merged_preds)
    )


@dataclass
class TcMetrics:
    micro_f1: float
    per_class_f1: dict[Technique, float]
    confusion: np.ndarray  # (14, 14), rows gold, columns predicted
    no_support: set[Technique] = field(default_factory=set)


def score_tc(pred_spans: list[LabeledSpan], gold_spans: list[LabeledSpan]) -> TcMetrics:
    """Micro and per-class F1 for technique predictions.

    Predictions must cover the gold spans one-to-one by (article, start,
    end); under that precondition micro-F1 equals accuracy. Classes with
    no gold or predicted instances are reported as F1 0 with a
    no-support flag.
    """
    for span in pred_spans + gold_spans:
        if span.technique is None:
            raise DataFormatError(
                f"span {span.article_id}:[{span.start},{span.end}) lacks a technique"
            )
    gold_keyed: dict[tuple[int, int, int], list[Technique]] = {}
    for span in gold_spans:
        gold_keyed.setdefault(span.sort_key(), []).append(span.technique)
    pred_keyed: dict[tuple[int, int, int], list[Technique]] = {}
    for span in pred_spans:
        pred_keyed.setdefault(span.sort_key(), []).append(span.technique)
    missing = [k for k in gold_keyed if len(pred_keyed.get(k, [])) != len(gold_keyed[k])]
    extra = [k for k in pred_keyed if k not in gold_keyed]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"uncovered or miscounted gold spans: {sorted(missing)[:10]}")
        if extra:
            parts.append(f"predictions for unknown spans: {sorted(extra)[:10]}")
        raise CoverageError("; ".join(parts))
    confusion = np.zeros((NUM_TECHNIQUES, NUM_TECHNIQUES), dtype=np.int64)
    for key, golds in gold_keyed.items():
        preds = pred_keyed[key]
        for g, p in zip(sorted(golds, key=lambda t: t.index), sorted(preds, key=lambda t: t.index)):
            confusion[g.index][p.index] += 1
    total = int(confusion.sum())
    correct = int(np.trace(confusion))
    micro_f1 = correct / total if total else 0.0
    per_class: dict[Technique, float] = {}
    no_support: set[Technique] = set()
    for technique in Technique:
        i = technique.index
        gold_n = int(confusion[i].sum())
        pred_n = int(confusion[:, i].sum())
        if gold_n == 0 and pred_n == 0:
            per_class[technique] = 0.0
            no_support.add(technique)
            continue
        precision = confusion[i][i] / pred_n if pred_n else 0.0
        recall = confusion[i][i] / gold_n if gold_n else 0.0
        per_class[technique] = _f1(precision, recall)
    return TcMetrics(micro_f1, per_class, confusion, no_support)


@dataclass(frozen=True)
class AblationCell:
    """One trained-and-scored configuration in an ablation study."""

    name: str
    use_embeddings: bool
    feature_set: FeatureSet | None
    composed: bool = False


def table_grid() -> list[AblationCell]:
    """The standard six-cell study: embeddings-only, all features,
    each feature removed in turn, and the upstream-probability model."""
    return [
        AblationCell("lstm_embeddings_only", True, None),
        AblationCell("lstm_all_features", True, FeatureSet()),
        AblationCell("lstm_without_pos", True, FeatureSet(pos=False)),
        AblationCell("lstm_without_ner", True, FeatureSet(ner=False)),
        AblationCell("lstm_without_kw", True, FeatureSet(kw=False)),
        AblationCell("upstream_probs_plus_features", False, FeatureSet(), composed=True),
    ]


@dataclass
class AblationRow:
    name: str
    config_hash: str
    precision: float | None
    recall: float | None
    f1: float | None
    wall_time: float
    error: str | None = None


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def to_tsv(self) -> str:
        """Deterministic metrics table (no timing information)."""
        lines = ["name\tprecision\trecall\tf1"]
        for row in self.rows:
            if row.error is not None:
                lines.append(f"{row.name}\tERROR\tERROR\tERROR")
            else:
                lines.append(
                    f"{row.name}\t{row.precision:.4f}\t{row.recall:.4f}\t{row.f1:.4f}"
                )
        return "\n".join(lines) + "\n"

    def to_log_lines(self) -> str:
        """Structured per-cell log including wall time and config hash."""
        lines = []
        for row in self.rows:
            lines.append(
                json.dumps(
                    {
                        "name": row.name,
                        "config_hash": row.config_hash,
                        "precision": row.precision,
                        "recall": row.recall,
                        "f1": row.f1,
                        "wall_time": row.wall_time,
                        "error": row.error,
                    }
                )
            )
        return "\n".join(lines) + "\n"

    def pretty(self) -> str:
        width = max(len(r.name) for r in self.rows) if self.rows else 4
        lines = [f"{'name':<{width}}  {'P':>7} {'R':>7} {'F':>7}"]
        for row in self.rows:
            if row.error is not None:
                lines.append(f"{row.name:<{width}}  failed: {row.error}")
            else:
                lines.append(
                    f"{row.name:<{width}}  {row.precision:7.4f} {row.recall:7.4f} "
                    f"{row.f1:7.4f}"
                )
        return "\n".join(lines) + "\n"


def _cell_hash(cell: AblationCell, config: TaggerConfig) -> str:
    payload = {
        "name": cell.name,
        "use_embeddings": cell.use_embeddings,
        "features": cell.feature_set.names() if cell.feature_set else None,
        "composed": cell.composed,
        "config": {
            "hidden_dim": config.hidden_dim,
            "bidirectional": config.bidirectional,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "seed": config.seed,
            "threshold": config.threshold,
            "class_weight_positive": config.class_weight_positive,
        },
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _derive_upstream(
    train_corpus: Corpus,
    eval_corpus: Corpus,
    table: EmbeddingTable,
    config: TaggerConfig,
    kw_table,
) -> dict[tuple[int, int, int], float]:
    """Train an embeddings-only tagger and use its probabilities upstream."""
    builder = InstanceBuilder(embedding_table=table, kw_table=kw_table, feature_set=None)
    train_ds = build_si_dataset(train_corpus, builder)
    base_config = TaggerConfig(
        input_dim=table.dim,
        hidden_dim=config.hidden_dim,
        bidirectional=config.bidirectional,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        seed=config.seed,
        threshold=config.threshold,
        class_weight_positive=config.class_weight_positive,
    )
    model, _ = train_tagger(train_ds.flat_instances(), base_config)
    probs: dict[tuple[int, int, int], float] = {}
    for corpus in (train_corpus, eval_corpus):
        ds = build_si_dataset(corpus, builder, with_labels=False)
        for aid in ds.article_ids:
            for sentence, inst in zip(ds.sentences[aid], ds.instances[aid]):
                for token, p in zip(sentence.tokens, predict_probs(model, inst)):
                    probs[(aid, token.sentence_index, token.token_index)] = float(p)
    return probs


def run_ablation(
    grid: list[AblationCell],
    train_corpus: Corpus,
    eval_corpus: Corpus,
    embedding_table: EmbeddingTable,
    config: TaggerConfig,
    kw_table=None,
    gazetteer=None,
    upstream: dict[tuple[int, int, int], float] | None = None,
) -> AblationReport:
    """Train and score every cell with a shared seed.

    Composed cells need upstream probabilities; when none are supplied
    they are derived from an embeddings-only tagger trained on the same
    training corpus. A failing cell is recorded and the rest still run.
    """
    if kw_table is None:
        kw_table = build_kw_table(train_corpus)
    eval_gold = eval_corpus.spans
    derived_upstream = upstream
    rows = []
    for cell in grid:
        start = time.monotonic()
        try:
            cell_upstream = None
            if cell.composed:
                if derived_upstream is None:
                    derived_upstream = _derive_upstream(
                        train_corpus, eval_corpus, embedding_table, config, kw_table
                    )
                cell_upstream = derived_upstream
            builder = InstanceBuilder(
                embedding_table=embedding_table if cell.use_embeddings else None,
                kw_table=kw_table,
                feature_set=cell.feature_set,
                gazetteer=gazetteer,
                upstream=cell_upstream,
            )
            cell_config = TaggerConfig(
                input_dim=builder.input_dim(),
                hidden_dim=config.hidden_dim,
                bidirectional=config.bidirectional,
                learning_rate=config.learning_rate,
                epochs=config.epochs,
                seed=config.seed,
                threshold=config.threshold,
                class_weight_positive=config.class_weight_positive,
            )
            train_ds = build_si_dataset(train_corpus, builder)
            model, _ = train_tagger(train_ds.flat_instances(), cell_config)
            eval_ds = build_si_dataset(eval_corpus, builder, with_labels=False)
            predictions: list[LabeledSpan] = []
            for aid in eval_ds.article_ids:
                predictions.extend(
                    decode_spans(model, aid, eval_ds.sentences[aid], eval_ds.instances[aid])
                )
            metrics = score_si_overlap(predictions, eval_gold)
            rows.append(
                AblationRow(
                    name=cell.name,
                    config_hash=_cell_hash(cell, cell_config),
                    precision=metrics.precision,
                    recall=metrics.recall,
                    f1=metrics.f1,
                    wall_time=time.monotonic() - start,
                )
            )
        except Exception as exc:  # record the failure, keep going
            log.warning("ablation cell %s failed: %s", cell.name, exc)
            rows.append(
                AblationRow(
                    name=cell.name,
                    config_hash=_cell_hash(cell, config),
                    precision=None,
                    recall=None,
                    f1=None,
                    wall_time=time.monotonic() - start,
                    error=str(exc),
                )
            )
    return AblationReport(rows=rows)
