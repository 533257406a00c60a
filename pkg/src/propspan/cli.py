"""Command-line entry point wiring the modules into reproducible runs.

Every command writes a manifest (config hash plus input digests) next to
its outputs; identical manifests imply byte-identical outputs. Exit
codes: 1 usage, 2 data, 3 model.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import augment as aug
from . import classifier as clf
from . import evaluation as ev
from . import tagger as tg
from .corpus import (
    Corpus,
    LabeledSpan,
    Technique,
    load_articles,
    load_si_labels,
    load_tc_labels,
    write_predictions,
)
from .embeddings import load_embeddings
from .errors import (
    AlignmentError,
    CoverageError,
    DataFormatError,
    MissingEmbeddingError,
    ModelError,
)
from .features import FeatureSet, Gazetteer, KwTable, SidecarAnnotations, build_kw_table
from .manifest import write_manifest
from .pipeline import (
    InstanceBuilder,
    build_si_dataset,
    build_tc_instances,
    export_silver_token_stream,
)
from .segment import (
    project_labels,
    segment_article,
    unprojectable_spans,
    write_token_stream,
)

log = logging.getLogger(__name__)

USAGE_EXIT = 1
DATA_EXIT = 2
MODEL_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; explicit flags win")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--lenient", action="store_true", help="skip malformed rows")
    parser.add_argument(
        "--index-convention",
        choices=["scalar", "utf16"],
        default=None,
        help="how label files count characters (default scalar)",
    )


def _add_model_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--hidden-dim", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--threshold", type=float, default=None)
    parser.add_argument("--class-weight", type=float, default=None)
    parser.add_argument("--unidirectional", action="store_true")


def _add_feature_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--features", default=None, help="comma list of pos,ner,kw or 'none'")
    parser.add_argument("--embeddings", default=None, help="PEMB embedding file")
    parser.add_argument("--upstream-probs", default=None, help="upstream probability file")
    parser.add_argument("--sidecar", default=None, help="sidecar POS/NER annotation file")
    parser.add_argument("--gazetteer", default=None, help="directory of gazetteer lists")
    parser.add_argument("--oov-policy", choices=["zero", "error"], default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="propspan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="tokenize a corpus and project labels")
    p.add_argument("--articles", required=True)
    p.add_argument("--si-labels", default=None)
    p.add_argument("--tc-labels", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-si", help="train a span-identification tagger")
    p.add_argument("--articles", required=True)
    p.add_argument("--si-labels", required=True)
    p.add_argument("--holdout-fraction", type=float, default=None)
    _add_feature_params(p)
    _add_model_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_train_si)

    p = sub.add_parser("predict-si", help="decode spans with a trained tagger")
    p.add_argument("--articles", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--upstream-probs", default=None)
    p.add_argument("--sidecar", default=None)
    p.add_argument("--gazetteer", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict_si)

    p = sub.add_parser("train-tc", help="train the technique classifier")
    p.add_argument("--articles", required=True)
    p.add_argument("--tc-labels", required=True)
    p.add_argument("--silver", default=None, help="silver sample TSV to add")
    _add_feature_params(p)
    _add_model_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_train_tc)

    p = sub.add_parser("predict-tc", help="classify given spans")
    p.add_argument("--articles", required=True)
    p.add_argument("--spans", required=True, help="3-column TSV of spans to classify")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--gazetteer", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict_tc)

    p = sub.add_parser("augment", help="generate silver TC samples")
    p.add_argument("--articles", required=True)
    p.add_argument("--tc-labels", required=True)
    p.add_argument("--synonyms", default=None, help="word<TAB>alt1,alt2 lexicon")
    p.add_argument("--person", default=None, help="PERSON gazetteer file")
    p.add_argument("--org", default=None, help="ORG gazetteer file")
    p.add_argument("--gpe", default=None, help="GPE gazetteer file")
    p.add_argument("--total-new", type=int, default=None)
    p.add_argument("--replace-prob", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("score-si", help="score span predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--scorer", choices=["overlap", "exact", "both"], default="overlap")
    p.add_argument("--out", default=None)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--index-convention", choices=["scalar", "utf16"], default=None)
    p.set_defaults(func=cmd_score_si)

    p = sub.add_parser("score-tc", help="score technique predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--index-convention", choices=["scalar", "utf16"], default=None)
    p.set_defaults(func=cmd_score_tc)

    p = sub.add_parser("ablate", help="run the feature-ablation study")
    p.add_argument("--articles", required=True)
    p.add_argument("--si-labels", required=True)
    p.add_argument("--eval-articles", required=True)
    p.add_argument("--eval-si-labels", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--upstream-probs", default=None)
    _add_model_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep-threshold", help="decode at several thresholds")
    p.add_argument("--articles", required=True)
    p.add_argument("--si-labels", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--upstream-probs", default=None)
    p.add_argument("--sidecar", default=None)
    p.add_argument("--gazetteer", default=None)
    p.add_argument(
        "--thresholds",
        default="0.3:0.7:0.1",
        help="comma list or start:stop:step (inclusive)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_sweep_threshold)

    return parser


def _load_config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"bad config file {args.config}: {exc}") from exc
    if not isinstance(config, dict):
        raise DataFormatError(f"config file {args.config} must hold a JSON object")
    return config


def _resolve(args, config: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _load_corpus(args, config: dict, articles_dir: str, labels: str | None, kind: str) -> Corpus:
    strict = not getattr(args, "lenient", False)
    convention = _resolve(args, config, "index_convention", "scalar")
    articles = load_articles(articles_dir, strict=strict)
    spans: list[LabeledSpan] = []
    if labels is not None:
        loader = load_si_labels if kind == "si" else load_tc_labels
        spans = loader(labels, articles, strict=strict, index_convention=convention)
    return Corpus.build(articles, spans)


def _tagger_config(args, config: dict, input_dim: int) -> tg.TaggerConfig:
    return tg.TaggerConfig(
        input_dim=input_dim,
        hidden_dim=int(_resolve(args, config, "hidden_dim", 128)),
        bidirectional=False
        if getattr(args, "unidirectional", False)
        else bool(config.get("bidirectional", True)),
        learning_rate=float(_resolve(args, config, "learning_rate", 1e-3)),
        epochs=int(_resolve(args, config, "epochs", 20)),
        seed=int(_resolve(args, config, "seed", 0)),
        threshold=float(_resolve(args, config, "threshold", 0.5)),
        class_weight_positive=float(_resolve(args, config, "class_weight", 1.0)),
    )


def _make_builder(
    args, config: dict, kw_table: KwTable | None, upstream_path: str | None = None
) -> tuple[InstanceBuilder, dict]:
    feature_spec = _resolve(args, config, "features", "pos,ner,kw")
    try:
        feature_set = FeatureSet.parse(feature_spec)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
    table = None
    embeddings_path = getattr(args, "embeddings", None)
    if embeddings_path:
        table = load_embeddings(embeddings_path)
    upstream = None
    upstream_path = upstream_path or getattr(args, "upstream_probs", None)
    if upstream_path:
        upstream = tg.load_upstream_probs(upstream_path)
    sidecar = None
    if getattr(args, "sidecar", None):
        sidecar = SidecarAnnotations.load(args.sidecar)
    gazetteer = None
    if getattr(args, "gazetteer", None):
        gazetteer = Gazetteer.load_dir(args.gazetteer)
    builder = InstanceBuilder(
        embedding_table=table,
        kw_table=kw_table,
        feature_set=feature_set,
        gazetteer=gazetteer,
        sidecar=sidecar,
        oov_policy=_resolve(args, config, "oov_policy", "zero"),
        upstream=upstream,
    )
    meta = {
        "features": feature_set.names(),
        "embeddings_used": table is not None,
        "embedding_dim": table.dim if table is not None else None,
        "upstream_used": upstream is not None,
        "oov_policy": builder.oov_policy,
    }
    return builder, meta


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_preprocess(args) -> int:
    config = _load_config(args)
    kind = "tc" if args.tc_labels else "si"
    labels = args.tc_labels if kind == "tc" else args.si_labels
    corpus = _load_corpus(args, config, args.articles, labels, kind)
    if not corpus.articles:
        raise DataFormatError(f"no articles found in {args.articles}")
    out = _out_dir(args)
    sentences_by_article = {
        aid: segment_article(article) for aid, article in sorted(corpus.articles.items())
    }
    tokens_path = out / "tokens.jsonl"
    n_tokens = write_token_stream(tokens_path, sorted(sentences_by_article.items()))
    labels_path = out / "token_labels.jsonl"
    n_sentences = 0
    unprojectable = 0
    with open(labels_path, "w", encoding="utf-8") as fh:
        for aid, sentences in sorted(sentences_by_article.items()):
            spans = [s for s in corpus.spans if s.article_id == aid]
            unprojectable += len(unprojectable_spans(sentences, spans))
            for sentence, labels_seq in zip(sentences, project_labels(sentences, spans)):
                n_sentences += 1
                for token, label in zip(sentence.tokens, labels_seq):
                    fh.write(
                        json.dumps(
                            {
                                "article_id": aid,
                                "sentence_index": token.sentence_index,
                                "token_index": token.token_index,
                                "label": label,
                            }
                        )
                        + "\n"
                    )
    print(f"articles={len(corpus.articles)}")
    print(f"sentences={n_sentences}")
    print(f"tokens={n_tokens}")
    print(f"gold_spans={len(corpus.spans)}")
    print(f"unprojectable_spans={unprojectable}")
    inputs = {"articles": args.articles}
    if labels:
        inputs["labels"] = labels
    write_manifest(
        out,
        "preprocess",
        {"kind": kind, "index_convention": _resolve(args, config, "index_convention", "scalar")},
        inputs,
        ["tokens.jsonl", "token_labels.jsonl"],
    )
    return 0


def cmd_train_si(args) -> int:
    config = _load_config(args)
    corpus = _load_corpus(args, config, args.articles, args.si_labels, "si")
    kw_table = build_kw_table(corpus)
    builder, meta = _make_builder(args, config, kw_table)
    dataset = build_si_dataset(corpus, builder)
    instances = dataset.flat_instances()
    holdout_fraction = float(_resolve(args, config, "holdout_fraction", 0.1))
    n_holdout = int(len(instances) * holdout_fraction)
    train_insts = instances[: len(instances) - n_holdout] if n_holdout else instances
    holdout = instances[len(instances) - n_holdout :] if n_holdout else None
    tagger_config = _tagger_config(args, config, builder.input_dim())
    model, report = tg.train_tagger(train_insts, tagger_config, holdout=holdout)
    out = _out_dir(args)
    tg.save_model(model, out / "model.ptag")
    kw_table.save(out / "kw_table.json")
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    (out / "train_report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"trained on {len(train_insts)} sentences ({len(corpus.articles)} articles)")
    print(
        f"token-level {report.eval_source}: precision={report.precision:.4f} "
        f"recall={report.recall:.4f} f1={report.f1:.4f}"
    )
    inputs = {"articles": args.articles, "si_labels": args.si_labels}
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    if args.upstream_probs:
        inputs["upstream_probs"] = args.upstream_probs
    write_manifest(
        out,
        "train-si",
        {**meta, **_config_dict(tagger_config), "holdout_fraction": holdout_fraction},
        inputs,
        ["model.ptag", "kw_table.json", "meta.json", "train_report.json"],
    )
    return 0


def _config_dict(config) -> dict:
    out = dict(vars(config))
    return out


def _read_meta(model_dir: Path) -> dict:
    meta_path = model_dir / "meta.json"
    if not meta_path.exists():
        raise DataFormatError(f"missing meta.json in {model_dir}")
    return json.loads(meta_path.read_text(encoding="utf-8"))


def _builder_from_model_dir(args, config: dict, model_dir: Path) -> InstanceBuilder:
    meta = _read_meta(model_dir)
    if meta["embeddings_used"] and not getattr(args, "embeddings", None):
        raise DataFormatError("model was trained with embeddings; pass --embeddings")
    if meta["upstream_used"] and not getattr(args, "upstream_probs", None):
        raise DataFormatError("model was trained with upstream probs; pass --upstream-probs")
    if not meta["embeddings_used"]:
        args.embeddings = None
    if not meta["upstream_used"]:
        args.upstream_probs = None
    args.features = meta["features"]
    kw_table = KwTable.load(model_dir / "kw_table.json")
    builder, _ = _make_builder(args, config, kw_table)
    builder.oov_policy = meta.get("oov_policy", "zero")
    return builder


def cmd_predict_si(args) -> int:
    config = _load_config(args)
    model_dir = Path(args.model_dir)
    model = tg.load_model(model_dir / "model.ptag")
    builder = _builder_from_model_dir(args, config, model_dir)
    corpus = _load_corpus(args, config, args.articles, None, "si")
    dataset = build_si_dataset(corpus, builder, with_labels=False)
    threshold = args.threshold if args.threshold is not None else None
    predictions: list[LabeledSpan] = []
    for aid in dataset.article_ids:
        predictions.extend(
            tg.decode_spans(
                model, aid, dataset.sentences[aid], dataset.instances[aid], threshold
            )
        )
    out = _out_dir(args)
    write_predictions(predictions, out / "predictions.tsv", with_technique=False)
    print(f"predicted {len(predictions)} spans over {len(corpus.articles)} articles")
    inputs = {"articles": args.articles, "model": model_dir / "model.ptag"}
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    write_manifest(
        out,
        "predict-si",
        {"threshold": threshold if threshold is not None else model.config.threshold},
        inputs,
        ["predictions.tsv"],
    )
    return 0


def cmd_train_tc(args) -> int:
    config = _load_config(args)
    corpus = _load_corpus(args, config, args.articles, args.tc_labels, "tc")
    samples = aug.samples_from_corpus(corpus)
    if args.silver:
        samples = samples + aug.load_silver(args.silver)
    kw_table = build_kw_table(corpus)
    builder, meta = _make_builder(args, config, kw_table)
    instances = build_tc_instances(samples, builder, articles=corpus.articles)
    classifier_config = clf.ClassifierConfig(
        input_dim=builder.input_dim(),
        hidden_dim=int(_resolve(args, config, "hidden_dim", 128)),
        learning_rate=float(_resolve(args, config, "learning_rate", 1e-3)),
        epochs=int(_resolve(args, config, "epochs", 20)),
        seed=int(_resolve(args, config, "seed", 0)),
    )
    model = clf.train_classifier(instances, classifier_config)
    out = _out_dir(args)
    clf.save_model(model, out / "model.ptc1")
    kw_table.save(out / "kw_table.json")
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    n_silver = sum(1 for s in samples if s.silver)
    print(f"trained on {len(samples)} spans ({n_silver} silver)")
    inputs = {"articles": args.articles, "tc_labels": args.tc_labels}
    if args.silver:
        inputs["silver"] = args.silver
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    write_manifest(
        out,
        "train-tc",
        {**meta, **_config_dict(classifier_config)},
        inputs,
        ["model.ptc1", "kw_table.json", "meta.json"],
    )
    return 0


def cmd_predict_tc(args) -> int:
    config = _load_config(args)
    model_dir = Path(args.model_dir)
    model = clf.load_model(model_dir / "model.ptc1")
    builder = _builder_from_model_dir(args, config, model_dir)
    corpus = _load_corpus(args, config, args.articles, args.spans, "si")
    samples = [
        aug.TcSample(
            text=corpus.articles[s.article_id].text[s.start : s.end],
            technique=None,
            span=s,
        )
        for s in corpus.spans
    ]
    instances = build_tc_instances(samples, builder, articles=corpus.articles)
    predictions = []
    for sample, instance in zip(samples, instances):
        technique, _ = clf.predict_technique(model, instance)
        predictions.append(
            LabeledSpan(sample.span.article_id, sample.span.start, sample.span.end, technique)
        )
    out = _out_dir(args)
    write_predictions(predictions, out / "predictions.tsv", with_technique=True)
    print(f"classified {len(predictions)} spans")
    write_manifest(
        out,
        "predict-tc",
        {},
        {"articles": args.articles, "spans": args.spans, "model": model_dir / "model.ptc1"},
        ["predictions.tsv"],
    )
    return 0


def cmd_augment(args) -> int:
    config = _load_config(args)
    corpus = _load_corpus(args, config, args.articles, args.tc_labels, "tc")
    samples = aug.samples_from_corpus(corpus)
    lexicon = aug.Lexicon.load(
        synonyms_path=args.synonyms,
        person_path=args.person,
        org_path=args.org,
        gpe_path=args.gpe,
    )
    counts: dict[Technique, int] = {}
    for sample in samples:
        counts[sample.technique] = counts.get(sample.technique, 0) + 1
    seed = int(_resolve(args, config, "seed", 0))
    total_new = int(_resolve(args, config, "total_new", 3000))
    plan = aug.plan_targets(counts, total_new=total_new, seed=seed)
    replace_prob = float(_resolve(args, config, "replace_prob", 0.3))
    augmented, report = aug.augment_corpus(samples, lexicon, plan, replace_prob=replace_prob)
    silver = [s for s in augmented if s.silver]
    out = _out_dir(args)
    aug.write_silver(silver, out / "silver.tsv")
    write_token_stream(out / "silver_tokens.jsonl", export_silver_token_stream(augmented))
    plan_payload = {
        "seed": seed,
        "total_new": total_new,
        "replace_prob": replace_prob,
        "classes": {
            t.value: {
                "count": counts.get(t, 0),
                "target": plan.targets[t],
                "generated": report.generated.get(t, 0),
                "shortfall": report.shortfall.get(t, 0),
            }
            for t in Technique
        },
    }
    (out / "plan.json").write_text(json.dumps(plan_payload, indent=2) + "\n", encoding="utf-8")
    print(f"generated {report.total_generated} silver samples")
    for technique in Technique:
        made = report.generated.get(technique, 0)
        if made or report.shortfall.get(technique):
            line = f"  {technique.value}: +{made}"
            if report.shortfall.get(technique):
                line += f" (shortfall {report.shortfall[technique]})"
            print(line)
    inputs = {"articles": args.articles, "tc_labels": args.tc_labels}
    for name in ("synonyms", "person", "org", "gpe"):
        if getattr(args, name):
            inputs[name] = getattr(args, name)
    write_manifest(
        out,
        "augment",
        {"seed": seed, "total_new": total_new, "replace_prob": replace_prob},
        inputs,
        ["silver.tsv", "silver_tokens.jsonl", "plan.json"],
    )
    return 0


def _print_si_metrics(name: str, metrics: ev.SiMetrics) -> None:
    print(
        f"{name}: precision={metrics.precision:.4f} recall={metrics.recall:.4f} "
        f"f1={metrics.f1:.4f} gold={metrics.gold_count} pred={metrics.pred_count}"
    )


def cmd_score_si(args) -> int:
    articles = load_articles(args.articles, strict=not args.lenient)
    convention = args.index_convention or "scalar"
    pred = load_si_labels(args.pred, articles, strict=not args.lenient, index_convention=convention)
    gold = load_si_labels(args.gold, articles, strict=not args.lenient, index_convention=convention)
    results = {}
    if args.scorer in ("overlap", "both"):
        results["overlap"] = ev.score_si_overlap(pred, gold)
        _print_si_metrics("overlap", results["overlap"])
    if args.scorer in ("exact", "both"):
        results["exact"] = ev.score_si_exact(pred, gold)
        _print_si_metrics("exact", results["exact"])
    if args.out:
        out = _out_dir(args)
        payload = {
            name: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "gold_count": m.gold_count,
                "pred_count": m.pred_count,
            }
            for name, m in results.items()
        }
        (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(
            out,
            "score-si",
            {"scorer": args.scorer},
            {"pred": args.pred, "gold": args.gold, "articles": args.articles},
            ["metrics.json"],
        )
    return 0


def cmd_score_tc(args) -> int:
    articles = load_articles(args.articles, strict=not args.lenient)
    convention = args.index_convention or "scalar"
    pred = load_tc_labels(args.pred, articles, strict=not args.lenient, index_convention=convention)
    gold = load_tc_labels(args.gold, articles, strict=not args.lenient, index_convention=convention)
    metrics = ev.score_tc(pred, gold)
    print(f"micro_f1={metrics.micro_f1:.4f} spans={len(gold)}")
    for technique in Technique:
        flag = " (no support)" if technique in metrics.no_support else ""
        print(f"  {technique.value}: f1={metrics.per_class_f1[technique]:.4f}{flag}")
    if args.out:
        out = _out_dir(args)
        payload = {
            "micro_f1": metrics.micro_f1,
            "per_class_f1": {t.value: metrics.per_class_f1[t] for t in Technique},
            "no_support": sorted(t.value for t in metrics.no_support),
            "confusion": metrics.confusion.tolist(),
        }
        (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(
            out,
            "score-tc",
            {},
            {"pred": args.pred, "gold": args.gold, "articles": args.articles},
            ["metrics.json"],
        )
    return 0


def cmd_ablate(args) -> int:
    config = _load_config(args)
    train_corpus = _load_corpus(args, config, args.articles, args.si_labels, "si")
    eval_corpus = _load_corpus(args, config, args.eval_articles, args.eval_si_labels, "si")
    table = load_embeddings(args.embeddings)
    upstream = tg.load_upstream_probs(args.upstream_probs) if args.upstream_probs else None
    tagger_config = _tagger_config(args, config, input_dim=1)  # per-cell dims are derived
    report = ev.run_ablation(
        ev.table_grid(), train_corpus, eval_corpus, table, tagger_config, upstream=upstream
    )
    out = _out_dir(args)
    (out / "ablation.tsv").write_text(report.to_tsv(), encoding="utf-8")
    (out / "cells.log").write_text(report.to_log_lines(), encoding="utf-8")
    print(report.pretty(), end="")
    inputs = {
        "articles": args.articles,
        "si_labels": args.si_labels,
        "eval_articles": args.eval_articles,
        "eval_si_labels": args.eval_si_labels,
        "embeddings": args.embeddings,
    }
    write_manifest(
        out,
        "ablate",
        _config_dict(tagger_config),
        inputs,
        ["ablation.tsv"],  # cells.log carries wall times, not reproducible
    )
    return 0


def _parse_thresholds(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DataFormatError(f"bad threshold range {spec!r}, want start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise DataFormatError("threshold step must be positive")
        values = []
        i = 0
        while True:
            v = round(start + i * step, 10)
            if v > stop + 1e-9:
                break
            values.append(v)
            i += 1
        return values
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise DataFormatError(f"bad threshold list {spec!r}") from exc


def cmd_sweep_threshold(args) -> int:
    config = _load_config(args)
    model_dir = Path(args.model_dir)
    model = tg.load_model(model_dir / "model.ptag")
    builder = _builder_from_model_dir(args, config, model_dir)
    corpus = _load_corpus(args, config, args.articles, args.si_labels, "si")
    dataset = build_si_dataset(corpus, builder, with_labels=False)
    thresholds = _parse_thresholds(args.thresholds)
    rows = ["threshold\tprecision\trecall\tf1\tpredicted_chars"]
    print("threshold  precision  recall  f1      predicted_chars")
    for threshold in thresholds:
        predictions: list[LabeledSpan] = []
        for aid in dataset.article_ids:
            predictions.extend(
                tg.decode_spans(
                    model, aid, dataset.sentences[aid], dataset.instances[aid], threshold
                )
            )
        metrics = ev.score_si_overlap(predictions, corpus.spans)
        mass = sum(s.length() for s in predictions)
        rows.append(
            f"{threshold}\t{metrics.precision:.4f}\t{metrics.recall:.4f}\t"
            f"{metrics.f1:.4f}\t{mass}"
        )
        print(
            f"{threshold:<9}  {metrics.precision:<9.4f}  {metrics.recall:<6.4f}  "
            f"{metrics.f1:<6.4f}  {mass}"
        )
    out = _out_dir(args)
    (out / "sweep.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    inputs = {"articles": args.articles, "si_labels": args.si_labels, "model": model_dir / "model.ptag"}
    if args.embeddings:
        inputs["embeddings"] = args.embeddings
    write_manifest(
        out, "sweep-threshold", {"thresholds": thresholds}, inputs, ["sweep.tsv"]
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep main() callable
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return args.func(args)
    except (DataFormatError, AlignmentError, CoverageError, MissingEmbeddingError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return MODEL_EXIT


if __name__ == "__main__":
    sys.exit(main())
