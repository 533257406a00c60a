"""Binary token taggers for span identification.

Two architectures share one training loop:

* a (bi)directional LSTM over per-token input rows built from fixed
  contextual embeddings concatenated with handcrafted features;
* the same network over features plus one extra column holding an
  upstream per-token propaganda probability produced by any external
  tagger (``compose_upstream``), with no embedding columns at all.

Training is plain per-sentence SGD on weighted binary cross-entropy and
is fully determined by (seed, data, config): fixed uniform init in
±1/sqrt(hidden_dim), fixed instance order, no dropout.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import LabeledSpan
from .errors import AlignmentError, DataFormatError, ModelError
from .features import TokenFeatures
from .recurrent import LstmParams, init_lstm, lstm_backward, lstm_forward, sigmoid, softplus
from .segment import Sentence, merge_spans, tokens_to_spans

MODEL_MAGIC = b"PTAG"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sHBBIIIqddd")


@dataclass
class TaggerConfig:
    input_dim: int
    hidden_dim: int = 128
    bidirectional: bool = True
    learning_rate: float = 1e-3
    epochs: int = 20
    seed: int = 0
    threshold: float = 0.5
    class_weight_positive: float = 1.0

    def validate(self) -> None:
        if self.input_dim <= 0 or self.hidden_dim <= 0:
            raise ModelError(f"dimensions must be positive, got {self}")
        if self.epochs < 0:
            raise ModelError("epochs must be non-negative")
        if self.seed < 0:
            raise ModelError("seed must be non-negative")
        if self.learning_rate <= 0:
            raise ModelError("learning_rate must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ModelError(f"threshold {self.threshold} outside [0, 1]")
        if self.class_weight_positive <= 0:
            raise ModelError("class_weight_positive must be positive")


@dataclass
class SentenceInstance:
    """Model input for one sentence: embeddings and/or features, plus labels."""

    embeddings: np.ndarray | None = None
    features: list[TokenFeatures] | None = None
    labels: list[int] | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def num_tokens(self) -> int:
        if self.embeddings is not None:
            return int(self.embeddings.shape[0])
        if self.features is not None:
            return len(self.features)
        raise ModelError("instance has neither embeddings nor features")

    def matrix(self) -> np.ndarray:
        """Per-token input rows: embedding columns then feature columns."""
        if self._matrix is not None:
            return self._matrix
        n = self.num_tokens()
        if self.features is not None and self.embeddings is not None:
            if self.embeddings.shape[0] != len(self.features):
                raise AlignmentError(
                    f"{self.embeddings.shape[0]} embedding rows but "
                    f"{len(self.features)} feature entries"
                )
        if self.labels is not None and len(self.labels) != n:
            raise AlignmentError(f"{n} tokens but {len(self.labels)} labels")
        parts = []
        if self.embeddings is not None:
            parts.append(np.asarray(self.embeddings, dtype=np.float64))
        if self.features is not None:
            feats = np.array([f.vector() for f in self.features], dtype=np.float64)
            feats = feats.reshape(n, -1)
            parts.append(feats)
        self._matrix = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
        return self._matrix


@dataclass
class TrainReport:
    epoch_losses: list[float]
    precision: float
    recall: float
    f1: float
    eval_source: str  # "holdout" or "train"

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "eval_source": self.eval_source,
        }


@dataclass
class TaggerModel:
    config: TaggerConfig
    fwd: LstmParams
    bwd: LstmParams | None
    w_out: np.ndarray  # (H or 2H,)
    b_out: np.ndarray  # shape (1,)

    def param_arrays(self) -> list[np.ndarray]:
        arrays = self.fwd.arrays()
        if self.bwd is not None:
            arrays += self.bwd.arrays()
        return arrays + [self.w_out, self.b_out]

    def _hidden(self, x: np.ndarray):
        h_f, cache_f = lstm_forward(self.fwd, x)
        if self.bwd is None:
            return h_f, (cache_f, None)
        h_b_rev, cache_b = lstm_forward(self.bwd, x[::-1])
        return np.concatenate([h_f, h_b_rev[::-1]], axis=1), (cache_f, cache_b)

    def logits(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] == 0:
            return np.zeros(0)
        if x.shape[1] != self.config.input_dim:
            raise ModelError(
                f"instance input_dim {x.shape[1]} != model input_dim {self.config.input_dim}"
            )
        h, _ = self._hidden(x)
        return h @ self.w_out + self.b_out[0]


@dataclass
class _Grads:
    fwd: LstmParams
    bwd: LstmParams | None
    w_out: np.ndarray
    b_out: np.ndarray


def _init_model(config: TaggerConfig) -> TaggerModel:
    rng = np.random.default_rng(config.seed)
    k = 1.0 / np.sqrt(config.hidden_dim)
    fwd = init_lstm(rng, config.input_dim, config.hidden_dim)
    bwd = init_lstm(rng, config.input_dim, config.hidden_dim) if config.bidirectional else None
    out_dim = config.hidden_dim * (2 if config.bidirectional else 1)
    w_out = rng.uniform(-k, k, size=out_dim)
    b_out = rng.uniform(-k, k, size=1)
    return TaggerModel(config=config, fwd=fwd, bwd=bwd, w_out=w_out, b_out=b_out)


def loss_and_grads(
    model: TaggerModel, x: np.ndarray, y: np.ndarray
) -> tuple[float, _Grads]:
    """Mean weighted BCE over the sentence's tokens, with full gradients."""
    steps = x.shape[0]
    if steps == 0:
        raise ModelError("cannot train on an empty sentence instance")
    h, (cache_f, cache_b) = model._hidden(x)
    weights = np.where(y == 1, model.config.class_weight_positive, 1.0)
    z = h @ model.w_out + model.b_out[0]
    # softplus((1-2y) z) is -log p for y=1 and -log(1-p) for y=0
    loss = float(np.mean(weights * softplus((1.0 - 2.0 * y) * z)))
    dz = weights * (sigmoid(z) - y) / steps
    dw_out = h.T @ dz
    db_out = np.array([dz.sum()])
    dh = np.outer(dz, model.w_out)
    hidden = model.config.hidden_dim
    if model.bwd is not None:
        g_f, _ = lstm_backward(model.fwd, cache_f, dh[:, :hidden])
        g_b, _ = lstm_backward(model.bwd, cache_b, dh[::-1, hidden:])
        return loss, _Grads(g_f, g_b, dw_out, db_out)
    g_f, _ = lstm_backward(model.fwd, cache_f, dh)
    return loss, _Grads(g_f, None, dw_out, db_out)


def _apply_sgd(model: TaggerModel, grads: _Grads, lr: float) -> None:
    for p, g in zip(model.param_arrays(), _grad_arrays(grads)):
        p -= lr * g


def _grad_arrays(grads: _Grads) -> list[np.ndarray]:
    arrays = grads.fwd.arrays()
    if grads.bwd is not None:
        arrays += grads.bwd.arrays()
    return arrays + [grads.w_out, grads.b_out]


def train_tagger(
    instances: list[SentenceInstance],
    config: TaggerConfig,
    holdout: list[SentenceInstance] | None = None,
) -> tuple[TaggerModel, TrainReport]:
    """Train on the given instances; evaluation never touches them.

    The report's P/R/F is computed on ``holdout`` when given, otherwise
    on the training instances themselves.
    """
    config.validate()
    if not instances:
        raise ModelError("empty training set")
    for inst in instances:
        if inst.labels is None:
            raise ModelError("training instance without labels")
        if inst.num_tokens() == 0:
            raise ModelError("cannot train on an empty sentence instance")
        if inst.matrix().shape[1] != config.input_dim:
            raise ModelError(
                f"instance input_dim {inst.matrix().shape[1]} != config "
                f"input_dim {config.input_dim}"
            )
    model = _init_model(config)
    epoch_losses = []
    for _ in range(config.epochs):
        total = 0.0
        for inst in instances:
            x = inst.matrix()
            y = np.asarray(inst.labels, dtype=np.float64)
            loss, grads = loss_and_grads(model, x, y)
            _apply_sgd(model, grads, config.learning_rate)
            total += loss
        epoch_losses.append(total / len(instances))
    eval_set = holdout if holdout else instances
    source = "holdout" if holdout else "train"
    tp = fp = fn = 0
    for inst in eval_set:
        probs = predict_probs(model, inst)
        pred = probs >= config.threshold
        gold = np.asarray(inst.labels, dtype=bool)
        tp += int(np.sum(pred & gold))
        fp += int(np.sum(pred & ~gold))
        fn += int(np.sum(~pred & gold))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    report = TrainReport(epoch_losses, precision, recall, f1, source)
    return model, report


def predict_probs(model: TaggerModel, instance: SentenceInstance) -> np.ndarray:
    """One probability per token, in [0, 1]; pure function of (model, input)."""
    if instance.num_tokens() == 0:
        return np.zeros(0)
    return sigmoid(model.logits(instance.matrix()))


def decode_spans(
    model: TaggerModel,
    article_id: int,
    sentences: list[Sentence],
    instances: list[SentenceInstance],
    threshold: float | None = None,
) -> list[LabeledSpan]:
    """Threshold probabilities, rebuild character spans, merge overlaps."""
    if len(sentences) != len(instances):
        raise AlignmentError(f"{len(sentences)} sentences but {len(instances)} instances")
    thr = model.config.threshold if threshold is None else threshold
    label_seqs = []
    for sentence, inst in zip(sentences, instances):
        if inst.num_tokens() != len(sentence.tokens):
            raise AlignmentError(
                f"sentence {sentence.index}: {len(sentence.tokens)} tokens but "
                f"instance has {inst.num_tokens()}"
            )
        probs = predict_probs(model, inst)
        label_seqs.append([1 if p >= thr else 0 for p in probs])
    return merge_spans(tokens_to_spans(article_id, sentences, label_seqs))


def compose_upstream(
    instances: list[SentenceInstance], upstream_probs: list[list[float]]
) -> list[SentenceInstance]:
    """Feature-only instances with the upstream probability column filled.

    Embedding columns are dropped; the result feeds the same training
    loop as the embedding-based model.
    """
    if len(instances) != len(upstream_probs):
        raise AlignmentError(
            f"{len(instances)} instances but {len(upstream_probs)} probability rows"
        )
    composed = []
    for i, (inst, probs) in enumerate(zip(instances, upstream_probs)):
        if inst.features is None:
            raise ModelError(f"instance {i} has no features to compose with")
        if len(probs) != len(inst.features):
            raise AlignmentError(
                f"instance {i}: {len(inst.features)} tokens but {len(probs)} probabilities"
            )
        feats = [f.with_upstream(p) for f, p in zip(inst.features, probs)]
        composed.append(SentenceInstance(embeddings=None, features=feats, labels=inst.labels))
    return composed


def _param_spec(config: TaggerConfig) -> list[tuple[int, ...]]:
    h, d = config.hidden_dim, config.input_dim
    shapes = [(4 * h, d), (4 * h, h), (4 * h,)]
    if config.bidirectional:
        shapes *= 2
    out = 2 * h if config.bidirectional else h
    return shapes + [(out,), (1,)]


def save_model(model: TaggerModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def model_to_bytes(model: TaggerModel) -> bytes:
    cfg = model.config
    buf = io.BytesIO()
    buf.write(
        _HEADER.pack(
            MODEL_MAGIC,
            MODEL_VERSION,
            1 if cfg.bidirectional else 0,
            0,
            cfg.input_dim,
            cfg.hidden_dim,
            cfg.epochs,
            cfg.seed,
            cfg.learning_rate,
            cfg.threshold,
            cfg.class_weight_positive,
        )
    )
    for arr in model.param_arrays():
        buf.write(np.asarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def load_model(path: str | Path) -> TaggerModel:
    return model_from_bytes(Path(path).read_bytes(), source=str(path))


def model_from_bytes(data: bytes, source: str = "<bytes>") -> TaggerModel:
    if len(data) < _HEADER.size or not data.startswith(MODEL_MAGIC):
        raise DataFormatError(f"{source}: not a tagger model file")
    (_, version, bidir, _, input_dim, hidden, epochs, seed, lr, threshold, cw) = _HEADER.unpack_from(
        data, 0
    )
    if version != MODEL_VERSION:
        raise DataFormatError(f"{source}: unsupported model version {version}")
    config = TaggerConfig(
        input_dim=int(input_dim),
        hidden_dim=int(hidden),
        bidirectional=bool(bidir),
        learning_rate=float(lr),
        epochs=int(epochs),
        seed=int(seed),
        threshold=float(threshold),
        class_weight_positive=float(cw),
    )
    shapes = _param_spec(config)
    expected = _HEADER.size + sum(4 * int(np.prod(s)) for s in shapes)
    if len(data) != expected:
        raise DataFormatError(
            f"{source}: model file has {len(data)} bytes, expected {expected}"
        )
    offset = _HEADER.size
    arrays = []
    for shape in shapes:
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).astype(np.float64)
        arrays.append(arr.reshape(shape))
        offset += 4 * n
    fwd = LstmParams(arrays[0], arrays[1], arrays[2])
    if config.bidirectional:
        bwd = LstmParams(arrays[3], arrays[4], arrays[5])
        w_out, b_out = arrays[6], arrays[7]
    else:
        bwd = None
        w_out, b_out = arrays[3], arrays[4]
    return TaggerModel(config=config, fwd=fwd, bwd=bwd, w_out=w_out, b_out=b_out)


def write_upstream_probs(
    path: str | Path, entries: Iterable[tuple[int, int, int, float]]
) -> None:
    """Write (article_id, sentence_index, token_index, prob) records."""
    with open(path, "w", encoding="utf-8") as fh:
        for article_id, sentence_index, token_index, prob in entries:
            fh.write(
                json.dumps(
                    {
                        "article_id": article_id,
                        "sentence_index": sentence_index,
                        "token_index": token_index,
                        "prob": prob,
                    }
                )
                + "\n"
            )


def load_upstream_probs(path: str | Path) -> dict[tuple[int, int, int], float]:
    probs: dict[tuple[int, int, int], float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                key = (int(obj["article_id"]), int(obj["sentence_index"]), int(obj["token_index"]))
                prob = float(obj["prob"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad probability record: {exc}") from exc
            if not 0.0 <= prob <= 1.0:
                raise DataFormatError(f"{path}:{lineno}: probability {prob} outside [0, 1]")
            if key in probs:
                raise DataFormatError(f"{path}:{lineno}: duplicate key {key}")
            probs[key] = prob
    return probs
