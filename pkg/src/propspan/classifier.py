"""14-way technique classifier over the tokens of a single span.

The model sees only the span's own tokens (no surrounding sentence or
article context): an LSTM encodes the token rows, and the final hidden
state is projected to one logit per technique. This deliberately mirrors
the span-only setup whose main known weakness is single-token repetition
spans; sentence-context inputs are out of scope.
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from pathlib import Path

from .corpus import NUM_TECHNIQUES, Technique
from .errors import DataFormatError, ModelError
from .features import TokenFeatures
from .recurrent import LstmParams, init_lstm, lstm_backward, lstm_forward
from .tagger import SentenceInstance

log = logging.getLogger(__name__)

MODEL_MAGIC = b"PTC1"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sHBBIIIqd")

_TECHNIQUES = list(Technique)


@dataclass
class ClassifierConfig:
    input_dim: int
    hidden_dim: int = 128
    learning_rate: float = 1e-3
    epochs: int = 20
    seed: int = 0

    def validate(self) -> None:
        if self.input_dim <= 0 or self.hidden_dim <= 0:
            raise ModelError(f"dimensions must be positive, got {self}")
        if self.epochs < 0:
            raise ModelError("epochs must be non-negative")
        if self.seed < 0:
            raise ModelError("seed must be non-negative")
        if self.learning_rate <= 0:
            raise ModelError("learning_rate must be positive")


@dataclass
class SpanInstance:
    """Input rows for one span plus its (optional) gold technique."""

    embeddings: np.ndarray | None = None
    features: list[TokenFeatures] | None = None
    technique: Technique | None = None
    _inner: SentenceInstance | None = field(default=None, repr=False, compare=False)

    def _sentence_instance(self) -> SentenceInstance:
        if self._inner is None:
            self._inner = SentenceInstance(embeddings=self.embeddings, features=self.features)
        return self._inner

    def num_tokens(self) -> int:
        return self._sentence_instance().num_tokens()

    def matrix(self) -> np.ndarray:
        return self._sentence_instance().matrix()


@dataclass
class ClassifierModel:
    config: ClassifierConfig
    encoder: LstmParams
    w_out: np.ndarray  # (14, H)
    b_out: np.ndarray  # (14,)

    def param_arrays(self) -> list[np.ndarray]:
        return self.encoder.arrays() + [self.w_out, self.b_out]

    def logits(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] == 0:
            raise ModelError("cannot classify an empty span (zero tokens)")
        if x.shape[1] != self.config.input_dim:
            raise ModelError(
                f"instance input_dim {x.shape[1]} != model input_dim {self.config.input_dim}"
            )
        h, _ = lstm_forward(self.encoder, x)
        return self.w_out @ h[-1] + self.b_out


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def _init_model(config: ClassifierConfig) -> ClassifierModel:
    rng = np.random.default_rng(config.seed)
    k = 1.0 / np.sqrt(config.hidden_dim)
    encoder = init_lstm(rng, config.input_dim, config.hidden_dim)
    w_out = rng.uniform(-k, k, size=(NUM_TECHNIQUES, config.hidden_dim))
    b_out = rng.uniform(-k, k, size=NUM_TECHNIQUES)
    return ClassifierModel(config=config, encoder=encoder, w_out=w_out, b_out=b_out)


def loss_and_grads(model: ClassifierModel, x: np.ndarray, target_index: int):
    """Cross-entropy on the final-state projection, with full gradients."""
    h, cache = lstm_forward(model.encoder, x)
    z = model.w_out @ h[-1] + model.b_out
    shifted = z - z.max()
    log_probs = shifted - np.log(np.exp(shifted).sum())
    loss = -float(log_probs[target_index])
    dz = np.exp(log_probs)
    dz[target_index] -= 1.0
    dw_out = np.outer(dz, h[-1])
    db_out = dz
    dh = np.zeros_like(h)
    dh[-1] = model.w_out.T @ dz
    g_enc, _ = lstm_backward(model.encoder, cache, dh)
    return loss, (g_enc, dw_out, db_out)


def train_classifier(
    instances: list[SpanInstance], config: ClassifierConfig
) -> ClassifierModel:
    """Deterministic SGD training; empty spans are rejected with a warning."""
    config.validate()
    usable = []
    rejected = 0
    for inst in instances:
        if inst.technique is None:
            raise ModelError("training span instance without a technique label")
        if inst.num_tokens() == 0:
            rejected += 1
            continue
        if inst.matrix().shape[1] != config.input_dim:
            raise ModelError(
                f"instance input_dim {inst.matrix().shape[1]} != config "
                f"input_dim {config.input_dim}"
            )
        usable.append(inst)
    if rejected:
        log.warning("rejected %d empty-span training instances", rejected)
    if not usable:
        raise ModelError("empty training set (after rejecting empty spans)")
    model = _init_model(config)
    for _ in range(config.epochs):
        for inst in usable:
            x = inst.matrix()
            _, (g_enc, dw_out, db_out) = loss_and_grads(model, x, inst.technique.index)
            model.encoder.w_x -= config.learning_rate * g_enc.w_x
            model.encoder.w_h -= config.learning_rate * g_enc.w_h
            model.encoder.b -= config.learning_rate * g_enc.b
            model.w_out -= config.learning_rate * dw_out
            model.b_out -= config.learning_rate * db_out
    return model


def predict_technique(
    model: ClassifierModel, instance: SpanInstance
) -> tuple[Technique, np.ndarray]:
    """Argmax technique plus the full softmax vector over the 14 classes.

    Ties break toward the earlier class in enumeration order (argmax of
    equal values returns the first).
    """
    probs = _softmax(model.logits(instance.matrix()))
    return _TECHNIQUES[int(np.argmax(probs))], probs


def save_model(model: ClassifierModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


def model_to_bytes(model: ClassifierModel) -> bytes:
    cfg = model.config
    buf = io.BytesIO()
    buf.write(
        _HEADER.pack(
            MODEL_MAGIC,
            MODEL_VERSION,
            0,
            0,
            cfg.input_dim,
            cfg.hidden_dim,
            cfg.epochs,
            cfg.seed,
            cfg.learning_rate,
        )
    )
    for arr in model.param_arrays():
        buf.write(np.asarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def load_model(path: str | Path) -> ClassifierModel:
    return model_from_bytes(Path(path).read_bytes(), source=str(path))


def model_from_bytes(data: bytes, source: str = "<bytes>") -> ClassifierModel:
    if len(data) < _HEADER.size or not data.startswith(MODEL_MAGIC):
        raise DataFormatError(f"{source}: not a classifier model file")
    _, version, _, _, input_dim, hidden, epochs, seed, lr = _HEADER.unpack_from(data, 0)
    if version != MODEL_VERSION:
        raise DataFormatError(f"{source}: unsupported model version {version}")
    config = ClassifierConfig(
        input_dim=int(input_dim),
        hidden_dim=int(hidden),
        learning_rate=float(lr),
        epochs=int(epochs),
        seed=int(seed),
    )
    h, d = config.hidden_dim, config.input_dim
    shapes = [(4 * h, d), (4 * h, h), (4 * h,), (NUM_TECHNIQUES, h), (NUM_TECHNIQUES,)]
    expected = _HEADER.size + sum(4 * int(np.prod(s)) for s in shapes)
    if len(data) != expected:
        raise DataFormatError(f"{source}: model file has {len(data)} bytes, expected {expected}")
    offset = _HEADER.size
    arrays = []
    for shape in shapes:
        n = int(np.prod(shape))
        arrays.append(
            np.frombuffer(data, dtype="<f4", count=n, offset=offset)
            .astype(np.float64)
            .reshape(shape)
        )
        offset += 4 * n
    encoder = LstmParams(arrays[0], arrays[1], arrays[2])
    return ClassifierModel(config=config, encoder=encoder, w_out=arrays[3], b_out=arrays[4])
