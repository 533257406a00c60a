"""Per-token embedding vectors, loaded from PEMB files.

The toolkit never runs a language model in-process; contextual vectors
are produced offline (see the exporter tool) and served from a keyed
table. Binary layout, little-endian throughout::

    "PEMB" | version u16=1 | dim u32 | count u64 |
    count * ( article_id u32 | sentence u32 | token u32 | dim * float32 )

A plain-text debug variant is accepted too: first line
``PEMBTXT 1 <dim> <count>``, then one ``article sentence token v1..vdim``
line per record.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, MissingEmbeddingError
from .segment import Sentence

MAGIC = b"PEMB"
TEXT_MAGIC = b"PEMBTXT"
VERSION = 1

Key = tuple[int, int, int]

_HEADER = struct.Struct("<4sHIQ")
_RECORD_KEY = struct.Struct("<III")


@dataclass
class EmbeddingTable:
    """Immutable-after-load map (article, sentence, token) -> vector."""

    dim: int
    vectors: dict[Key, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, key: Key) -> np.ndarray | None:
        return self.vectors.get(key)

    def add(self, key: Key, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DataFormatError(f"vector for {key} has shape {vec.shape}, want ({self.dim},)")
        if key in self.vectors:
            raise DataFormatError(f"duplicate embedding key {key}")
        self.vectors[key] = vec


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load and fully validate a PEMB (or PEMBTXT) file."""
    data = Path(path).read_bytes()
    if data.startswith(TEXT_MAGIC):
        return _load_text(path, data)
    if not data.startswith(MAGIC):
        raise DataFormatError(f"{path}: bad magic at byte offset 0")
    if len(data) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header at byte offset {len(data)}")
    _, version, dim, count = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version} at byte offset 4")
    if dim <= 0:
        raise DataFormatError(f"{path}: non-positive dim {dim} at byte offset 6")
    record_size = _RECORD_KEY.size + 4 * dim
    expected = _HEADER.size + count * record_size
    if len(data) < expected:
        raise DataFormatError(
            f"{path}: truncated record data at byte offset {len(data)} "
            f"(expected {expected} bytes for {count} records)"
        )
    if len(data) > expected:
        raise DataFormatError(f"{path}: trailing data at byte offset {expected}")
    table = EmbeddingTable(dim=int(dim))
    offset = _HEADER.size
    for _ in range(count):
        article_id, sentence, token = _RECORD_KEY.unpack_from(data, offset)
        key = (article_id, sentence, token)
        if key in table.vectors:
            raise DataFormatError(f"{path}: duplicate key {key} at byte offset {offset}")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset + _RECORD_KEY.size)
        table.vectors[key] = vec.copy()
        offset += record_size
    return table


def _load_text(path: str | Path, data: bytes) -> EmbeddingTable:
    lines = data.decode("utf-8").splitlines()
    header = lines[0].split()
    if len(header) != 4 or header[0] != "PEMBTXT":
        raise DataFormatError(f"{path}: bad text header")
    try:
        version, dim, count = int(header[1]), int(header[2]), int(header[3])
    except ValueError:
        raise DataFormatError(f"{path}: non-integer text header fields") from None
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    if dim <= 0:
        raise DataFormatError(f"{path}: non-positive dim {dim}")
    records = [ln for ln in lines[1:] if ln.strip()]
    if len(records) != count:
        raise DataFormatError(f"{path}: header says {count} records, found {len(records)}")
    table = EmbeddingTable(dim=dim)
    for lineno, line in enumerate(records, start=2):
        parts = line.split()
        if len(parts) != 3 + dim:
            raise DataFormatError(
                f"{path}:{lineno}: expected {3 + dim} fields, got {len(parts)}"
            )
        try:
            key = (int(parts[0]), int(parts[1]), int(parts[2]))
            vec = np.array([float(v) for v in parts[3:]], dtype=np.float32)
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: bad record: {exc}") from None
        if key in table.vectors:
            raise DataFormatError(f"{path}:{lineno}: duplicate key {key}")
        table.vectors[key] = vec
    return table


def write_embeddings(table: EmbeddingTable, path: str | Path, text: bool = False) -> None:
    """Write a table back out; binary write/read round-trips byte-exactly."""
    if text:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"PEMBTXT {VERSION} {table.dim} {len(table)}\n")
            for (a, s, t), vec in table.vectors.items():
                values = " ".join(repr(float(v)) for v in vec)
                fh.write(f"{a} {s} {t} {values}\n")
        return
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, table.dim, len(table)))
        for (a, s, t), vec in table.vectors.items():
            fh.write(_RECORD_KEY.pack(a, s, t))
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def sentence_vectors(
    table: EmbeddingTable,
    article_id: int,
    sentence: Sentence,
    oov_policy: str = "zero",
) -> np.ndarray:
    """One vector per token of a sentence, shape (tokens, dim).

    Missing keys become zero vectors under the default policy (partial
    dumps still run, relying on handcrafted features); ``oov_policy=
    "error"`` raises instead, naming the token.
    """
    if oov_policy not in ("zero", "error"):
        raise ValueError(f"unknown oov_policy {oov_policy!r}")
    out = np.zeros((len(sentence.tokens), table.dim), dtype=np.float64)
    for i, token in enumerate(sentence.tokens):
        key = (article_id, token.sentence_index, token.token_index)
        vec = table.vectors.get(key)
        if vec is None:
            if oov_policy == "error":
                raise MissingEmbeddingError(
                    f"no embedding for article {article_id} sentence "
                    f"{token.sentence_index} token {token.token_index} ({token.text!r})"
                )
            continue
        out[i] = vec
    return out
