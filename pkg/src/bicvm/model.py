"""Embedding tables and the additive compositional sentence model."""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, LookupFailure, ShapeError

MODEL_MAGIC = b"BICVM1"


@dataclass
class EmbeddingTable:
    """Word vectors of one language, one row per vocabulary id."""

    language_tag: str
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] < 1:
            raise ShapeError(f"embedding rows must be (V, d) with d >= 1, got {self.rows.shape}")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass
class BiModel:
    """A set of per-language tables sharing one dimensionality."""

    dim: int
    tables: dict[str, EmbeddingTable] = field(default_factory=dict)

    def __post_init__(self):
        for tag, table in self.tables.items():
            self._check(tag, table)

    def _check(self, tag, table):
        if table.dim != self.dim:
            raise ConfigError(f"table {tag!r} has dim {table.dim}, model has {self.dim}")
        if table.language_tag != tag:
            raise ConfigError(f"table keyed {tag!r} is tagged {table.language_tag!r}")

    def add(self, table: EmbeddingTable) -> None:
        if table.language_tag in self.tables:
            raise ConfigError(f"duplicate language tag {table.language_tag!r}")
        self._check(table.language_tag, table)
        self.tables[table.language_tag] = table

    def __getitem__(self, tag: str) -> EmbeddingTable:
        try:
            return self.tables[tag]
        except KeyError:
            raise LookupFailure(f"unknown language {tag!r}") from None

    def __contains__(self, tag: str) -> bool:
        return tag in self.tables

    def squared_norm(self) -> float:
        return float(sum(np.sum(t.rows * t.rows) for t in self.tables.values()))

    def copy(self) -> "BiModel":
        return BiModel(
            self.dim,
            {k: EmbeddingTable(k, t.rows.copy()) for k, t in self.tables.items()},
        )


def init_gaussian(
    vocab_size: int, dim: int, std_dev: float = 0.1, seed=0, language_tag: str = ""
) -> EmbeddingTable:
    """Table with i.i.d. N(0, std_dev^2) entries, reproducible from ``seed``.

    ``seed`` may be anything :func:`numpy.random.default_rng` accepts.
    """
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    if vocab_size < 0:
        raise ConfigError(f"vocab_size must be >= 0, got {vocab_size}")
    if not std_dev > 0:
        raise ConfigError(f"std_dev must be > 0, got {std_dev}")
    rng = np.random.default_rng(seed)
    return EmbeddingTable(language_tag, rng.normal(0.0, std_dev, size=(vocab_size, dim)))


def compose(sentence: Sequence[int], table: EmbeddingTable) -> np.ndarray:
    """Sentence vector as the sum of its word vectors (order-insensitive)."""
    ids = np.asarray(sentence, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= len(table)):
        raise IndexError(f"word id out of range for table of size {len(table)}")
    return table.rows[ids].sum(axis=0)


def scatter_gradient(
    sentence: Sequence[int], root_grad: np.ndarray, accumulator: dict[int, np.ndarray], dim: int | None = None
) -> None:
    """Add ``root_grad`` to the accumulator slot of every token occurrence.

    The Jacobian of the sum with respect to each word vector is the identity,
    so a word occurring m times receives ``m * root_grad``.
    """
    g = np.asarray(root_grad, dtype=np.float64)
    if g.ndim != 1 or (dim is not None and g.shape[0] != dim):
        raise ShapeError(f"root gradient has shape {g.shape}, expected ({dim},)")
    for w in sentence:
        w = int(w)
        slot = accumulator.get(w)
        if slot is None:
            accumulator[w] = g.copy()
        else:
            if slot.shape != g.shape:
                raise ShapeError(f"accumulator slot {w} has shape {slot.shape}, gradient {g.shape}")
            slot += g


def cosine_neighbors(query: np.ndarray, table: EmbeddingTable, top_k: int = 10) -> list[tuple[int, float]]:
    """Rank the rows of ``table`` by cosine similarity to ``query``.

    Descending similarity, ties by ascending word id. Zero vectors have
    similarity 0 with everything.
    """
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (table.dim,):
        raise ShapeError(f"query has shape {q.shape}, expected ({table.dim},)")
    rows = table.rows
    norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(q)
    dots = rows @ q
    sims = np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)
    order = np.lexsort((np.arange(len(sims)), -sims))
    return [(int(i), float(sims[i])) for i in order[:top_k]]


def precision_at_1(
    source: EmbeddingTable, target: EmbeddingTable, gold: dict[int, int], queries: Sequence[int]
) -> float:
    """Fraction of ``queries`` whose nearest target row is ``gold[query]``."""
    if not len(queries):
        return 0.0
    t = target.rows / np.maximum(np.linalg.norm(target.rows, axis=1, keepdims=True), 1e-300)
    q = source.rows[np.asarray(queries)]
    q = q / np.maximum(np.linalg.norm(q, axis=1, keepdims=True), 1e-300)
    best = np.argmax(q @ t.T, axis=1)
    return float(np.mean([int(b) == gold[int(w)] for w, b in zip(queries, best)]))


def model_to_bytes(model: BiModel) -> bytes:
    """Serialize: magic, d, table count, then per table tag, size and float32 rows."""
    parts = [MODEL_MAGIC, struct.pack("<II", model.dim, len(model.tables))]
    for tag, table in model.tables.items():
        raw = tag.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<Q", len(table)))
        parts.append(np.ascontiguousarray(table.rows, dtype="<f4").tobytes())
    return b"".join(parts)


def model_from_bytes(data: bytes) -> BiModel:
    if data[:6] != MODEL_MAGIC:
        raise DataError("not a model file (bad magic)")
    try:
        dim, count = struct.unpack_from("<II", data, 6)
        off = 14
        model = BiModel(dim)
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, off)
            off += 2
            tag = data[off : off + n].decode("utf-8")
            off += n
            (size,) = struct.unpack_from("<Q", data, off)
            off += 8
            nbytes = size * dim * 4
            if off + nbytes > len(data):
                raise DataError("truncated model file")
            rows = np.frombuffer(data, dtype="<f4", count=size * dim, offset=off)
            off += nbytes
            model.add(EmbeddingTable(tag, rows.reshape(size, dim).astype(np.float64)))
    except struct.error as exc:
        raise DataError(f"truncated model file: {exc}") from None
    if off != len(data):
        raise DataError("trailing bytes after model tables")
    return model


def save_model(model: BiModel, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path: str | os.PathLike) -> BiModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


def export_text(table: EmbeddingTable, tokens: Sequence[str]) -> str:
    """Word-vector text format: ``"<V> <d>"`` header then ``token v1 ... vd``."""
    if len(tokens) != len(table):
        raise DataError(f"{len(tokens)} tokens for a table of {len(table)} rows")
    lines = [f"{len(table)} {table.dim}"]
    for tok, row in zip(tokens, table.rows):
        lines.append(tok + " " + " ".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def import_text(text: str) -> tuple[list[str], np.ndarray]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError("empty embedding file")
    size, dim = (int(x) for x in lines[0].split())
    if len(lines) - 1 != size:
        raise DataError(f"header declares {size} words, found {len(lines) - 1}")
    tokens = []
    rows = np.zeros((size, dim))
    for i, line in enumerate(lines[1:]):
        fields = line.split(" ")
        if len(fields) != dim + 1:
            raise DataError(f"line {i + 2}: expected {dim + 1} fields")
        tokens.append(fields[0])
        rows[i] = [float(v) for v in fields[1:]]
    return tokens, rows
