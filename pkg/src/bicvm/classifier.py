"""Cross-lingual document classification with an averaged multiclass perceptron.

A document vector is the mean of its sentence vectors. A perceptron is
trained on documents of one language and evaluated on another, which only
works if both languages live in a shared embedding space.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Vocabulary, normalize_line, read_lines
from .errors import DataError, RepresentationError, ShapeError
from .model import BiModel, compose

log = logging.getLogger(__name__)

LABEL_PREFIX = "#label "


@dataclass
class LabeledDocument:
    language_tag: str
    sentences: list[np.ndarray]
    label: int


# -- document files ---------------------------------------------------------


def format_documents(docs: Iterable) -> str:
    """Render ``(label_name, sentences)`` records in the block document format.

    Accepts anything with ``label`` and ``sentences`` attributes holding a
    class name and sentence strings.
    """
    blocks = []
    for d in docs:
        if any(not s.strip() for s in d.sentences):
            raise DataError("documents cannot contain blank sentences")
        blocks.append("\n".join([LABEL_PREFIX + d.label, *d.sentences]))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_documents(lines: Sequence[str]) -> list[tuple[str, list[str]]]:
    """Split block-format lines into ``(label_name, sentence_lines)``."""
    out = []
    block: list[str] = []
    for lineno, line in enumerate([*lines, ""], start=1):
        if line.strip():
            block.append(line)
            continue
        if not block:
            continue
        head = block[0]
        if not head.startswith(LABEL_PREFIX) or not head[len(LABEL_PREFIX):].strip():
            raise DataError(f"line {lineno - len(block)}: block must start with '#label <class>'")
        out.append((head[len(LABEL_PREFIX):].strip(), block[1:]))
        block = []
    return out


def format_label_map(label_map: dict[str, int]) -> str:
    return "".join(f"{name}\t{i}\n" for name, i in sorted(label_map.items(), key=lambda kv: kv[1]))


def load_label_map(path: str | os.PathLike) -> dict[str, int]:
    out = {}
    for lineno, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        name, sep, idx = line.partition("\t")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected 'class<TAB>id'")
        out[name] = int(idx)
    if sorted(out.values()) != list(range(len(out))):
        raise DataError(f"{path}: class ids must be 0..C-1")
    return out


def encode_documents(
    blocks: Sequence[tuple[str, list[str]]], vocab: Vocabulary, label_map: dict[str, int]
) -> tuple[list[LabeledDocument], int]:
    """Encode parsed blocks; documents without any in-vocabulary token are rejected.

    Returns the documents and the number rejected.
    """
    docs, rejected = [], 0
    for name, sentences in blocks:
        if name not in label_map:
            raise DataError(f"unknown class {name!r} (not in label map)")
        encoded = [vocab.encode(normalize_line(s)) for s in sentences]
        if not any(s.size for s in encoded):
            rejected += 1
            continue
        docs.append(LabeledDocument(vocab.language_tag, encoded, label_map[name]))
    if rejected:
        log.warning("rejected %d documents with no in-vocabulary tokens", rejected)
    return docs, rejected


def load_documents(
    path: str | os.PathLike, vocab: Vocabulary, label_map: dict[str, int]
) -> tuple[list[LabeledDocument], int]:
    return encode_documents(parse_documents(read_lines(path)), vocab, label_map)


def doc_representation(doc: LabeledDocument, model: BiModel) -> np.ndarray:
    """Mean of the composed vectors of the document's non-empty sentences."""
    table = model[doc.language_tag]
    roots = [compose(s, table) for s in doc.sentences if len(s)]
    if not roots:
        raise RepresentationError("document has no in-vocabulary tokens")
    return np.mean(roots, axis=0)


# -- averaged perceptron ----------------------------------------------------


@dataclass
class PerceptronModel:
    """Class weight rows over features augmented with a trailing bias 1."""

    weights: np.ndarray
    averaged_weights: np.ndarray
    update_counter: int = 0

    @property
    def classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1


def _augment(x: np.ndarray) -> np.ndarray:
    return np.append(np.asarray(x, dtype=np.float64), 1.0)


def perceptron_train(
    examples: Sequence[tuple[np.ndarray, int]], classes: int, epochs: int = 10, seed: int = 0, dim: int | None = None
) -> PerceptronModel:
    """Multiclass perceptron with weights averaged over every presentation.

    The average runs over the weight matrix after each of the
    ``len(examples) * epochs`` presentations, updates or not. It is kept
    lazily: with step index ``t`` (1-based) and update ``delta_t``,
    ``avg = w - sum_t (t - 1) * delta_t / T``.
    """
    if classes < 2:
        raise DataError(f"need at least 2 classes, got {classes}")
    if dim is None:
        dim = len(examples[0][0]) if len(examples) else 0
    xs = np.zeros((len(examples), dim + 1))
    ys = np.zeros(len(examples), dtype=np.int64)
    for i, (x, y) in enumerate(examples):
        if not 0 <= y < classes:
            raise DataError(f"label {y} outside 0..{classes - 1}")
        if len(x) != dim:
            raise ShapeError(f"example {i} has length {len(x)}, expected {dim}")
        xs[i] = _augment(x)
        ys[i] = y
    w = np.zeros((classes, dim + 1))
    u = np.zeros_like(w)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(examples)):
            t += 1
            x, y = xs[i], ys[i]
            guess = int(np.argmax(w @ x))
            if guess != y:
                w[y] += x
                w[guess] -= x
                u[y] += (t - 1) * x
                u[guess] -= (t - 1) * x
    avg = w - u / t if t else w.copy()
    return PerceptronModel(w, avg, t)


def perceptron_predict(model: PerceptronModel, x: np.ndarray, use_averaged: bool = True) -> int:
    """Highest-scoring class; ties go to the lowest class id."""
    if len(x) != model.dim:
        raise ShapeError(f"input has length {len(x)}, model expects {model.dim}")
    w = model.averaged_weights if use_averaged else model.weights
    return int(np.argmax(w @ _augment(x)))


def majority_baseline(labels: Sequence[int]) -> float:
    """Accuracy of always predicting the most frequent label."""
    if not len(labels):
        return 0.0
    return float(np.bincount(np.asarray(labels)).max() / len(labels))


@dataclass
class CLDCReport:
    sizes: list[int] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)
    majority_baseline: float = 0.0

    def records(self) -> list[dict]:
        return [
            {"size": s, "accuracy": a, "majority_baseline": self.majority_baseline}
            for s, a in zip(self.sizes, self.accuracies)
        ]

    def to_tsv(self) -> str:
        return "size\taccuracy\n" + "".join(f"{s}\t{a:.4f}\n" for s, a in zip(self.sizes, self.accuracies))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())


def evaluate_cldc(
    train_docs: Sequence[LabeledDocument],
    test_docs: Sequence[LabeledDocument],
    model: BiModel,
    sizes: Sequence[int],
    classes: int | None = None,
    epochs: int = 10,
    seed: int = 0,
) -> CLDCReport:
    """Train on the first ``size`` training documents, test on all test documents."""
    for s in sizes:
        if not 1 <= s <= len(train_docs):
            raise DataError(f"training size {s} outside 1..{len(train_docs)}")
    if classes is None:
        classes = max(d.label for d in [*train_docs, *test_docs]) + 1
    xtr = [doc_representation(d, model) for d in train_docs]
    xte = [doc_representation(d, model) for d in test_docs]
    yte = [d.label for d in test_docs]
    report = CLDCReport(majority_baseline=majority_baseline(yte))
    for size in sizes:
        ex = [(x, d.label) for x, d in zip(xtr[:size], train_docs[:size])]
        pm = perceptron_train(ex, max(classes, 2), epochs, seed, dim=model.dim)
        hits = sum(perceptron_predict(pm, x) == y for x, y in zip(xte, yte))
        report.sizes.append(int(size))
        report.accuracies.append(hits / len(yte) if yte else 0.0)
    return report
