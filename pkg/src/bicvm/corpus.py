"""Parallel text ingestion: normalization, vocabularies and encoded sentence pairs.

Input text is expected to be pre-tokenized; normalization only lowercases and
splits on whitespace. Each language owns an independent :class:`Vocabulary`, so
identical surface forms in two languages never share an id.
"""
from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, DataError

log = logging.getLogger(__name__)

VOCAB_MAGIC = "#vocab"
VOCAB_VERSION = "v1"

ID_DTYPE = np.int64


def normalize_line(raw: str) -> list[str]:
    """Lowercase ``raw`` and split it on Unicode whitespace."""
    return raw.lower().split()


def read_lines(path: str | os.PathLike) -> list[str]:
    """Read a UTF-8 file as a list of lines without terminators.

    Only ``\\n`` (and ``\\r\\n``) terminate lines, so exotic separators such as
    U+2028 inside a sentence cannot break line alignment.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


@dataclass
class Vocabulary:
    """Bijection between the tokens of one language and ids ``0..size-1``."""

    language_tag: str
    id_to_token: list[str] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.counts) != len(self.id_to_token):
            raise DataError("vocabulary counts and tokens differ in length")
        self.token_to_id = {}
        for i, tok in enumerate(self.id_to_token):
            if not tok or any(ch.isspace() for ch in tok):
                raise DataError(f"invalid vocabulary token {tok!r}")
            if tok in self.token_to_id:
                raise DataError(f"duplicate vocabulary token {tok!r}")
            self.token_to_id[tok] = i

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (
            self.language_tag == other.language_tag
            and self.id_to_token == other.id_to_token
            and self.counts == other.counts
        )

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to ids, silently dropping out-of-vocabulary tokens."""
        lookup = self.token_to_id
        ids = [lookup[t] for t in tokens if t in lookup]
        return np.asarray(ids, dtype=ID_DTYPE)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def most_frequent(self, n: int) -> list[int]:
        """Ids of the ``n`` most frequent tokens, ties broken by id."""
        order = sorted(range(len(self)), key=lambda i: (-self.counts[i], i))
        return order[:n]

    def to_text(self) -> str:
        out = [f"{VOCAB_MAGIC} {VOCAB_VERSION} {self.language_tag} {len(self)}"]
        out.extend(f"{t}\t{c}" for t, c in zip(self.id_to_token, self.counts))
        return "\n".join(out) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Vocabulary":
        lines = read_lines(path)
        if not lines:
            raise DataError(f"{path}: empty vocabulary file (missing header)")
        header = lines[0].split()
        if len(header) != 4 or header[0] != VOCAB_MAGIC or header[1] != VOCAB_VERSION:
            raise DataError(f"{path}: bad vocabulary header {lines[0]!r}")
        lang, size = header[2], int(header[3])
        tokens, counts = [], []
        for lineno, line in enumerate(lines[1:], start=2):
            tok, sep, cnt = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>count'")
            tokens.append(tok)
            counts.append(int(cnt))
        if len(tokens) != size:
            raise DataError(f"{path}: header declares {size} tokens, found {len(tokens)}")
        return cls(lang, tokens, counts)


def build_vocabulary(
    lines: Iterable[Sequence[str]], min_count: int = 1, language_tag: str = ""
) -> Vocabulary:
    """Assign ids in order of first occurrence to tokens seen ``min_count`` times."""
    if min_count < 1:
        raise DataError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for tokens in lines:
        counts.update(tokens)
    # Counter preserves insertion order, i.e. first occurrence.
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    return Vocabulary(language_tag, [t for t, _ in kept], [c for _, c in kept])


@dataclass
class ParallelCorpus:
    """Aligned, encoded sentence pairs for one language pair.

    ``side_a[i]`` and ``side_b[i]`` are translations of each other. Sentences
    are read-only int64 arrays with at least one id.
    """

    vocab_a: Vocabulary
    vocab_b: Vocabulary
    side_a: list[np.ndarray]
    side_b: list[np.ndarray]
    removed: int = 0

    def __post_init__(self):
        if len(self.side_a) != len(self.side_b):
            raise DataError("parallel corpus sides differ in length")
        for side, vocab in ((self.side_a, self.vocab_a), (self.side_b, self.vocab_b)):
            n = len(vocab)
            for i, s in enumerate(side):
                s = np.asarray(s, dtype=ID_DTYPE)
                if s.ndim != 1 or s.size == 0:
                    raise DataError(f"pair {i}: empty sentence")
                if s.min() < 0 or s.max() >= n:
                    raise DataError(f"pair {i}: id out of range for vocabulary {vocab.language_tag!r}")
                s.setflags(write=False)
                side[i] = s

    @property
    def lang_a(self) -> str:
        return self.vocab_a.language_tag

    @property
    def lang_b(self) -> str:
        return self.vocab_b.language_tag

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.side_a, self.side_b))

    def __len__(self) -> int:
        return len(self.side_a)


def flatten(sentences: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """CSR layout: ``(ptr, ids)`` with sentence ``i`` at ``ids[ptr[i]:ptr[i+1]]``."""
    lengths = np.fromiter((len(s) for s in sentences), dtype=ID_DTYPE, count=len(sentences))
    ptr = np.zeros(len(sentences) + 1, dtype=ID_DTYPE)
    np.cumsum(lengths, out=ptr[1:])
    ids = np.concatenate(sentences).astype(ID_DTYPE) if sentences else np.zeros(0, ID_DTYPE)
    return ptr, ids


def encode_pairs(
    lines_a: Sequence[str], lines_b: Sequence[str], vocab_a: Vocabulary, vocab_b: Vocabulary
) -> ParallelCorpus:
    """Normalize and encode aligned lines, dropping pairs with an empty side."""
    if len(lines_a) != len(lines_b):
        raise AlignmentError("side A", len(lines_a), "side B", len(lines_b))
    side_a, side_b = [], []
    removed = 0
    for ra, rb in zip(lines_a, lines_b):
        a = vocab_a.encode(normalize_line(ra))
        b = vocab_b.encode(normalize_line(rb))
        if a.size == 0 or b.size == 0:
            removed += 1
            continue
        side_a.append(a)
        side_b.append(b)
    return ParallelCorpus(vocab_a, vocab_b, side_a, side_b, removed=removed)


def load_parallel(
    file_a: str | os.PathLike,
    file_b: str | os.PathLike,
    vocab_a: Vocabulary,
    vocab_b: Vocabulary,
) -> ParallelCorpus:
    """Load two line-aligned files into a :class:`ParallelCorpus`.

    Pairs where either side is empty after normalization and OOV removal are
    dropped; the number dropped is stored in ``corpus.removed``.
    """
    lines_a = read_lines(file_a)
    lines_b = read_lines(file_b)
    if len(lines_a) != len(lines_b):
        raise AlignmentError(file_a, len(lines_a), file_b, len(lines_b))
    corpus = encode_pairs(lines_a, lines_b, vocab_a, vocab_b)
    if corpus.removed:
        log.info("%s / %s: removed %d empty pairs", file_a, file_b, corpus.removed)
    return corpus
