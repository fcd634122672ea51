"""Bilingual distance, noise-contrastive hinge, and their gradients.

For an aligned pair ``(a, b)`` and noise sentences ``n_1..n_k`` drawn from the
B side of the corpus, the per-pair loss is::

    sum_i max(0, margin + |a - b|^2 - |a - n_i|^2)

where each sentence stands for its composed (summed) vector. The full
objective adds ``lambda / 2 * |theta|^2`` over all embedding tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import ParallelCorpus, flatten
from .errors import SamplingError, ShapeError
from .model import BiModel, compose, scatter_gradient


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"vector shapes differ: {a.shape} vs {b.shape}")
    return a, b


def e_dist(a_root, b_root) -> float:
    """Squared Euclidean distance between two sentence vectors."""
    a, b = _pair(a_root, b_root)
    diff = a - b
    return float(diff @ diff)


def e_noise(a_root, b_root, n_root, margin: float = 1.0) -> float:
    """Hinge ``max(0, margin + e_dist(a, b) - e_dist(a, n))``."""
    _pair(a_root, n_root)
    return max(0.0, margin + e_dist(a_root, b_root) - e_dist(a_root, n_root))


def draw_noise_indices(rng: np.random.Generator, high, excluded, k: int) -> np.ndarray:
    """Uniform noise indices with rejection of each row's excluded index.

    Procedure (the contract other code may replay): draw an ``(m, k)`` block
    with ``rng.integers(0, high[:, None], size=(m, k))``; then, while any entry
    equals its row's excluded index, redraw exactly those entries, in
    row-major order, with one ``rng.integers(0, high[rows])`` call.
    """
    excluded = np.atleast_1d(np.asarray(excluded, dtype=np.int64))
    high = np.broadcast_to(np.asarray(high, dtype=np.int64), excluded.shape)
    m = excluded.shape[0]
    if k == 0 or m == 0:
        return np.zeros((m, k), dtype=np.int64)
    if np.any(high < 2):
        raise SamplingError("noise sampling needs at least 2 sentences in the corpus")
    idx = rng.integers(0, high[:, None], size=(m, k))
    while True:
        rows, cols = np.nonzero(idx == excluded[:, None])
        if rows.size == 0:
            return idx
        idx[rows, cols] = rng.integers(0, high[rows])


@dataclass
class NoiseSampler:
    """Seeded uniform sampler over the target-side sentences of a corpus."""

    source: Sequence[np.ndarray]
    rng: np.random.Generator

    @classmethod
    def from_seed(cls, source, seed) -> "NoiseSampler":
        return cls(source, np.random.default_rng(seed))

    def indices(self, excluded_pair_index: int, k: int) -> np.ndarray:
        if k < 0:
            raise SamplingError(f"k must be >= 0, got {k}")
        if k == 0:
            return np.zeros(0, dtype=np.int64)
        return draw_noise_indices(self.rng, len(self.source), [excluded_pair_index], k)[0]


def sample_noise(sampler: NoiseSampler, excluded_pair_index: int, k: int) -> list[np.ndarray]:
    """Draw ``k`` noise sentences, never the one at ``excluded_pair_index``."""
    return [sampler.source[i] for i in sampler.indices(excluded_pair_index, k)]


@dataclass
class PairGradient:
    """Loss of one training pair and sparse per-language row gradients."""

    loss: float
    grads: dict[str, dict[int, np.ndarray]] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not any(self.grads.values())


def _langs(model: BiModel, langs):
    if langs is not None:
        return langs
    tags = list(model.tables)
    if len(tags) != 2:
        raise ShapeError("pass langs=(lang_a, lang_b) for models with more than two tables")
    return tags[0], tags[1]


def pair_loss_and_grad(
    a: Sequence[int],
    b: Sequence[int],
    noise: Sequence[Sequence[int]],
    model: BiModel,
    margin: float = 50.0,
    langs: tuple[str, str] | None = None,
    noise_a: Sequence[Sequence[int]] = (),
) -> PairGradient:
    """Hinge loss of one aligned pair against its noise and its exact gradient.

    ``noise`` holds B-language sentences contrasted against ``a``. The optional
    ``noise_a`` holds A-language sentences contrasted against ``b`` (symmetric
    mode). Hinges at exactly zero contribute no gradient.
    """
    lang_a, lang_b = _langs(model, langs)
    table_a, table_b = model[lang_a], model[lang_b]
    d = model.dim
    ra = compose(a, table_a)
    rb = compose(b, table_b)
    dab = e_dist(ra, rb)

    ga = np.zeros(d)
    gb = np.zeros(d)
    acc_a: dict[int, np.ndarray] = {}
    acc_b: dict[int, np.ndarray] = {}
    loss = 0.0
    for n in noise:
        rn = compose(n, table_b)
        h = margin + dab - e_dist(ra, rn)
        if h > 0:
            loss += h
            ga += 2.0 * (rn - rb)
            gb += 2.0 * (rb - ra)
            scatter_gradient(n, 2.0 * (ra - rn), acc_b, d)
    for m in noise_a:
        rm = compose(m, table_a)
        h = margin + dab - e_dist(rb, rm)
        if h > 0:
            loss += h
            ga += 2.0 * (ra - rb)
            gb += 2.0 * (rm - ra)
            scatter_gradient(m, 2.0 * (rb - rm), acc_a, d)
    if loss > 0:
        scatter_gradient(a, ga, acc_a, d)
        scatter_gradient(b, gb, acc_b, d)
    if lang_a == lang_b:
        for w, g in acc_b.items():
            if w in acc_a:
                acc_a[w] = acc_a[w] + g
            else:
                acc_a[w] = g
        return PairGradient(loss, {lang_a: acc_a})
    return PairGradient(loss, {lang_a: acc_a, lang_b: acc_b})


def sentence_roots(sentences: Sequence[np.ndarray], rows: np.ndarray) -> np.ndarray:
    """Composed vectors of many sentences at once, shape ``(len(sentences), d)``."""
    if not len(sentences):
        return np.zeros((0, rows.shape[1]))
    ptr, ids = flatten(sentences)
    return np.add.reduceat(rows[ids], ptr[:-1], axis=0)


def hinge_sum(ra, rb, rn, margin: float) -> float:
    """Sum of hinges over a block: ``ra, rb`` are (m, d), ``rn`` is (m, k, d)."""
    dab = np.einsum("ij,ij->i", ra - rb, ra - rb)
    diff = ra[:, None, :] - rn
    dan = np.einsum("ijk,ijk->ij", diff, diff)
    return float(np.maximum(0.0, margin + dab[:, None] - dan).sum())


def corpus_loss(
    corpora: ParallelCorpus | Sequence[ParallelCorpus],
    model: BiModel,
    margin: float = 50.0,
    k: int = 50,
    seed=0,
    reg_lambda: float = 0.0,
    symmetric_noise: bool = False,
    chunk: int = 512,
) -> float:
    """Full objective with one fixed noise draw, for monitoring convergence.

    Noise for corpus ``c`` pair ``i`` comes from :func:`draw_noise_indices` on a
    single generator seeded by ``seed``, corpus by corpus, B side first and
    then (symmetric mode) A side. The regularizer ``reg_lambda / 2 * |theta|^2``
    covers every table in ``model``.
    """
    if isinstance(corpora, ParallelCorpus):
        corpora = [corpora]
    rng = np.random.default_rng(seed)
    total = 0.0
    for corpus in corpora:
        n = len(corpus)
        if n == 0:
            continue
        ra = sentence_roots(corpus.side_a, model[corpus.lang_a].rows)
        rb = sentence_roots(corpus.side_b, model[corpus.lang_b].rows)
        pairs = np.arange(n)
        idx = draw_noise_indices(rng, n, pairs, k)
        idx_a = draw_noise_indices(rng, n, pairs, k) if symmetric_noise else None
        if k == 0:
            continue
        for s in range(0, n, chunk):
            sl = slice(s, s + chunk)
            total += hinge_sum(ra[sl], rb[sl], rb[idx[sl]], margin)
            if idx_a is not None:
                total += hinge_sum(rb[sl], ra[sl], ra[idx_a[sl]], margin)
    return total + 0.5 * reg_lambda * model.squared_norm()
