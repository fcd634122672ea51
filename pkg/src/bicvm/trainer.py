"""AdaGrad training of per-language embedding tables over one or more corpora.

Languages shared between corpora (a pivot) get a single table, so training on
en-de plus en-fr yields three tables with the English one updated by both.
All randomness derives from ``TrainConfig.seed`` through fixed sub-seeds:

    [seed, 0, language_index]  table initialization
    [seed, 1, epoch]           visiting order
    [seed, 2, epoch]           noise sentences
    [seed, 3]                  fixed noise for the monitored loss
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import ParallelCorpus, Vocabulary, flatten
from .errors import ConfigError, SamplingError, ShapeError
from .kernels import get_train_epoch
from .model import BiModel, EmbeddingTable, init_gaussian
from .objective import corpus_loss, draw_noise_indices

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    dim: int = 40
    step_size: float = 0.1
    reg_lambda: float = 1.0
    noise_count: int = 50
    margin: float = 50.0
    epochs: int = 50
    seed: int = 0
    init_std: float = 0.1
    symmetric_noise: bool = False
    eps: float = 1e-6

    def validate(self) -> None:
        bad = []
        if not self.dim >= 1:
            bad.append(f"dim={self.dim} (need >= 1)")
        if not self.step_size > 0:
            bad.append(f"step_size={self.step_size} (need > 0)")
        if not self.reg_lambda >= 0:
            bad.append(f"reg_lambda={self.reg_lambda} (need >= 0)")
        if not self.noise_count >= 0:
            bad.append(f"noise_count={self.noise_count} (need >= 0)")
        if not self.margin > 0:
            bad.append(f"margin={self.margin} (need > 0)")
        if not self.epochs >= 0:
            bad.append(f"epochs={self.epochs} (need >= 0)")
        if not self.init_std > 0:
            bad.append(f"init_std={self.init_std} (need > 0)")
        if not self.eps > 0:
            bad.append(f"eps={self.eps} (need > 0)")
        if bad:
            raise ConfigError("invalid training configuration: " + ", ".join(bad))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdaGradState:
    """Accumulated squared gradients, one array per language table."""

    sums: dict[str, np.ndarray]
    eps: float = 1e-6


def adagrad_update(param_row, grad, g_row, step_size: float, eps: float = 1e-6) -> None:
    """In place: ``g_row += grad**2; param_row -= step_size * grad / (sqrt(g_row) + eps)``."""
    grad = np.asarray(grad, dtype=np.float64)
    if not (param_row.shape == grad.shape == g_row.shape):
        raise ShapeError(f"shapes differ: {param_row.shape}, {grad.shape}, {g_row.shape}")
    g_row += grad * grad
    param_row -= step_size * grad / (np.sqrt(g_row) + eps)


def epoch_schedule(corpora: Sequence[ParallelCorpus], epoch_index: int, seed: int) -> np.ndarray:
    """Seeded permutation of all ``(corpus_id, pair_index)`` references, shape (P, 2)."""
    sizes = [len(c) for c in corpora]
    refs = np.array(
        [(cid, i) for cid, n in enumerate(sizes) for i in range(n)], dtype=np.int64
    ).reshape(-1, 2)
    rng = np.random.default_rng([seed, 1, epoch_index])
    return refs[rng.permutation(len(refs))]


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    seconds: float

    def line(self) -> str:
        return f"epoch {self.epoch} loss {self.loss:.6f} seconds {self.seconds:.3f}"


@dataclass
class TrainResult:
    model: BiModel
    log: list[EpochRecord] = field(default_factory=list)
    adagrad: AdaGradState | None = None
    vocabularies: dict[str, Vocabulary] = field(default_factory=dict)

    @property
    def initial_loss(self) -> float:
        return self.log[0].loss


class _Layout:
    """Concatenates all tables into one matrix and all sentences into one CSR store."""

    def __init__(self, corpora: Sequence[ParallelCorpus]):
        self.vocabs: dict[str, Vocabulary] = {}
        for c in corpora:
            for v in (c.vocab_a, c.vocab_b):
                seen = self.vocabs.get(v.language_tag)
                if seen is None:
                    self.vocabs[v.language_tag] = v
                elif seen is not v and seen != v:
                    raise ConfigError(
                        f"language {v.language_tag!r} appears with two different vocabularies"
                    )
        self.offsets: dict[str, int] = {}
        off = 0
        for tag, v in self.vocabs.items():
            self.offsets[tag] = off
            off += len(v)
        self.rows = off

        sents, self.base_a, self.base_b = [], [], []
        for c in corpora:
            self.base_a.append(len(sents))
            sents.extend(s + self.offsets[c.lang_a] for s in c.side_a)
            self.base_b.append(len(sents))
            sents.extend(s + self.offsets[c.lang_b] for s in c.side_b)
        self.ptr, self.ids = flatten(sents)
        self.base_a = np.asarray(self.base_a, dtype=np.int64)
        self.base_b = np.asarray(self.base_b, dtype=np.int64)
        self.sizes = np.asarray([len(c) for c in corpora], dtype=np.int64)

    def views(self, W: np.ndarray) -> dict[str, np.ndarray]:
        return {t: W[o : o + len(self.vocabs[t])] for t, o in self.offsets.items()}


def train(
    corpora: ParallelCorpus | Sequence[ParallelCorpus],
    config: TrainConfig | None = None,
    backend: str | None = None,
    on_epoch: Callable[[EpochRecord, BiModel], None] | None = None,
) -> TrainResult:
    """Train a :class:`BiModel` with per-pair AdaGrad updates.

    Each epoch visits every pair of every corpus once in a seeded order. For
    each pair, fresh noise sentences are drawn from the same corpus, the
    hinge gradient is computed, ``reg_lambda * row`` is added for every row
    the pair touched (its own sentences and its noise), and those rows get
    an AdaGrad step. ``on_epoch`` is called after every epoch, including a
    record for epoch 0 holding the loss at initialization.
    """
    config = config or TrainConfig()
    config.validate()
    if isinstance(corpora, ParallelCorpus):
        corpora = [corpora]
    if not corpora:
        raise ConfigError("need at least one corpus")
    k = config.noise_count
    if k >= 1:
        for c in corpora:
            if len(c) < 2:
                raise SamplingError(
                    f"corpus {c.lang_a}-{c.lang_b} has {len(c)} pairs; noise sampling needs >= 2"
                )

    layout = _Layout(corpora)
    d = config.dim
    W = np.zeros((layout.rows, d))
    for li, (tag, v) in enumerate(layout.vocabs.items()):
        o = layout.offsets[tag]
        W[o : o + len(v)] = init_gaussian(len(v), d, config.init_std, [config.seed, 0, li]).rows
    G = np.zeros_like(W)
    model = BiModel(d, {t: EmbeddingTable(t, r) for t, r in layout.views(W).items()})
    state = AdaGradState(layout.views(G), config.eps)
    kernel = get_train_epoch(backend)

    def monitor():
        return corpus_loss(
            corpora, model, config.margin, k, [config.seed, 3],
            config.reg_lambda, config.symmetric_noise,
        )

    result = TrainResult(model, [EpochRecord(0, monitor(), 0.0)], state, dict(layout.vocabs))
    log.info(result.log[0].line())
    if on_epoch:
        on_epoch(result.log[0], model)
    empty = np.zeros((0, 0), dtype=np.int64)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        sched = epoch_schedule(corpora, epoch, config.seed)
        cid, pidx = sched[:, 0], sched[:, 1]
        rng = np.random.default_rng([config.seed, 2, epoch])
        high = layout.sizes[cid]
        noise_b = draw_noise_indices(rng, high, pidx, k) + layout.base_b[cid][:, None]
        if config.symmetric_noise:
            noise_a = draw_noise_indices(rng, high, pidx, k) + layout.base_a[cid][:, None]
        else:
            noise_a = empty.reshape(len(pidx), 0)
        kernel(
            W, G, layout.ptr, layout.ids,
            np.ascontiguousarray(layout.base_a[cid] + pidx),
            np.ascontiguousarray(layout.base_b[cid] + pidx),
            np.ascontiguousarray(noise_b), np.ascontiguousarray(noise_a),
            float(config.margin), float(config.reg_lambda), float(config.step_size), float(config.eps),
        )
        if not np.all(np.isfinite(W)):
            raise FloatingPointError(f"non-finite parameters after epoch {epoch}")
        rec = EpochRecord(epoch, monitor(), time.perf_counter() - t0)
        result.log.append(rec)
        log.info(rec.line())
        if on_epoch:
            on_epoch(rec, model)
    return result
