"""Synthetic parallel corpora and labeled documents with known ground truth.

Language B is an exact word-for-word relabeling of language A under a seeded
random bijection, so bag-of-words sentence sums are perfectly translatable and
word-level retrieval has an unambiguous answer.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import ParallelCorpus, Vocabulary, build_vocabulary, encode_pairs
from .errors import ConfigError


@dataclass(frozen=True)
class SyntheticSpec:
    vocab_size: int = 500
    min_len: int = 3
    max_len: int = 12
    corpus_size: int = 10_000
    zipf_exponent: float = 0.0
    languages: tuple[str, ...] = ("a", "b")
    seed: int = 0
    # labeled documents
    n_classes: int = 4
    class_size: int = 10
    class_rate: float = 0.4
    n_docs: int = 1000
    doc_sentences: tuple[int, int] = (4, 8)

    def validate(self):
        if self.vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigError(f"bad sentence length range [{self.min_len}, {self.max_len}]")
        if self.n_classes * self.class_size > self.vocab_size:
            raise ConfigError("class token sets do not fit in the vocabulary")
        if not 0 <= self.class_rate <= 1:
            raise ConfigError(f"class_rate must be in [0, 1], got {self.class_rate}")


def tokens_of(lang: str, n: int) -> list[str]:
    return [f"{lang}{i}" for i in range(n)]


def _word_probs(spec: SyntheticSpec) -> np.ndarray:
    p = 1.0 / np.arange(1, spec.vocab_size + 1) ** spec.zipf_exponent
    return p / p.sum()


def _sentence(rng, spec, probs) -> tuple[int, ...]:
    n = int(rng.integers(spec.min_len, spec.max_len + 1))
    return tuple(int(w) for w in rng.choice(spec.vocab_size, size=n, p=probs))


def _bijection(rng, spec, src: str, dst: str) -> dict[str, str]:
    perm = rng.permutation(spec.vocab_size)
    s, t = tokens_of(src, spec.vocab_size), tokens_of(dst, spec.vocab_size)
    return {s[i]: t[int(perm[i])] for i in range(spec.vocab_size)}


def translate(lines: list[str], bijection: dict[str, str]) -> list[str]:
    return [" ".join(bijection[t] for t in line.split()) for line in lines]


def id_bijection(bijection: dict[str, str], vocab_a: Vocabulary, vocab_b: Vocabulary) -> dict[int, int]:
    """Restrict a token bijection to ids present in both vocabularies."""
    out = {}
    for s, t in bijection.items():
        if s in vocab_a and t in vocab_b:
            out[vocab_a.token_to_id[s]] = vocab_b.token_to_id[t]
    return out


@dataclass
class SyntheticPair:
    corpus: ParallelCorpus
    bijection: dict[str, str]
    lines_a: list[str]
    lines_b: list[str]

    def __iter__(self):
        return iter((self.corpus, self.bijection))


@dataclass
class SyntheticTriad:
    corpus_ab: ParallelCorpus
    corpus_ac: ParallelCorpus
    bijection_bc: dict[str, str]
    bijection_ab: dict[str, str]
    bijection_ac: dict[str, str]
    lines: dict[str, list[str]] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.corpus_ab, self.corpus_ac, self.bijection_bc))


def gen_bijective_pair(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticPair:
    """Corpus whose B side is the tokenwise image of the A side under a bijection."""
    spec.validate()
    la, lb = spec.languages[:2]
    rng = np.random.default_rng([spec.seed, 10])
    bij = _bijection(rng, spec, la, lb)
    probs = _word_probs(spec)
    names = tokens_of(la, spec.vocab_size)
    lines_a = [" ".join(names[w] for w in _sentence(rng, spec, probs)) for _ in range(spec.corpus_size)]
    lines_b = translate(lines_a, bij)
    va = build_vocabulary((l.split() for l in lines_a), 1, la)
    vb = build_vocabulary((l.split() for l in lines_b), 1, lb)
    return SyntheticPair(encode_pairs(lines_a, lines_b, va, vb), bij, lines_a, lines_b)


def gen_pivot_triad(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticTriad:
    """Two corpora A-B and A-C with disjoint A sentences and no B-C pairs.

    Ground truth B->C is the composition of the inverse A->B bijection with
    the A->C bijection.
    """
    spec.validate()
    if len(spec.languages) < 3:
        spec = replace(spec, languages=("a", "b", "c"))
    la, lb, lc = spec.languages[:3]
    rng = np.random.default_rng([spec.seed, 11])
    bij_ab = _bijection(rng, spec, la, lb)
    bij_ac = _bijection(rng, spec, la, lc)
    probs = _word_probs(spec)
    names = tokens_of(la, spec.vocab_size)
    seen: set[tuple[int, ...]] = set()
    sides: list[list[str]] = [[], []]
    for side in sides:
        while len(side) < spec.corpus_size:
            s = _sentence(rng, spec, probs)
            if s in seen:
                continue
            seen.add(s)
            side.append(" ".join(names[w] for w in s))
    a1, a2 = sides
    b, c = translate(a1, bij_ab), translate(a2, bij_ac)
    va = build_vocabulary((l.split() for l in a1 + a2), 1, la)
    vb = build_vocabulary((l.split() for l in b), 1, lb)
    vc = build_vocabulary((l.split() for l in c), 1, lc)
    inv_ab = {t: s for s, t in bij_ab.items()}
    bij_bc = {t: bij_ac[inv_ab[t]] for t in inv_ab}
    return SyntheticTriad(
        encode_pairs(a1, b, va, vb),
        encode_pairs(a2, c, va, vc),
        bij_bc,
        bij_ab,
        bij_ac,
        {f"{la}-{lb}.{la}": a1, f"{la}-{lb}.{lb}": b, f"{la}-{lc}.{la}": a2, f"{la}-{lc}.{lc}": c},
    )


def class_token_sets(spec: SyntheticSpec) -> list[list[int]]:
    """Disjoint per-class word indices in the first language."""
    spec.validate()
    rng = np.random.default_rng([spec.seed, 12])
    chosen = rng.choice(spec.vocab_size, size=spec.n_classes * spec.class_size, replace=False)
    return [sorted(int(w) for w in chosen[c * spec.class_size : (c + 1) * spec.class_size])
            for c in range(spec.n_classes)]


@dataclass
class RawDocument:
    label: str
    sentences: list[str]


def gen_labeled_docs(
    spec: SyntheticSpec = SyntheticSpec(),
    language: str | None = None,
    bijection: dict[str, str] | None = None,
    stream: int = 0,
) -> list[RawDocument]:
    """Balanced labeled documents rich in their class's indicative words.

    Each token is, with probability ``class_rate``, a uniform draw from the
    document class's token set, otherwise a draw from the background word
    distribution. Documents are generated in the first language; for any
    other ``language`` pass the ``bijection`` from the first language into it
    and the tokenwise translation is returned. ``stream`` selects an
    independent document sample, e.g. 0 for train and 1 for test.
    """
    sets = class_token_sets(spec)
    la = spec.languages[0]
    language = language or la
    if (language == la) != (bijection is None):
        raise ConfigError(f"documents in {language!r} need a bijection from {la!r} (and only then)")
    rng = np.random.default_rng([spec.seed, 13, stream])
    probs = _word_probs(spec)
    names = tokens_of(la, spec.vocab_size)
    labels = rng.permutation(np.arange(spec.n_docs) % spec.n_classes)
    docs = []
    for label in labels:
        cls = sets[int(label)]
        sents = []
        for _ in range(int(rng.integers(spec.doc_sentences[0], spec.doc_sentences[1] + 1))):
            n = int(rng.integers(spec.min_len, spec.max_len + 1))
            from_class = rng.random(n) < spec.class_rate
            bg = rng.choice(spec.vocab_size, size=n, p=probs)
            cl = rng.choice(cls, size=n)
            words = np.where(from_class, cl, bg)
            sents.append(" ".join(names[int(w)] for w in words))
        docs.append(RawDocument(f"c{int(label)}", sents))
    if bijection is not None:
        docs = [RawDocument(d.label, translate(d.sentences, bijection)) for d in docs]
    return docs
