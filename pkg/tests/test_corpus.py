import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bicvm.corpus import (
    ParallelCorpus,
    Vocabulary,
    build_vocabulary,
    load_parallel,
    normalize_line,
)
from bicvm.errors import AlignmentError, DataError


def reference_split(raw):
    """Character-level splitter over the Unicode whitespace class."""
    out, cur = [], []
    for ch in raw.lower():
        if ch.isspace():
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def test_normalize_examples():
    assert normalize_line("The Cat") == ["the", "cat"]
    assert normalize_line("") == []
    assert normalize_line("  Ein\tHaus ") == reference_split("  Ein\tHaus ") == ["ein", "haus"]


@given(st.text())
@settings(max_examples=300)
def test_normalize_matches_character_splitter(raw):
    assert normalize_line(raw) == reference_split(raw)


def test_build_vocabulary_examples():
    assert len(build_vocabulary([], 1, "en")) == 0
    v = build_vocabulary([["a", "b", "a"]], 1, "en")
    assert v.token_to_id == {"a": 0, "b": 1}
    assert v.counts == [2, 1]
    v2 = build_vocabulary([["a", "b", "a"]], 2, "en")
    assert v2.token_to_id == {"a": 0}


def test_build_vocabulary_rejects_bad_min_count():
    with pytest.raises(DataError):
        build_vocabulary([["a"]], 0)


@given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=6), max_size=8), st.integers(1, 3))
def test_vocabulary_first_occurrence_oracle(lines, min_count):
    v = build_vocabulary(lines, min_count, "x")
    counts = {}
    order = []
    for line in lines:
        for t in line:
            if t not in counts:
                order.append(t)
            counts[t] = counts.get(t, 0) + 1
    expected = [t for t in order if counts[t] >= min_count]
    assert v.id_to_token == expected
    assert all(v.token_to_id[t] == i for i, t in enumerate(v.id_to_token))
    assert v.counts == [counts[t] for t in expected]
    assert build_vocabulary(lines, min_count, "x") == v


def test_vocabulary_file_roundtrip(tmp_path):
    v = build_vocabulary([["über", "b", "über"]], 1, "de")
    path = tmp_path / "v.de"
    v.save(path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "#vocab v1 de 2"
    assert text.splitlines()[1] == "über\t2"
    assert Vocabulary.load(path) == v


def test_empty_vocabulary_file_has_header(tmp_path):
    path = tmp_path / "v"
    build_vocabulary([], 1, "en").save(path)
    assert path.read_text() == "#vocab v1 en 0\n"
    assert len(Vocabulary.load(path)) == 0


def test_vocabulary_rejects_whitespace_tokens():
    with pytest.raises(DataError):
        Vocabulary("x", ["a b"], [1])
    with pytest.raises(DataError):
        Vocabulary("x", [""], [1])


def _write(path, lines):
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")


def test_load_parallel_alignment_error(tmp_path):
    fa, fb = tmp_path / "a", tmp_path / "b"
    _write(fa, ["x"] * 3)
    _write(fb, ["y"] * 4)
    v = build_vocabulary([["x"]], 1, "a")
    with pytest.raises(AlignmentError, match="3 != 4"):
        load_parallel(fa, fb, v, v)


def test_load_parallel_removes_empty_pairs(tmp_path):
    fa, fb = tmp_path / "a", tmp_path / "b"
    _write(fa, ["hello", "hello there"])
    _write(fb, ["", "hallo da"])
    va = build_vocabulary([["hello", "there"]], 1, "en")
    vb = build_vocabulary([["hallo", "da"]], 1, "de")
    c = load_parallel(fa, fb, va, vb)
    assert c.removed == 1
    assert len(c) == 1


def test_load_parallel_encodes(tmp_path):
    fa, fb = tmp_path / "a", tmp_path / "b"
    _write(fa, ["a b"])
    _write(fb, ["x y z"])
    va = build_vocabulary([["a", "b"]], 1, "a")
    vb = build_vocabulary([["x", "y", "z"]], 1, "b")
    c = load_parallel(fa, fb, va, vb)
    (sa, sb), = c.pairs
    assert sa.tolist() == [va.token_to_id["a"], va.token_to_id["b"]] == [0, 1]
    assert sb.tolist() == [0, 1, 2]


def test_load_parallel_oov_emptied_pairs_removed(tmp_path):
    fa, fb = tmp_path / "a", tmp_path / "b"
    _write(fa, ["known", "unknown words only"])
    _write(fb, ["bekannt", "bekannt"])
    va = build_vocabulary([["known"]], 1, "a")
    vb = build_vocabulary([["bekannt"]], 1, "b")
    c = load_parallel(fa, fb, va, vb)
    assert len(c) == 1 and c.removed == 1


def test_load_parallel_missing_file(tmp_path):
    v = build_vocabulary([["x"]], 1, "a")
    with pytest.raises(OSError):
        load_parallel(tmp_path / "nope", tmp_path / "nope2", v, v)


def test_unicode_line_separator_does_not_split(tmp_path):
    fa, fb = tmp_path / "a", tmp_path / "b"
    fa.write_text("a\u2028b\nc\n", encoding="utf-8")
    fb.write_text("x\ny\n", encoding="utf-8")
    va = build_vocabulary([["a", "b", "c"]], 1, "a")
    vb = build_vocabulary([["x", "y"]], 1, "b")
    c = load_parallel(fa, fb, va, vb)
    assert len(c) == 2
    assert c.side_a[0].tolist() == [0, 1]


@given(st.lists(st.text(alphabet="abcXYZ \t", max_size=20), min_size=1, max_size=10))
def test_encode_decode_roundtrip(lines):
    toks = [normalize_line(l) for l in lines]
    v = build_vocabulary(toks[: len(toks) // 2 + 1], 1, "x")
    for t in toks:
        assert v.decode(v.encode(t)) == [w for w in t if w in v]


def test_corpus_invariants(toy_corpus):
    assert min(min(len(a), len(b)) for a, b in toy_corpus.pairs) >= 1
    for a, b in toy_corpus.pairs:
        assert a.max() < len(toy_corpus.vocab_a) and b.max() < len(toy_corpus.vocab_b)
        assert not a.flags.writeable


def test_corpus_rejects_bad_ids(toy_corpus):
    with pytest.raises(DataError):
        ParallelCorpus(toy_corpus.vocab_a, toy_corpus.vocab_b, [np.array([999])], [np.array([0])])
    with pytest.raises(DataError):
        ParallelCorpus(toy_corpus.vocab_a, toy_corpus.vocab_b, [np.array([], dtype=int)], [np.array([0])])
