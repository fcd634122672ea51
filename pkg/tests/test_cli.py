import json

import numpy as np
import pytest

from bicvm.cli import main
from bicvm.corpus import Vocabulary
from bicvm.model import import_text, init_gaussian, load_model


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "--kind", "triad", "--vocab-size", "40", "--corpus-size", "200",
                 "--docs", "80", "--out", "d"]) == 0
    for lang, files in {"a": ["d/a-b.a", "d/a-c.a"], "b": ["d/a-b.b"], "c": ["d/a-c.c"]}.items():
        assert main(["vocab", "--lang", lang, "--out", f"v.{lang}", *files]) == 0
    return tmp_path


def _train(out, *extra):
    return main(["train", "--pair", "a:d/a-b.a", "b:d/a-b.b", "--vocab", "v.a", "--vocab", "v.b",
                 "--dim", "8", "--noise-count", "5", "--quiet", "--out", out, *extra])


def test_vocab_empty_input_and_determinism(tmp_path):
    (tmp_path / "empty").write_text("")
    assert main(["vocab", "--lang", "en", "--out", str(tmp_path / "v"), str(tmp_path / "empty")]) == 0
    assert (tmp_path / "v").read_text() == "#vocab v1 en 0\n"
    (tmp_path / "c").write_text("The cat\nthe DOG sat\n\ncat sat down\n")
    for out in ("v1", "v2"):
        assert main(["vocab", "--lang", "en", "--out", str(tmp_path / out), str(tmp_path / "c")]) == 0
    b1, b2 = (tmp_path / "v1").read_bytes(), (tmp_path / "v2").read_bytes()
    assert b1 == b2
    v = Vocabulary.load(tmp_path / "v1")
    assert v.id_to_token == ["the", "cat", "dog", "sat", "down"]
    assert v.counts == [2, 2, 1, 2, 1]


def test_train_epochs_zero_is_seeded_init(workdir):
    assert _train("m0.bin", "--epochs", "0", "--seed", "4") == 0
    m = load_model("m0.bin")
    va = Vocabulary.load("v.a")
    np.testing.assert_array_equal(
        m["a"].rows, init_gaussian(len(va), 8, 0.1, [4, 0, 0]).rows.astype(np.float32)
    )


def test_train_outputs_and_determinism(workdir):
    assert _train("m1.bin", "--epochs", "3") == 0
    assert _train("m2.bin", "--epochs", "3") == 0
    assert (workdir / "m1.bin").read_bytes() == (workdir / "m2.bin").read_bytes()
    log = (workdir / "m1.bin.log").read_text().splitlines()
    assert len(log) == 4
    assert all(l.split()[0::2] == ["epoch", "loss", "seconds"] for l in log)
    manifest = dict(l.split("=", 1) for l in (workdir / "m1.bin.manifest").read_text().splitlines())
    assert manifest["config.epochs"] == "3" and manifest["seed"] == "0"
    import hashlib
    assert manifest["artifact.m1.bin"] == hashlib.sha256((workdir / "m1.bin").read_bytes()).hexdigest()
    assert "input.d/a-b.a" in manifest


def test_train_pivot_three_tables_and_checkpoints(workdir):
    rc = main(["train", "--pair", "a:d/a-b.a", "b:d/a-b.b", "--pair", "a:d/a-c.a", "c:d/a-c.c",
               "--vocab", "v.a", "--vocab", "v.b", "--vocab", "v.c", "--dim", "4", "--noise-count", "3",
               "--epochs", "2", "--checkpoint-every", "1", "--quiet", "--out", "piv.bin"])
    assert rc == 0
    assert list(load_model("piv.bin").tables) == ["a", "b", "c"]
    assert (workdir / "piv.bin.epoch1").exists() and (workdir / "piv.bin.epoch2").exists()
    assert (workdir / "piv.bin.epoch2").read_bytes() == (workdir / "piv.bin").read_bytes()


def test_train_config_errors_write_nothing(workdir, capsys):
    assert _train("bad.bin", "--dim", "0", "--step-size", "-1") == 1
    err = capsys.readouterr().err
    assert "dim=0" in err and "step_size=-1" in err
    assert not (workdir / "bad.bin").exists()
    assert main(["train", "--pair", "a:d/a-b.a", "b:d/a-b.b", "--vocab", "v.a", "--out", "x.bin"]) == 1
    assert main(["train", "--bogus"]) == 1
    assert _train("t.bin", "--threads", "4") == 1


def test_train_data_errors(workdir):
    (workdir / "short").write_text("a0\n")
    rc = main(["train", "--pair", "a:short", "b:d/a-b.b", "--vocab", "v.a", "--vocab", "v.b", "--out", "x.bin"])
    assert rc == 2
    rc = main(["train", "--pair", "a:missing", "b:d/a-b.b", "--vocab", "v.a", "--vocab", "v.b", "--out", "x.bin"])
    assert rc == 2
    assert not (workdir / "x.bin").exists()


def test_export_roundtrip(workdir):
    assert _train("m.bin", "--epochs", "1") == 0
    assert main(["export", "--model", "m.bin", "--vocab", "v.b", "--out", "e.txt"]) == 0
    text = (workdir / "e.txt").read_text()
    va = Vocabulary.load("v.b")
    assert len(text.splitlines()) == len(va) + 1
    assert text.splitlines()[0] == f"{len(va)} 8"
    tokens, rows = import_text(text)
    assert tokens == va.id_to_token
    assert np.max(np.abs(rows - load_model("m.bin")["b"].rows)) < 1e-5
    assert main(["export", "--model", "m.bin", "--vocab", "v.c", "--out", "e2.txt"]) == 2
    assert not (workdir / "e2.txt").exists()


def test_nn_self_and_errors(workdir, capsys):
    assert _train("m.bin", "--epochs", "1") == 0
    capsys.readouterr()
    va = Vocabulary.load("v.a")
    word = va.id_to_token[3]
    assert main(["nn", "--model", "m.bin", "--vocab", "v.a", "--query", word, "--lang", "a", "--top-k", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    rank, tok, sim = lines[0].split()
    assert (rank, tok) == ("1", word) and float(sim) == pytest.approx(1.0)
    assert main(["nn", "--model", "m.bin", "--vocab", "v.a", "--query", "nope", "--lang", "a"]) == 2
    assert "nope" in capsys.readouterr().err


def test_cldc(workdir):
    assert _train("m.bin", "--epochs", "2") == 0
    base = ["cldc", "--model", "m.bin", "--vocab", "v.a", "--vocab", "v.b", "--train", "d/docs.train.a",
            "--train-lang", "a", "--test", "d/docs.test.b", "--test-lang", "b", "--labels", "d/labels.tsv"]
    assert main([*base, "--sizes", "0", "--out", "r0"]) == 2
    assert not (workdir / "r0.tsv").exists()
    assert main([*base, "--sizes", "20,80", "--out", "r"]) == 0
    tsv = (workdir / "r.tsv").read_text().splitlines()
    assert tsv[0] == "size\taccuracy" and [l.split("\t")[0] for l in tsv[1:]] == ["20", "80"]
    recs = [json.loads(l) for l in (workdir / "r.jsonl").read_text().splitlines()]
    assert [r["size"] for r in recs] == [20, 80]
    assert all(r["majority_baseline"] == 0.25 for r in recs)


def test_cldc_same_language_memorization(workdir):
    assert _train("m.bin", "--epochs", "5") == 0
    # separable by construction: each doc repeats one class word many times
    va = Vocabulary.load("v.a")
    docs = []
    for i in range(40):
        label = i % 2
        docs.append(f"#label c{label}\n" + " ".join([va.id_to_token[label]] * 10))
    (workdir / "sep").write_text("\n\n".join(docs) + "\n")
    (workdir / "lab").write_text("c0\t0\nc1\t1\n")
    rc = main(["cldc", "--model", "m.bin", "--vocab", "v.a", "--train", "sep", "--train-lang", "a",
               "--test", "sep", "--test-lang", "a", "--labels", "lab", "--sizes", "40", "--out", "rs"])
    assert rc == 0
    assert json.loads((workdir / "rs.jsonl").read_text())["accuracy"] == 1.0
