import numpy as np
import pytest

from bicvm.corpus import build_vocabulary, encode_pairs
from bicvm.model import BiModel, EmbeddingTable

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _CRITERIA.append((marker.args[0], marker.args[1], rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, outcome, detail in sorted(_CRITERIA, key=lambda r: r[0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


def make_corpus(pairs_a, pairs_b, lang_a="a", lang_b="b"):
    va = build_vocabulary((l.split() for l in pairs_a), 1, lang_a)
    vb = build_vocabulary((l.split() for l in pairs_b), 1, lang_b)
    return encode_pairs(pairs_a, pairs_b, va, vb)


def random_model(rng, sizes, dim, scale=1.0):
    return BiModel(
        dim, {tag: EmbeddingTable(tag, rng.normal(0, scale, (n, dim))) for tag, n in sizes.items()}
    )


@pytest.fixture
def toy_corpus():
    a = ["the cat sat", "a dog ran", "the dog sat down", "cat and dog", "a cat"]
    b = ["die katze sass", "ein hund lief", "der hund sass unten", "katze und hund", "eine katze"]
    return make_corpus(a, b, "en", "de")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
