"""Command-line interface: vocab, train, export, nn, cldc and synth subcommands.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal invariant violation. Inputs are fully validated before any output
file is written, and outputs are written atomically.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .classifier import (
    evaluate_cldc,
    format_documents,
    format_label_map,
    load_documents,
    load_label_map,
)
from .corpus import Vocabulary, build_vocabulary, load_parallel, normalize_line, read_lines
from .errors import BicvmError, ConfigError, DataError, LookupFailure
from .model import cosine_neighbors, export_text, load_model, model_to_bytes
from .trainer import TrainConfig, train

log = logging.getLogger("bicvm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_digest(path) -> str:
    with open(path, "rb") as fh:
        return _digest(fh.read())


def _write_atomic(path, data: str | bytes) -> str:
    """Write via a temporary sibling and rename; returns the sha256 of the content."""
    raw = data.encode("utf-8") if isinstance(data, str) else data
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return _digest(raw)


def _load_vocabs(paths) -> dict[str, Vocabulary]:
    vocabs = {}
    for p in paths or []:
        v = Vocabulary.load(p)
        if v.language_tag in vocabs:
            raise ConfigError(f"two vocabularies for language {v.language_tag!r}")
        vocabs[v.language_tag] = v
    return vocabs


def _vocab_for(vocabs, lang) -> Vocabulary:
    try:
        return vocabs[lang]
    except KeyError:
        raise ConfigError(f"no --vocab given for language {lang!r}") from None


def _check_model_vocab(model, vocab):
    table = model[vocab.language_tag]
    if len(table) != len(vocab):
        raise DataError(
            f"vocabulary {vocab.language_tag!r} has {len(vocab)} tokens, model table has {len(table)} rows"
        )


def _manifest(entries: list[tuple[str, object]]) -> str:
    return "".join(f"{k}={v}\n" for k, v in entries)


# -- subcommands --------------------------------------------------------------


def cmd_vocab(args) -> int:
    lines = []
    for path in args.inputs:
        lines.extend(normalize_line(l) for l in read_lines(path))
    vocab = build_vocabulary(lines, args.min_count, args.lang)
    _write_atomic(args.out, vocab.to_text())
    print(f"{args.out}: {len(vocab)} tokens")
    return 0


def _parse_side(spec: str) -> tuple[str, str]:
    lang, sep, path = spec.partition(":")
    if not sep or not lang or not path:
        raise ConfigError(f"--pair sides must look like LANG:PATH, got {spec!r}")
    return lang, path


def config_from_args(args) -> TrainConfig:
    cfg = TrainConfig(
        dim=args.dim,
        step_size=args.step_size,
        reg_lambda=args.reg_lambda,
        noise_count=args.noise_count,
        margin=args.margin,
        epochs=args.epochs,
        seed=args.seed,
        init_std=args.init_std,
        symmetric_noise=args.symmetric_noise,
        eps=args.eps,
    )
    cfg.validate()
    return cfg


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    cfg = config_from_args(args)
    if args.threads != 1:
        raise ConfigError("--threads: only single-threaded deterministic training (1) is supported")
    if args.checkpoint_every < 0:
        raise ConfigError("--checkpoint-every must be >= 0")
    vocabs = _load_vocabs(args.vocab)
    corpora, inputs = [], []
    for side_a, side_b in args.pair:
        (la, pa), (lb, pb) = _parse_side(side_a), _parse_side(side_b)
        corpus = load_parallel(pa, pb, _vocab_for(vocabs, la), _vocab_for(vocabs, lb))
        log.info("%s-%s: %d pairs, %d removed", la, lb, len(corpus), corpus.removed)
        corpora.append(corpus)
        inputs.extend([pa, pb])
    inputs.extend(args.vocab)
    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log")
    manifest_path = Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest")

    log_lines: list[str] = []
    artifacts: list[tuple[str, str]] = []

    def on_epoch(rec, model):
        log_lines.append(rec.line())
        if not args.quiet:
            print(rec.line(), flush=True)
        if args.checkpoint_every and rec.epoch and rec.epoch % args.checkpoint_every == 0:
            ck = out.with_name(f"{out.name}.epoch{rec.epoch}")
            artifacts.append((str(ck), _write_atomic(ck, model_to_bytes(model))))

    result = train(corpora, cfg, on_epoch=on_epoch)
    artifacts.append((str(out), _write_atomic(out, model_to_bytes(result.model))))
    artifacts.append((str(log_path), _write_atomic(log_path, "\n".join(log_lines) + "\n")))

    entries: list[tuple[str, object]] = [("command", "train"), ("version", __version__)]
    entries += [(f"config.{k}", v) for k, v in cfg.as_dict().items()]
    entries.append(("seed", cfg.seed))
    entries.append(("languages", ",".join(result.model.tables)))
    entries += [(f"input.{p}", _file_digest(p)) for p in inputs]
    entries += [(f"artifact.{p}", d) for p, d in artifacts]
    entries.append(("timing.seconds", f"{time.perf_counter() - t0:.3f}"))
    _write_atomic(manifest_path, _manifest(entries))
    return 0


def cmd_export(args) -> int:
    model = load_model(args.model)
    vocab = _load_vocabs([args.vocab])
    (lang, v), = vocab.items()
    if args.lang and args.lang != lang:
        raise ConfigError(f"--lang {args.lang!r} does not match vocabulary language {lang!r}")
    if lang not in model:
        raise LookupFailure(f"language {lang!r} not in model (has {', '.join(model.tables)})")
    _check_model_vocab(model, v)
    _write_atomic(args.out, export_text(model[lang], v.id_to_token))
    return 0


def cmd_nn(args) -> int:
    model = load_model(args.model)
    vocabs = _load_vocabs(args.vocab)
    src, dst = _vocab_for(vocabs, args.lang), _vocab_for(vocabs, args.target_lang or args.lang)
    for v in (src, dst):
        if v.language_tag not in model:
            raise LookupFailure(f"language {v.language_tag!r} not in model")
        _check_model_vocab(model, v)
    token = normalize_line(args.query)
    if len(token) != 1 or token[0] not in src:
        raise LookupFailure(f"unknown token {args.query!r} in language {src.language_tag!r}")
    query = model[src.language_tag].rows[src.token_to_id[token[0]]]
    for rank, (wid, sim) in enumerate(cosine_neighbors(query, model[dst.language_tag], args.top_k), 1):
        print(f"{rank} {dst.id_to_token[wid]} {sim:.6f}")
    return 0


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise DataError(f"training sizes must be >= 1, got {text!r}")
    return sizes


def cmd_cldc(args) -> int:
    sizes = _parse_sizes(args.sizes)
    model = load_model(args.model)
    vocabs = _load_vocabs(args.vocab)
    label_map = load_label_map(args.labels)
    vtr, vte = _vocab_for(vocabs, args.train_lang), _vocab_for(vocabs, args.test_lang)
    for v in (vtr, vte):
        _check_model_vocab(model, v)
    train_docs, rej_tr = load_documents(args.train, vtr, label_map)
    test_docs, rej_te = load_documents(args.test, vte, label_map)
    if rej_tr or rej_te:
        print(f"rejected documents: train {rej_tr}, test {rej_te}", file=sys.stderr)
    if not test_docs:
        raise DataError(f"{args.test}: no usable test documents")
    report = evaluate_cldc(
        train_docs, test_docs, model, sizes, classes=len(label_map), epochs=args.epochs, seed=args.seed
    )
    prefix = Path(args.out)
    _write_atomic(prefix.with_name(prefix.name + ".tsv"), report.to_tsv())
    _write_atomic(prefix.with_name(prefix.name + ".jsonl"), report.to_jsonl())
    sys.stdout.write(report.to_tsv())
    print(f"majority_baseline\t{report.majority_baseline:.4f}")
    return 0


def cmd_synth(args) -> int:
    from dataclasses import replace

    from .synthbench import SyntheticSpec, gen_bijective_pair, gen_labeled_docs, gen_pivot_triad

    spec = replace(
        SyntheticSpec(), vocab_size=args.vocab_size, corpus_size=args.corpus_size,
        n_docs=args.docs, seed=args.seed,
    )
    out = Path(args.out)
    files: dict[str, str] = {}
    if args.kind == "pair":
        sp = gen_bijective_pair(spec)
        files["a-b.a"] = "\n".join(sp.lines_a) + "\n"
        files["a-b.b"] = "\n".join(sp.lines_b) + "\n"
        bijections = {"a-b": sp.bijection}
        test_lang, test_bij = "b", sp.bijection
    else:
        spec = replace(spec, languages=("a", "b", "c"))
        tr = gen_pivot_triad(spec)
        files.update({k: "\n".join(v) + "\n" for k, v in tr.lines.items()})
        bijections = {"a-b": tr.bijection_ab, "a-c": tr.bijection_ac, "b-c": tr.bijection_bc}
        test_lang, test_bij = "b", tr.bijection_ab
    for name, bij in bijections.items():
        files[f"bijection.{name}.tsv"] = "".join(f"{s}\t{t}\n" for s, t in bij.items())
    files["docs.train.a"] = format_documents(gen_labeled_docs(spec, "a", None, 0))
    files[f"docs.test.{test_lang}"] = format_documents(gen_labeled_docs(spec, test_lang, test_bij, 1))
    files["labels.tsv"] = format_label_map({f"c{i}": i for i in range(spec.n_classes)})
    for name, text in files.items():
        _write_atomic(out / name, text)
    print(f"wrote {len(files)} files to {out}")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bicvm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("vocab", help="build a vocabulary file from tokenized text")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--lang", required=True)
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_vocab)

    d = TrainConfig()
    s = sub.add_parser("train", help="train embeddings on one or more parallel corpora")
    s.add_argument("--pair", nargs=2, action="append", required=True, metavar=("LANG:FILE", "LANG:FILE"))
    s.add_argument("--vocab", action="append", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--log")
    s.add_argument("--manifest")
    s.add_argument("--checkpoint-every", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--quiet", action="store_true")
    s.add_argument("--dim", type=int, default=d.dim)
    s.add_argument("--step-size", type=float, default=d.step_size)
    s.add_argument("--reg-lambda", type=float, default=d.reg_lambda)
    s.add_argument("--noise-count", type=int, default=d.noise_count)
    s.add_argument("--margin", type=float, default=d.margin)
    s.add_argument("--epochs", type=int, default=d.epochs)
    s.add_argument("--seed", type=int, default=d.seed)
    s.add_argument("--init-std", type=float, default=d.init_std)
    s.add_argument("--symmetric-noise", action="store_true")
    s.add_argument("--eps", type=float, default=d.eps)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("export", help="write one language's embeddings as text")
    s.add_argument("--model", required=True)
    s.add_argument("--vocab", required=True)
    s.add_argument("--lang")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("nn", help="nearest neighbours of a word, optionally across languages")
    s.add_argument("--model", required=True)
    s.add_argument("--vocab", action="append", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--lang", required=True)
    s.add_argument("--target-lang")
    s.add_argument("--top-k", type=int, default=10)
    s.set_defaults(func=cmd_nn)

    s = sub.add_parser("cldc", help="cross-lingual document classification")
    s.add_argument("--model", required=True)
    s.add_argument("--vocab", action="append", required=True)
    s.add_argument("--train", required=True)
    s.add_argument("--train-lang", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--test-lang", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--sizes", default="100,200,500,1000")
    s.add_argument("--epochs", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="report prefix; writes PREFIX.tsv and PREFIX.jsonl")
    s.set_defaults(func=cmd_cldc)

    s = sub.add_parser("synth", help="write a synthetic benchmark (corpora, documents, ground truth)")
    s.add_argument("--kind", choices=["pair", "triad"], default="pair")
    s.add_argument("--vocab-size", type=int, default=500)
    s.add_argument("--corpus-size", type=int, default=10_000)
    s.add_argument("--docs", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except BicvmError as exc:
        print(f"bicvm {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"bicvm {args.command}: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError) as exc:
        print(f"bicvm {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except FloatingPointError as exc:
        print(f"bicvm {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
