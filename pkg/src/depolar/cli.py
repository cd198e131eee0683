"""Command-line interface: corpus prep, training, detection, rewriting,
evaluation and the HTTP service."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace

from depolar.errors import DepolarError


class _JsonErrorParser(argparse.ArgumentParser):
    """Argument errors go to stderr as machine-readable JSON (exit code 2)."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}, sort_keys=True), file=sys.stderr)
        raise SystemExit(2)


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True))


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise DepolarError("config file must contain a JSON object")
    return obj


def _dataclass_from(cls, overrides: dict, **direct):
    """Build a config dataclass from defaults, config-file section, and flags."""
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise DepolarError(f"unknown {cls.__name__} keys in config: {sorted(unknown)}")
    merged = dict(overrides)
    merged.update({k: v for k, v in direct.items() if v is not None})
    return replace(cls(), **merged)


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonErrorParser(prog="depolar", description=__doc__)
    parser.add_argument("--model-dir", help="trained model directory")
    parser.add_argument("--config", help="JSON config file with train/anneal/classifier sections")
    parser.add_argument("--seed", type=int, help="seed override for the subcommand")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_JsonErrorParser)

    p = sub.add_parser("ingest", help="validate and tokenize a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write the tokenized corpus as JSONL")
    p.add_argument("--strict", action="store_true", help="reject unknown keys")

    p = sub.add_parser("synth", help="generate a planted-marker synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="write the planted ground truth as JSON")
    p.add_argument("--docs-per-cell", type=int)
    p.add_argument("--tokens-per-doc", type=int)
    p.add_argument("--background-size", type=int)
    p.add_argument("--insertion-rate", type=float)

    p = sub.add_parser("train", help="train embeddings and write a model directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--no-phrases", action="store_true", help="skip phrase detection")

    p = sub.add_parser("detect", help="detect polar words in stdin text")
    p.add_argument("--topic", required=True)
    p.add_argument("--min-freq", type=int, default=None)

    p = sub.add_parser("candidates", help="neutral replacement candidates for one word")
    p.add_argument("--word", required=True)
    p.add_argument("--ideology", required=True)
    p.add_argument("--topic", required=True)
    p.add_argument("--k", type=int, default=None)

    p = sub.add_parser("depolarize", help="rewrite stdin text toward neutral wording")
    p.add_argument("--topic", required=True)
    p.add_argument("--ideology", required=True)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--max-positions", type=int)
    p.add_argument("--max-iterations", type=int)

    p = sub.add_parser("eval", help="depolarize a corpus and report success rates")
    p.add_argument("--counts", help="aggregate-count fixture JSON (skips rewriting)")
    p.add_argument("--in", dest="in_path", help="polar articles JSONL to rewrite")
    p.add_argument("--classifier", help="classifier .npz path (loaded, or written with --train-classifier)")
    p.add_argument("--train-classifier", dest="train_corpus", help="corpus JSONL to fit the classifier on")
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--limit", type=int, help="evaluate at most N articles")
    p.add_argument("--out-dir", help="write report.tsv and figures here")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--session-log", help="append-only JSONL audit log for edit sessions")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        handler = {
            "ingest": cmd_ingest,
            "synth": cmd_synth,
            "train": cmd_train,
            "detect": cmd_detect,
            "candidates": cmd_candidates,
            "depolarize": cmd_depolarize,
            "eval": cmd_eval,
            "serve": cmd_serve,
        }[args.command]
        return handler(args)
    except DepolarError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True),
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1


def _require_model_dir(args) -> str:
    if not args.model_dir:
        raise DepolarError("--model-dir is required for this command")
    return args.model_dir


def _pipeline(args, min_freq=None):
    from depolar.polarity import DESK_MIN_FREQ
    from depolar.runtime import Pipeline

    config = _load_config_file(args.config)
    freq = min_freq if min_freq is not None else config.get("min_freq", DESK_MIN_FREQ)
    return Pipeline.load(_require_model_dir(args), min_freq=freq)


def cmd_ingest(args) -> int:
    from depolar.corpus import load_jsonl

    corpus = load_jsonl(args.corpus, strict=args.strict)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for art in corpus.articles:
                fh.write(
                    json.dumps(
                        {
                            "id": art.id,
                            "ideology": art.ideology,
                            "topic": art.topic,
                            "tokens": art.tokens,
                            "paragraphs": art.paragraphs,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    _emit(
        {
            "documents": len(corpus.articles),
            "tokens": sum(len(a.tokens) for a in corpus.articles),
            "topics": list(corpus.topics),
        }
    )
    return 0


def cmd_synth(args) -> int:
    from depolar.evalkit import SynthSpec, write_synth

    config = _load_config_file(args.config).get("synth", {})
    spec = _dataclass_from(
        SynthSpec,
        config,
        docs_per_cell=args.docs_per_cell,
        tokens_per_doc=args.tokens_per_doc,
        background_size=args.background_size,
        insertion_rate=args.insertion_rate,
        seed=args.seed,
    )
    corpus, _ = write_synth(spec, args.out, args.truth)
    _emit(
        {
            "documents": len(corpus.articles),
            "tokens": sum(len(a.tokens) for a in corpus.articles),
            "corpus": args.out,
            "truth": args.truth,
        }
    )
    return 0


def cmd_train(args) -> int:
    from depolar.corpus import load_jsonl
    from depolar.embedding import TrainConfig, train_model

    file_config = _load_config_file(args.config)
    train_config = _dataclass_from(
        TrainConfig,
        file_config.get("train", {}),
        dims=args.dims,
        epochs=args.epochs,
        negatives=args.negatives,
        window=args.window,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    min_count = args.min_count if args.min_count is not None else file_config.get("min_count", 5)
    corpus = load_jsonl(args.corpus)
    model = train_model(
        corpus,
        train_config,
        min_count=min_count,
        detect_phrases_pass=not args.no_phrases,
    )
    model.save(args.out)
    _emit(
        {
            "model_dir": args.out,
            "vocab_size": len(model.vocab),
            "dims": model.dims,
            "joint_loss": model.joint_losses,
        }
    )
    return 0


def cmd_detect(args) -> int:
    pipeline = _pipeline(args, args.min_freq)
    text = sys.stdin.read()
    _emit(pipeline.analyze_text(text, args.topic))
    return 0


def cmd_candidates(args) -> int:
    from depolar.annealer import AnnealConfig

    pipeline = _pipeline(args)
    pipeline.check_topic(args.topic)
    pipeline.check_ideology(args.ideology, polar_only=True)
    k = args.k if args.k is not None else AnnealConfig().max_candidates
    got = pipeline.retriever.neutral_candidates(args.word, args.ideology, args.topic, k=k)
    _emit(
        {
            "word": got.source,
            "ideology": got.source_ideology,
            "topic": got.topic,
            "candidates": [
                {"word": e.word, "distance": e.distance, "pos": e.pos} for e in got.entries
            ],
        }
    )
    return 0


def _anneal_config(args) -> "AnnealConfig":
    from depolar.annealer import AnnealConfig

    overrides = _load_config_file(args.config).get("anneal", {})
    return _dataclass_from(
        AnnealConfig,
        overrides,
        max_positions=getattr(args, "max_positions", None),
        max_iterations=getattr(args, "max_iterations", None),
        seed=args.seed,
    )


def cmd_depolarize(args) -> int:
    pipeline = _pipeline(args, args.min_freq)
    text = sys.stdin.read()
    _emit(pipeline.depolarize_text(text, args.topic, args.ideology, _anneal_config(args)))
    return 0


def cmd_eval(args) -> int:
    from depolar.evalkit import report_from_counts
    from depolar.report import format_table, write_report

    if args.counts:
        with open(args.counts, encoding="utf-8") as fh:
            rows = json.load(fh)
        report = report_from_counts(rows)
    elif args.in_path:
        report = _eval_documents(args)
    else:
        raise DepolarError("eval needs --counts or --in")

    print(format_table(report))
    if args.out_dir:
        paths = write_report(report, args.out_dir)
        print(json.dumps(paths, sort_keys=True), file=sys.stderr)
    return 0


def _eval_documents(args):
    from depolar.corpus import load_jsonl
    from depolar.evalkit import ClassifierConfig, IdeologyClassifier, evaluate_depolarization, train_classifier

    pipeline = _pipeline(args, args.min_freq)
    if not args.classifier:
        raise DepolarError("eval --in needs --classifier (optionally fit via --train-classifier)")
    if args.train_corpus:
        clf_config = _dataclass_from(
            ClassifierConfig, _load_config_file(args.config).get("classifier", {}), seed=args.seed
        )
        classifier = train_classifier(load_jsonl(args.train_corpus), clf_config)
        classifier.save(args.classifier)
    else:
        classifier = IdeologyClassifier.load(args.classifier)

    corpus = load_jsonl(args.in_path, topics=pipeline.topics)
    articles = [a for a in corpus.articles if a.ideology in ("liberal", "conservative")]
    if args.limit:
        articles = articles[: args.limit]
    prepared = []
    for art in articles:
        merged, _ = pipeline.prepare_text(art.text)
        prepared.append(type(art)(art.id, art.ideology, art.topic, art.text, merged, art.paragraphs))
    return evaluate_depolarization(
        prepared,
        pipeline.depolarizer,
        classifier,
        _anneal_config(args),
        seed_base=args.seed or 0,
    )


def cmd_serve(args) -> int:
    import uvicorn

    from depolar.service import create_app

    pipeline = _pipeline(args, args.min_freq)
    app = create_app(pipeline, session_log=args.session_log, anneal_config=_anneal_config(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
