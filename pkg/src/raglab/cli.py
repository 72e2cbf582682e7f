"""Command-line interface.

Every command that writes an artifact also writes a manifest JSON next to
it recording the tool version, input file hashes, and the exact
configuration, so any output can be traced back to what produced it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import (
    ChunkingConfig,
    chunk_corpus,
    corpus_fingerprint,
    corpus_stats,
    ingest,
    load_chunks,
    write_chunks,
    write_documents,
)
from .dataset import (
    add_paraphrases,
    generate_dataset,
    load_dataset,
    rebind_gold,
    save_dataset,
    validate_dataset,
    write_review_sheet,
)
from .engine import QAEngine, build_chat, build_embedder, build_retriever
from .evaluation import (
    accuracy_curve,
    load_human_scores,
    load_report,
    metric_correlation,
    run_experiment,
    save_report,
    write_accuracy_curve,
    write_records_csv,
)
from .generation import TEMPLATES
from .retrieval import VectorRetriever, load_vector_index, build_vector_index, save_vector_index


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(
    manifest_path: Path,
    command: str,
    inputs: dict[str, Path],
    config: dict,
    outputs: list[str],
) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "inputs": {
            name: {"path": str(p), "sha256": _file_sha256(p)}
            for name, p in inputs.items()
        },
        "config": config,
        "outputs": outputs,
    }
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def _manifest_for(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _chat_spec(kind: str, url: str | None, model: str | None) -> dict:
    spec: dict = {"kind": kind}
    if url:
        spec["base_url"] = url
    if model:
        spec["model_id"] = model
    return spec


def _embedder_spec(kind: str, url: str | None, model: str | None, dims: int) -> dict:
    spec: dict = {"kind": kind, "dims": dims}
    if url:
        spec["base_url"] = url
    if model:
        spec["model_id"] = model
    return spec


def _add_chat_flags(p: argparse.ArgumentParser, name: str, default_kind: str) -> None:
    p.add_argument(f"--{name}", default=default_kind,
                   help=f"{name} model kind (mock name or 'http')")
    p.add_argument(f"--{name}-url", default=None, help=f"{name} base URL (http kind)")
    p.add_argument(f"--{name}-model", default=None, help=f"{name} model id (http kind)")


def _add_embedder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embedder", default="mock", help="embedder kind: mock or http")
    p.add_argument("--embedder-url", default=None)
    p.add_argument("--embedder-model", default=None)
    p.add_argument("--dims", type=int, default=64, help="embedding width")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    docs = ingest(args.input)
    out = Path(args.out)
    write_documents(docs, out)
    _write_manifest(
        _manifest_for(out), "ingest",
        {"input": Path(args.input)}, {}, [str(out)],
    )
    print(f"ingested {len(docs)} documents -> {out}")
    return 0


def _cmd_chunk(args: argparse.Namespace) -> int:
    docs = ingest(args.input)
    cfg = ChunkingConfig(chunk_size=args.chunk_size, overlap=args.overlap)
    chunks = chunk_corpus(docs, cfg)
    out = Path(args.out)
    write_chunks(chunks, out)
    stats = corpus_stats(chunks)
    _write_manifest(
        _manifest_for(out), "chunk",
        {"input": Path(args.input)},
        {
            "chunk_size": cfg.chunk_size,
            "overlap": cfg.overlap,
            "corpus_fingerprint": corpus_fingerprint(chunks),
        },
        [str(out)],
    )
    print(
        f"wrote {stats.chunk_count} chunks -> {out} "
        f"(words per chunk: min {stats.min_words}, max {stats.max_words}, "
        f"avg {stats.avg_words:.2f})"
    )
    return 0


def _cmd_index(args: argparse.Namespace) -> int:
    chunks = load_chunks(args.chunks)
    embedder = build_embedder(
        _embedder_spec(args.embedder, args.embedder_url, args.embedder_model, args.dims)
    )
    index = build_vector_index(chunks, embedder, args.similarity)
    out = Path(args.out)
    save_vector_index(index, out)
    _write_manifest(
        _manifest_for(out), "index",
        {"chunks": Path(args.chunks)},
        {
            "similarity": args.similarity,
            "dims": index.dims,
            "model_id": index.model_id,
            "corpus_fingerprint": index.corpus_fingerprint,
        },
        [str(out)],
    )
    print(f"indexed {len(index.entries)} chunks -> {out}")
    return 0


def _build_cli_retriever(args: argparse.Namespace, chunks) -> object:
    if args.retriever == "vector" and getattr(args, "index", None):
        index = load_vector_index(args.index, chunks)
        embedder = build_embedder(
            _embedder_spec(args.embedder, args.embedder_url, args.embedder_model, index.dims)
        )
        if embedder.model_id != index.model_id:
            raise SystemExit(
                f"index was built with embedder {index.model_id!r}, "
                f"queries would use {embedder.model_id!r}"
            )
        return VectorRetriever(index, embedder)
    spec: dict = {"kind": args.retriever, "seed": getattr(args, "seed", 0)}
    if args.retriever == "vector":
        spec["similarity"] = getattr(args, "similarity", "dot")
        embedder = build_embedder(
            _embedder_spec(args.embedder, args.embedder_url, args.embedder_model, args.dims)
        )
        return build_retriever(spec, chunks, embedder)
    return build_retriever(spec, chunks)


def _cmd_search(args: argparse.Namespace) -> int:
    chunks = load_chunks(args.chunks)
    retriever = _build_cli_retriever(args, chunks)
    result = retriever.search(args.query, args.k)
    by_id = {c.id: c for c in chunks}
    rows = [
        {
            "chunk_id": cid,
            "score": score,
            "title": by_id[cid].title,
            "date": by_id[cid].date,
            "text": by_id[cid].text,
        }
        for cid, score in result.ranked
    ]
    print(json.dumps({"retriever": result.retriever_id, "results": rows},
                     ensure_ascii=False, indent=2))
    return 0


def _cmd_ask(args: argparse.Namespace) -> int:
    engine = QAEngine.from_config(args.config)
    grounded = engine.ask(args.question, k=args.k)
    print(json.dumps(
        {
            "answer": grounded.answer,
            "retriever": grounded.retriever_id,
            "model": grounded.model_id,
            "citations": [
                {"chunk_id": c.chunk_id, "title": c.title, "date": c.date, "score": c.score}
                for c in grounded.citations
            ],
        },
        ensure_ascii=False, indent=2,
    ))
    return 0


def _cmd_gen_dataset(args: argparse.Namespace) -> int:
    chunks = load_chunks(args.chunks)
    chat = build_chat(_chat_spec(args.chat, args.chat_url, args.chat_model))
    dataset, report = generate_dataset(chunks, chat, n=args.n, seed=args.seed,
                                       min_words=args.min_words)
    out = Path(args.out)
    save_dataset(dataset, out)
    issues = validate_dataset(dataset, chunks)
    if args.review_sheet:
        write_review_sheet(dataset, Path(args.review_sheet))
    _write_manifest(
        _manifest_for(out), "gen-dataset",
        {"chunks": Path(args.chunks)},
        {**report, "chat": args.chat, "validation_issues": issues},
        [str(out)] + ([args.review_sheet] if args.review_sheet else []),
    )
    print(f"generated {len(dataset.items)} items "
          f"({len(report['rejected'])} chunks rejected) -> {out}")
    return 0


def _cmd_paraphrase(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    chat = build_chat(_chat_spec(args.chat, args.chat_url, args.chat_model))
    updated, failed = add_paraphrases(dataset, chat)
    out = Path(args.out)
    save_dataset(updated, out)
    _write_manifest(
        _manifest_for(out), "paraphrase",
        {"dataset": Path(args.dataset)},
        {"chat": args.chat, "failed_item_ids": failed},
        [str(out)],
    )
    print(f"paraphrased {len(updated.items) - len(failed)} of {len(updated.items)} "
          f"items -> {out}")
    return 0


def _cmd_eval_retrieval(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.dataset)
    retrievers = [r.strip() for r in args.retrievers.split(",") if r.strip()]
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for variant in variants:
        if variant not in ("original", "paraphrase"):
            raise SystemExit(f"unknown variant {variant!r}")

    outputs: list[str] = []
    inputs: dict[str, Path] = {"dataset": Path(args.dataset)}

    def run_curves(chunks, size_label: str, source_dataset) -> None:
        for kind in retrievers:
            ns = argparse.Namespace(
                retriever=kind, index=None, seed=args.seed,
                similarity=args.similarity, embedder=args.embedder,
                embedder_url=args.embedder_url, embedder_model=args.embedder_model,
                dims=args.dims,
            )
            retriever = _build_cli_retriever(ns, chunks)
            for variant in variants:
                curve = accuracy_curve(
                    source_dataset, retriever, max_k=args.max_k,
                    use_paraphrase=(variant == "paraphrase"),
                )
                name = f"accuracy_{kind}{size_label}_{variant}.csv"
                write_accuracy_curve(curve, out_dir / name)
                outputs.append(str(out_dir / name))

    if args.sweep:
        if not args.corpus:
            raise SystemExit("--sweep requires --corpus")
        sizes = [int(s) for s in args.chunk_sizes.split(",") if s.strip()]
        docs = ingest(args.corpus)
        inputs["corpus"] = Path(args.corpus)
        for size in sizes:
            chunks = chunk_corpus(docs, ChunkingConfig(chunk_size=size))
            rebound = rebind_gold(dataset, chunks)
            run_curves(chunks, f"_{size}", rebound)
    else:
        if not args.chunks:
            raise SystemExit("eval-retrieval requires --chunks (or --sweep with --corpus)")
        chunks = load_chunks(args.chunks)
        inputs["chunks"] = Path(args.chunks)
        run_curves(chunks, "", dataset)

    _write_manifest(
        out_dir / "manifest.json", "eval-retrieval", inputs,
        {
            "retrievers": retrievers,
            "variants": variants,
            "max_k": args.max_k,
            "sweep": bool(args.sweep),
            "chunk_sizes": args.chunk_sizes if args.sweep else None,
        },
        outputs,
    )
    print(f"wrote {len(outputs)} accuracy curves -> {out_dir}")
    return 0


def _cmd_eval_generation(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.dataset)
    chunks = load_chunks(args.chunks)
    chunk_lookup = {c.id: c for c in chunks}
    ks = [int(k) for k in args.ks.split(",") if k.strip()]

    retriever = None
    if any(k > 0 for k in ks):
        retriever = _build_cli_retriever(args, chunks)
    chat = build_chat(_chat_spec(args.chat, args.chat_url, args.chat_model))
    judge = build_chat(_chat_spec(args.judge, args.judge_url, args.judge_model))
    embedder = build_embedder(
        _embedder_spec(args.embedder, args.embedder_url, args.embedder_model, args.dims)
    )

    reports = run_experiment(
        dataset, retriever, chunk_lookup, chat, judge, embedder, ks,
        template=TEMPLATES[args.language],
        max_prompt_chars=args.max_prompt_chars,
        use_paraphrase=(args.variant == "paraphrase"),
    )
    outputs: list[str] = []
    for report in reports:
        report_path = out_dir / f"report_k{report.k}.json"
        records_path = out_dir / f"records_k{report.k}.csv"
        save_report(report, report_path)
        write_records_csv(report, records_path)
        outputs += [str(report_path), str(records_path)]
        agg = report.aggregates["all"]
        print(
            f"k={report.k}: f1 {agg['mean_f1']:.2f}, cosine {agg['mean_cosine']:.2f}, "
            f"judge {agg['mean_judge']:.2f} (n={agg['count']})"
        )
    _write_manifest(
        out_dir / "manifest.json", "eval-generation",
        {"dataset": Path(args.dataset), "chunks": Path(args.chunks)},
        {
            "ks": ks,
            "retriever": args.retriever,
            "chat": args.chat,
            "judge": args.judge,
            "embedder": args.embedder,
            "variant": args.variant,
            "language": args.language,
            "max_prompt_chars": args.max_prompt_chars,
        },
        outputs,
    )
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    records = report["records"]
    columns: dict[str, list[float]] = {
        "f1": [], "cosine": [], "judge": [],
    }
    human = load_human_scores(args.human) if args.human else None
    if human is not None:
        columns["human"] = []
    for rec in records:
        if human is not None:
            if rec["item_id"] not in human:
                continue
            columns["human"].append(human[rec["item_id"]])
        columns["f1"].append(rec["f1"])
        columns["cosine"].append(rec["cosine"])
        columns["judge"].append(rec["judge_points"])
    matrix = metric_correlation(columns)
    out = Path(args.out)
    out.write_text(json.dumps(matrix, indent=2) + "\n", encoding="utf-8")
    inputs = {"report": Path(args.report)}
    if args.human:
        inputs["human"] = Path(args.human)
    _write_manifest(_manifest_for(out), "correlate", inputs,
                    {"n": len(columns["f1"])}, [str(out)])
    print(f"correlation matrix over {len(columns['f1'])} items -> {out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    engine = QAEngine.from_config(args.config)
    store = SessionStore(args.sessions_dir)
    app = create_app(engine, store, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raglab",
        description="Retrieval-grounded question answering over a document corpus.",
    )
    parser.add_argument("--version", action="version", version=f"raglab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a JSONL corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("chunk", help="split documents into overlapping chunks")
    p.add_argument("--input", required=True)
    p.add_argument("--chunk-size", type=int, required=True)
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_chunk)

    p = sub.add_parser("index", help="build and persist a vector index")
    p.add_argument("--chunks", required=True)
    p.add_argument("--similarity", choices=("dot", "cosine"), default="dot")
    _add_embedder_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="query a chunked corpus")
    p.add_argument("--chunks", required=True)
    p.add_argument("--retriever", choices=("bm25", "vector", "random"), default="bm25")
    p.add_argument("--index", default=None, help="persisted vector index to reuse")
    p.add_argument("--similarity", choices=("dot", "cosine"), default="dot")
    p.add_argument("--seed", type=int, default=0)
    _add_embedder_flags(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("ask", help="answer one question via an engine config")
    p.add_argument("--config", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=_cmd_ask)

    p = sub.add_parser("gen-dataset", help="generate a QA dataset from chunks")
    p.add_argument("--chunks", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-words", type=int, default=50)
    _add_chat_flags(p, "chat", "qa-gen")
    p.add_argument("--review-sheet", default=None, help="also write a review CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("paraphrase", help="add question paraphrases to a dataset")
    p.add_argument("--dataset", required=True)
    _add_chat_flags(p, "chat", "paraphrase")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_paraphrase)

    p = sub.add_parser("eval-retrieval", help="top-k accuracy curves")
    p.add_argument("--dataset", required=True)
    p.add_argument("--chunks", default=None)
    p.add_argument("--retrievers", default="bm25")
    p.add_argument("--variants", default="original")
    p.add_argument("--max-k", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--similarity", choices=("dot", "cosine"), default="dot")
    _add_embedder_flags(p)
    p.add_argument("--sweep", action="store_true",
                   help="re-chunk the corpus at several sizes and rebind gold chunks")
    p.add_argument("--corpus", default=None)
    p.add_argument("--chunk-sizes", default="2000,4000,8000")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_eval_retrieval)

    p = sub.add_parser("eval-generation", help="answer and grade the dataset at several k")
    p.add_argument("--dataset", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--ks", default="0,1,3,5,8")
    p.add_argument("--retriever", choices=("bm25", "vector", "random"), default="bm25")
    p.add_argument("--index", default=None)
    p.add_argument("--similarity", choices=("dot", "cosine"), default="dot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=("original", "paraphrase"), default="original")
    p.add_argument("--language", choices=sorted(TEMPLATES), default="pt")
    p.add_argument("--max-prompt-chars", type=int, default=None)
    _add_chat_flags(p, "chat", "echo")
    _add_chat_flags(p, "judge", "judge")
    _add_embedder_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_eval_generation)

    p = sub.add_parser("correlate", help="Pearson matrix over metric columns")
    p.add_argument("--report", required=True)
    p.add_argument("--human", default=None, help="item_id,score CSV of human grades")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("serve", help="run the chat service")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sessions-dir", default="sessions")
    p.add_argument("--static", default=None, help="directory with the web UI build")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
