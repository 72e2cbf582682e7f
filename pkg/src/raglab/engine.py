"""Configuration-driven assembly of the question answering engine.

A single YAML file names the corpus, chunking parameters, retriever,
and model providers; this module turns it into a ready ``QAEngine`` that
the CLI and the HTTP service share.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import yaml

from .corpus import Chunk, ChunkingConfig, chunk_corpus, ingest
from .generation import TEMPLATES, GroundedAnswer, PromptTemplate, answer
from .providers import (
    AuditLog,
    ChatModel,
    EchoChatModel,
    Embedder,
    HttpChatModel,
    HttpEmbedder,
    IdentityChatModel,
    JudgeChatModel,
    MockEmbedder,
    ParaphraseChatModel,
    QAGenChatModel,
    RefusalChatModel,
)
from .retrieval import (
    BM25Retriever,
    RandomRetriever,
    Retriever,
    VectorRetriever,
    build_bm25,
    build_vector_index,
)

DEFAULT_K = 4


class EngineError(Exception):
    """Bad engine configuration."""


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise EngineError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise EngineError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise EngineError(f"config {path} must be a mapping, got {type(raw).__name__}")
    return raw


def build_embedder(spec: Mapping | None, audit: AuditLog | None = None) -> Embedder:
    spec = dict(spec or {})
    kind = spec.get("kind", "mock")
    if kind == "mock":
        return MockEmbedder(
            dims=int(spec.get("dims", 64)),
            model_id=spec.get("model_id", "mock-embedder-v1"),
        )
    if kind == "http":
        for key in ("base_url", "model_id", "dims"):
            if key not in spec:
                raise EngineError(f"http embedder config requires {key!r}")
        return HttpEmbedder(
            base_url=spec["base_url"],
            model_id=spec["model_id"],
            dims=int(spec["dims"]),
            api_key=spec.get("api_key"),
            timeout=float(spec.get("timeout", 60.0)),
            audit=audit,
        )
    raise EngineError(f"unknown embedder kind {kind!r}")


_MOCK_CHATS = {
    "echo": lambda: EchoChatModel(grounded=True),
    "echo-free": lambda: EchoChatModel(grounded=False),
    "judge": JudgeChatModel,
    "qa-gen": QAGenChatModel,
    "paraphrase": ParaphraseChatModel,
    "identity": IdentityChatModel,
    "refusal": RefusalChatModel,
}


def build_chat(spec: Mapping | None, audit: AuditLog | None = None) -> ChatModel:
    spec = dict(spec or {})
    kind = spec.get("kind", "echo")
    if kind in _MOCK_CHATS:
        return _MOCK_CHATS[kind]()
    if kind == "http":
        for key in ("base_url", "model_id"):
            if key not in spec:
                raise EngineError(f"http chat config requires {key!r}")
        return HttpChatModel(
            base_url=spec["base_url"],
            model_id=spec["model_id"],
            temperature=float(spec.get("temperature", 0.0)),
            api_key=spec.get("api_key"),
            timeout=float(spec.get("timeout", 60.0)),
            audit=audit,
        )
    raise EngineError(f"unknown chat kind {kind!r}")


def build_retriever(
    spec: Mapping | None,
    chunks: list[Chunk],
    embedder: Embedder | None = None,
    audit: AuditLog | None = None,
) -> Retriever:
    spec = dict(spec or {})
    kind = spec.get("kind", "bm25")
    if kind == "bm25":
        return BM25Retriever(build_bm25(chunks))
    if kind == "vector":
        if embedder is None:
            embedder = build_embedder(spec.get("embedder"), audit)
        index = build_vector_index(chunks, embedder, spec.get("similarity", "dot"))
        return VectorRetriever(index, embedder)
    if kind == "random":
        return RandomRetriever([c.id for c in chunks], seed=int(spec.get("seed", 0)))
    raise EngineError(f"unknown retriever kind {kind!r}")


@dataclass
class QAEngine:
    """Retriever, chunk store, and chat model behind one ask() call."""

    chunks: list[Chunk]
    retriever: Retriever
    chat: ChatModel
    template: PromptTemplate
    default_k: int = DEFAULT_K
    max_prompt_chars: int | None = None

    def __post_init__(self) -> None:
        self.chunk_lookup: dict[str, Chunk] = {c.id: c for c in self.chunks}

    @classmethod
    def from_config(cls, config: dict | str | Path, base_dir: str | Path | None = None) -> "QAEngine":
        if isinstance(config, (str, Path)):
            path = Path(config)
            if base_dir is None:
                base_dir = path.parent
            config = load_config(path)
        base = Path(base_dir) if base_dir is not None else Path.cwd()

        audit = None
        if config.get("audit_log"):
            audit = AuditLog(base / config["audit_log"])

        corpus_path = config.get("corpus")
        if not corpus_path:
            raise EngineError("config requires a 'corpus' path")
        docs = ingest(base / corpus_path)

        chunking = dict(config.get("chunking") or {})
        if "chunk_size" not in chunking:
            raise EngineError("config requires chunking.chunk_size")
        chunks = chunk_corpus(docs, ChunkingConfig(
            chunk_size=int(chunking["chunk_size"]),
            overlap=None if chunking.get("overlap") is None else int(chunking["overlap"]),
        ))

        retriever_spec = dict(config.get("retriever") or {})
        embedder = None
        if retriever_spec.get("kind") == "vector":
            embedder = build_embedder(config.get("embedder"), audit)
        retriever = build_retriever(retriever_spec, chunks, embedder, audit)

        chat = build_chat(config.get("chat"), audit)

        prompt_cfg = dict(config.get("prompt") or {})
        language = prompt_cfg.get("language", "pt")
        if language not in TEMPLATES:
            raise EngineError(f"unknown prompt language {language!r}")
        max_chars = prompt_cfg.get("max_prompt_chars")

        service_cfg = dict(config.get("service") or {})
        return cls(
            chunks=chunks,
            retriever=retriever,
            chat=chat,
            template=TEMPLATES[language],
            default_k=int(service_cfg.get("k", DEFAULT_K)),
            max_prompt_chars=None if max_chars is None else int(max_chars),
        )

    def ask(self, question: str, k: int | None = None) -> GroundedAnswer:
        """Answer one question with fresh retrieval; history plays no part."""
        depth = self.default_k if k is None else k
        return answer(
            question,
            self.retriever,
            self.chunk_lookup,
            self.chat,
            k=depth,
            template=self.template,
            max_prompt_chars=self.max_prompt_chars,
        )

    def search(self, query: str, k: int) -> list[dict]:
        """Ranked chunks for a query, shaped for the search API."""
        result = self.retriever.search(query, k)
        out = []
        for cid, score in result.ranked:
            chunk = self.chunk_lookup[cid]
            out.append({
                "chunk_id": cid,
                "title": chunk.title,
                "date": chunk.date,
                "score": score,
                "text": chunk.text,
            })
        return out
