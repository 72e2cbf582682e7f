"""Document ingestion, overlapping character chunking, and corpus statistics.

Documents arrive as JSON Lines (one object per line); each document body
is split into fixed-size character windows whose cores tile the body
exactly, extended on both sides by overlap text borrowed from the
neighboring chunks. Offsets count Unicode scalar values, not bytes, so
accented text chunks correctly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable

from .tokens import word_count


class CorpusError(Exception):
    """Malformed corpus input or invalid chunking request."""


class FingerprintMismatch(CorpusError):
    """An artifact was built against a different chunked corpus."""


@dataclass(frozen=True)
class Document:
    """One source document: identity, display metadata, and full body text."""

    id: str
    title: str
    date: str
    body: str
    source_url: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.body:
            raise CorpusError(f"document {self.id!r} has an empty body")


@dataclass(frozen=True)
class ChunkingConfig:
    """Chunk core size and per-side overlap, both in characters.

    When ``overlap`` is omitted it defaults to one tenth of the chunk
    size (integer division).
    """

    chunk_size: int
    overlap: int | None = None

    def __post_init__(self) -> None:
        if self.chunk_size <= 0:
            raise CorpusError(f"chunk_size must be positive, got {self.chunk_size}")
        if self.overlap is None:
            object.__setattr__(self, "overlap", self.chunk_size // 10)
        if not 0 <= self.overlap < self.chunk_size:
            raise CorpusError(
                f"overlap must satisfy 0 <= overlap < chunk_size, got {self.overlap}"
            )


@dataclass(frozen=True)
class Chunk:
    """A retrieval unit: one core window of a document plus edge overlaps.

    ``core_start``/``core_end`` delimit the non-overlapping core within the
    document body; ``text`` is the verbatim substring from
    ``core_start - |overlap_pre|`` to ``core_end + |overlap_post|``, and
    ``text_start`` is that substring's absolute offset in the body, so any
    position inside ``text`` maps back to a document position.
    """

    id: str
    doc_id: str
    seq: int
    core_start: int
    core_end: int
    text_start: int
    text: str
    title: str
    date: str


@dataclass(frozen=True)
class CorpusStats:
    chunk_count: int
    min_words: int
    max_words: int
    avg_words: float


def chunk_id(doc_id: str, seq: int) -> str:
    """Stable chunk identifier: ``<doc_id>#<seq>``."""
    return f"{doc_id}#{seq}"


def ingest(path: str | Path, format: str = "jsonl") -> list[Document]:
    """Load a document corpus from disk.

    Only the JSONL format is supported: UTF-8, one object per line with
    keys ``id``, ``title``, ``date``, ``body`` and optional ``source_url``.
    Blank lines are skipped. Errors name the offending record.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format: {format!r}")
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc

    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"record at line {lineno} is not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise CorpusError(f"record at line {lineno} is not a JSON object")
        for key in ("id", "title", "date", "body"):
            if key not in record:
                raise CorpusError(f"record at line {lineno} is missing {key!r}")
        try:
            date.fromisoformat(str(record["date"])[:10])
        except ValueError as exc:
            raise CorpusError(
                f"record at line {lineno} has a non-ISO date: {record['date']!r}"
            ) from exc
        try:
            doc = Document(
                id=str(record["id"]),
                title=str(record["title"]),
                date=str(record["date"]),
                body=str(record["body"]),
                source_url=record.get("source_url"),
            )
        except CorpusError as exc:
            raise CorpusError(f"record at line {lineno}: {exc}") from exc
        if doc.id in seen:
            raise CorpusError(f"record at line {lineno}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    return docs


def chunk_document(doc: Document, cfg: ChunkingConfig) -> list[Chunk]:
    """Split one document into overlapping chunks.

    Cores are hard character cuts at exact multiples of ``chunk_size``;
    they tile the body with no gaps. Each chunk's text additionally takes
    up to ``overlap`` characters from each neighboring core, clipped at
    the document edges (never padded).
    """
    body = doc.body
    size = cfg.chunk_size
    overlap = cfg.overlap or 0
    chunks: list[Chunk] = []
    for seq, core_start in enumerate(range(0, len(body), size)):
        core_end = min(core_start + size, len(body))
        pre = min(overlap, core_start)
        post = min(overlap, len(body) - core_end)
        chunks.append(
            Chunk(
                id=chunk_id(doc.id, seq),
                doc_id=doc.id,
                seq=seq,
                core_start=core_start,
                core_end=core_end,
                text_start=core_start - pre,
                text=body[core_start - pre : core_end + post],
                title=doc.title,
                date=doc.date,
            )
        )
    return chunks


def chunk_corpus(docs: Iterable[Document], cfg: ChunkingConfig) -> list[Chunk]:
    """Chunk every document, keeping (doc order, seq) ordering."""
    out: list[Chunk] = []
    for doc in docs:
        out.extend(chunk_document(doc, cfg))
    return out


def corpus_stats(chunks: list[Chunk]) -> CorpusStats:
    """Word-count statistics over chunk texts, via the shared tokenizer."""
    if not chunks:
        raise CorpusError("cannot compute statistics of an empty chunk list")
    counts = [word_count(c.text) for c in chunks]
    return CorpusStats(
        chunk_count=len(counts),
        min_words=min(counts),
        max_words=max(counts),
        avg_words=sum(counts) / len(counts),
    )


def corpus_fingerprint(chunks: Iterable[Chunk]) -> str:
    """Content hash binding datasets, indices, and reports to one chunked corpus."""
    h = hashlib.sha256()
    for chunk in sorted(chunks, key=lambda c: (c.doc_id, c.seq)):
        h.update(chunk.id.encode("utf-8"))
        h.update(b"\x1e")
        h.update(hashlib.sha256(chunk.text.encode("utf-8")).digest())
        h.update(b"\x1f")
    return h.hexdigest()


def write_chunks(chunks: Iterable[Chunk], path: str | Path) -> None:
    """Dump chunks as JSONL for inspection and downstream commands."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for c in chunks:
            fh.write(
                json.dumps(
                    {
                        "id": c.id,
                        "doc_id": c.doc_id,
                        "seq": c.seq,
                        "core_start": c.core_start,
                        "core_end": c.core_end,
                        "text_start": c.text_start,
                        "text": c.text,
                        "title": c.title,
                        "date": c.date,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_chunks(path: str | Path) -> list[Chunk]:
    """Load a chunk dump written by :func:`write_chunks`."""
    path = Path(path)
    chunks: list[Chunk] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                chunks.append(
                    Chunk(
                        id=rec["id"],
                        doc_id=rec["doc_id"],
                        seq=rec["seq"],
                        core_start=rec["core_start"],
                        core_end=rec["core_end"],
                        text_start=rec["text_start"],
                        text=rec["text"],
                        title=rec["title"],
                        date=rec["date"],
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusError(f"bad chunk record at line {lineno} of {path}: {exc}") from exc
    return chunks


def write_documents(docs: Iterable[Document], path: str | Path) -> None:
    """Write documents back out as corpus JSONL."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for d in docs:
            rec: dict = {"id": d.id, "title": d.title, "date": d.date, "body": d.body}
            if d.source_url is not None:
                rec["source_url"] = d.source_url
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
