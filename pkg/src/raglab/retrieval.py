"""Chunk ranking: BM25 inverted index, flat vector index, random baseline.

All three retrievers produce the same ``RetrievalResult`` shape and share
one total tie-break rule (descending score, then ascending chunk id), so
any two runs over identical inputs yield identical rankings.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .corpus import Chunk, CorpusError, FingerprintMismatch, corpus_fingerprint
from .tokens import tokenize

# Okapi defaults for the term-frequency saturation and length normalization
# parameters; scoring uses the non-negative ln(1 + ...) IDF variant so a
# score of zero always means "no query term present".
BM25_K1 = 1.2
BM25_B = 0.75


class RetrievalError(Exception):
    """Invalid retrieval request or inconsistent index."""


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked (chunk_id, score) list, descending by score.

    ``requested_k`` is the depth the caller asked for and ``corpus_size``
    the number of indexed chunks; together they let evaluation code tell a
    deliberately shallow ranking from one that is simply exhausted.
    """

    ranked: list[tuple[str, float]]
    retriever_id: str
    requested_k: int
    corpus_size: int | None = None

    def chunk_ids(self) -> list[str]:
        return [cid for cid, _ in self.ranked]


class Retriever(Protocol):
    """Minimal surface the generation pipeline and service need."""

    retriever_id: str

    def search(self, query: str, k: int) -> RetrievalResult: ...


def _rank(scores: dict[str, float], k: int, retriever_id: str, corpus_size: int) -> RetrievalResult:
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return RetrievalResult(
        ranked=ordered[:k],
        retriever_id=retriever_id,
        requested_k=k,
        corpus_size=corpus_size,
    )


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------


@dataclass
class InvertedIndex:
    """Postings plus the document statistics BM25 needs."""

    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int
    doc_freq: dict[str, int]


def build_bm25(chunks: Sequence[Chunk]) -> InvertedIndex:
    """Index chunk texts for BM25 scoring."""
    if not chunks:
        raise RetrievalError("cannot build a BM25 index over zero chunks")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for chunk in chunks:
        tokens = tokenize(chunk.text)
        doc_lengths[chunk.id] = len(tokens)
        tf: dict[str, int] = {}
        for tok in tokens:
            tf[tok] = tf.get(tok, 0) + 1
        for tok, count in tf.items():
            postings.setdefault(tok, []).append((chunk.id, count))
    n = len(doc_lengths)
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=sum(doc_lengths.values()) / n,
        doc_count=n,
        doc_freq={tok: len(plist) for tok, plist in postings.items()},
    )


def _idf(index: InvertedIndex, term: str) -> float:
    df = index.doc_freq.get(term, 0)
    return math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))


def _term_weight(index: InvertedIndex, term: str, tf: int, length: int,
                 k1: float, b: float) -> float:
    norm = k1 * (1.0 - b + b * length / index.avg_doc_length)
    return _idf(index, term) * tf * (k1 + 1.0) / (tf + norm)


def bm25_score(index: InvertedIndex, query: Sequence[str], chunk_id: str,
               k1: float = BM25_K1, b: float = BM25_B) -> float:
    """BM25 score of one chunk for a tokenized query.

    Each query token occurrence contributes
    ``IDF(t) * tf*(k1+1) / (tf + k1*(1 - b + b*len/avglen))``; terms absent
    from the chunk contribute zero.
    """
    if chunk_id not in index.doc_lengths:
        raise RetrievalError(f"unknown chunk id {chunk_id!r}")
    length = index.doc_lengths[chunk_id]
    score = 0.0
    for term in query:
        tf = 0
        for cid, count in index.postings.get(term, ()):
            if cid == chunk_id:
                tf = count
                break
        if tf:
            score += _term_weight(index, term, tf, length, k1, b)
    return score


def search_bm25(index: InvertedIndex, query: str, k: int,
                k1: float = BM25_K1, b: float = BM25_B) -> RetrievalResult:
    """Top-k chunks by BM25 score; zero-score chunks are excluded."""
    if k < 1:
        raise RetrievalError(f"k must be >= 1, got {k}")
    scores: dict[str, float] = {}
    # Outer loop over query tokens keeps each chunk's additions in query
    # order, so sums are bit-identical to a naive per-chunk evaluation.
    for term in tokenize(query):
        for cid, tf in index.postings.get(term, ()):
            w = _term_weight(index, term, tf, index.doc_lengths[cid], k1, b)
            scores[cid] = scores.get(cid, 0.0) + w
    return _rank(scores, k, "bm25", index.doc_count)


class BM25Retriever:
    """Retriever facade over an inverted index."""

    retriever_id = "bm25"

    def __init__(self, index: InvertedIndex):
        self.index = index

    def search(self, query: str, k: int) -> RetrievalResult:
        return search_bm25(self.index, query, k)


# ---------------------------------------------------------------------------
# Dense vector index
# ---------------------------------------------------------------------------

SIMILARITIES = ("dot", "cosine")


@dataclass
class VectorIndex:
    """Flat (exhaustive-scan) index of chunk embeddings."""

    entries: list[tuple[str, list[float]]]
    dims: int
    similarity: str
    model_id: str
    corpus_fingerprint: str


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


def _cosine(a: Sequence[float], b: Sequence[float]) -> float:
    na = math.sqrt(_dot(a, a))
    nb = math.sqrt(_dot(b, b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return _dot(a, b) / (na * nb)


def build_vector_index(chunks: Sequence[Chunk], embedder, similarity: str = "dot") -> VectorIndex:
    """Embed every chunk's full text (core plus overlaps) into a flat index."""
    if not chunks:
        raise RetrievalError("cannot build a vector index over zero chunks")
    if similarity not in SIMILARITIES:
        raise RetrievalError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
    ids = [c.id for c in chunks]
    if len(set(ids)) != len(ids):
        raise RetrievalError("duplicate chunk ids in vector index input")
    vectors = embedder.embed([c.text for c in chunks])
    dims = embedder.dims
    for cid, vec in zip(ids, vectors):
        if len(vec) != dims:
            raise RetrievalError(
                f"embedding for chunk {cid!r} has {len(vec)} dims, expected {dims}"
            )
    return VectorIndex(
        entries=list(zip(ids, vectors)),
        dims=dims,
        similarity=similarity,
        model_id=embedder.model_id,
        corpus_fingerprint=corpus_fingerprint(chunks),
    )


def search_vector(index: VectorIndex, query: str, embedder, k: int) -> RetrievalResult:
    """Exhaustive scan of the index with dot-product or cosine scoring."""
    if k < 1:
        raise RetrievalError(f"k must be >= 1, got {k}")
    qvec = embedder.embed([query])[0]
    if len(qvec) != index.dims:
        raise RetrievalError(
            f"query embedding has {len(qvec)} dims, index has {index.dims}"
        )
    score = _cosine if index.similarity == "cosine" else _dot
    scores = {cid: score(qvec, vec) for cid, vec in index.entries}
    return _rank(scores, k, f"vector-{index.similarity}", len(index.entries))


class VectorRetriever:
    """Retriever facade binding a vector index to its query embedder."""

    def __init__(self, index: VectorIndex, embedder):
        self.index = index
        self.embedder = embedder
        self.retriever_id = f"vector-{index.similarity}"

    def search(self, query: str, k: int) -> RetrievalResult:
        return search_vector(self.index, query, self.embedder, k)


def save_vector_index(index: VectorIndex, path: str | Path) -> None:
    """Persist the index as JSONL: one header line, then one entry per chunk."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "dims": index.dims,
            "similarity": index.similarity,
            "model_id": index.model_id,
            "corpus_fingerprint": index.corpus_fingerprint,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for cid, vec in index.entries:
            fh.write(json.dumps({"chunk_id": cid, "vector": vec}) + "\n")


def load_vector_index(path: str | Path, chunks: Sequence[Chunk]) -> VectorIndex:
    """Load a persisted index, refusing one built over a different corpus."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise RetrievalError(f"bad vector index header in {path}: {exc}") from exc
        entries: list[tuple[str, list[float]]] = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            entries.append((rec["chunk_id"], rec["vector"]))
    expected = corpus_fingerprint(chunks)
    if header["corpus_fingerprint"] != expected:
        raise FingerprintMismatch(
            f"index {path} was built over corpus {header['corpus_fingerprint'][:12]}..., "
            f"loaded chunks hash to {expected[:12]}..."
        )
    return VectorIndex(
        entries=entries,
        dims=header["dims"],
        similarity=header["similarity"],
        model_id=header["model_id"],
        corpus_fingerprint=header["corpus_fingerprint"],
    )


# ---------------------------------------------------------------------------
# Random baseline
# ---------------------------------------------------------------------------


def search_random(chunk_ids: Sequence[str], k: int, rng_seed: int) -> RetrievalResult:
    """Uniform sample of k chunk ids without replacement; all scores zero."""
    if k < 1:
        raise RetrievalError(f"k must be >= 1, got {k}")
    if k > len(chunk_ids):
        raise RetrievalError(f"cannot sample {k} of {len(chunk_ids)} chunks")
    rng = random.Random(rng_seed)
    sample = rng.sample(list(chunk_ids), k)
    return RetrievalResult(
        ranked=[(cid, 0.0) for cid in sample],
        retriever_id="random",
        requested_k=k,
        corpus_size=len(chunk_ids),
    )


class RandomRetriever:
    """Random-baseline retriever; the seed advances per query for variety
    while staying reproducible from the initial seed."""

    retriever_id = "random"

    def __init__(self, chunk_ids: Sequence[str], seed: int):
        self.chunk_ids = list(chunk_ids)
        self.seed = seed
        self._calls = 0

    def search(self, query: str, k: int) -> RetrievalResult:
        result = search_random(self.chunk_ids, min(k, len(self.chunk_ids)), self.seed + self._calls)
        self._calls += 1
        return result
