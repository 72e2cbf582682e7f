"""Synthetic QA dataset construction from a chunked corpus.

A chat model turns sampled chunks into (question, answer, supporting
excerpt) triples; each triple is parsed from loosely labeled model output,
validated against its source chunk, and bound to that chunk as gold. A
second model pass adds a paraphrased question variant.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Chunk, corpus_fingerprint
from .markers import strip_marks
from .providers.base import ChatModel
from .tokens import word_count

MIN_SOURCE_WORDS = 50

# Flags attached to items that need human attention.
FLAG_SUPPORT_NOT_VERBATIM = "support_not_verbatim"
FLAG_OVERLAP_AMBIGUITY = "overlap_ambiguity"
FLAG_PARAPHRASE_FAILED = "paraphrase_failed"
FLAG_REBIND_FAILED = "rebind_failed"


class DatasetError(Exception):
    """Invalid dataset request or corrupt dataset file."""


class ParseError(DatasetError):
    """Model output did not contain the three labeled elements."""


class ChunkRejected(DatasetError):
    """A sampled chunk produced no usable QA item."""

    def __init__(self, chunk_id: str, reason: str):
        super().__init__(f"chunk {chunk_id}: {reason}")
        self.chunk_id = chunk_id
        self.reason = reason


class ParaphraseError(DatasetError):
    """Paraphrase came back verbatim twice."""


@dataclass(frozen=True)
class QAItem:
    """One evaluation case: question, reference answer, gold binding."""

    id: str
    question: str
    answer: str
    supporting_text: str
    gold_chunk_id: str
    gold_doc_id: str
    paraphrase: str | None = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class QADataset:
    """QA items plus the fingerprint of the corpus they were built from."""

    items: tuple[QAItem, ...]
    corpus_fingerprint: str
    generator_model_id: str

    def __len__(self) -> int:
        return len(self.items)


def dataset_fingerprint(items: Sequence[QAItem]) -> str:
    """Content hash of the items themselves (order-independent)."""
    h = hashlib.sha256()
    for item in sorted(items, key=lambda i: i.id):
        for part in (item.id, item.question, item.answer,
                     item.supporting_text, item.gold_chunk_id):
            h.update(part.encode("utf-8"))
            h.update(b"\x1e")
        h.update(b"\x1f")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Prompts
# ---------------------------------------------------------------------------

QA_GEN_INSTRUCTIONS = (
    "Leia o documento abaixo e produza exatamente três linhas rotuladas:\n"
    "Pergunta: uma pergunta respondível apenas com o documento\n"
    "Resposta: a resposta curta e direta\n"
    "Trecho: o trecho do documento, copiado literalmente, que sustenta a resposta"
)

PARAPHRASE_INSTRUCTIONS = (
    "Reescreva a pergunta abaixo com outras palavras, mantendo o sentido. "
    "Preserve intacto qualquer texto entre « e ». Responda só com a pergunta reescrita."
)


def qa_generation_prompt(chunk: Chunk) -> str:
    return f"{QA_GEN_INSTRUCTIONS}\n\n[document]\n{chunk.text}\n[end]"


def paraphrase_prompt(question: str) -> str:
    return f"{PARAPHRASE_INSTRUCTIONS}\n\n[question]\n{question}\n[end]"


# ---------------------------------------------------------------------------
# Parsing the three labeled elements
# ---------------------------------------------------------------------------

_FIELD_ALIASES = {
    "question": ("pergunta", "questão", "questao", "question"),
    "answer": ("resposta", "answer"),
    "support": (
        "trecho de apoio",
        "texto de apoio",
        "trecho",
        "supporting text",
        "supporting excerpt",
        "excerpt",
        "evidence",
    ),
}

_ALIAS_TO_FIELD = {
    alias: field for field, aliases in _FIELD_ALIASES.items() for alias in aliases
}

# Longest aliases first so "trecho de apoio" wins over "trecho".
_ALIAS_ALT = "|".join(
    re.escape(a) for a in sorted(_ALIAS_TO_FIELD, key=len, reverse=True)
)

# Tolerates list bullets, numbering, markdown bold, and ":" or dash
# separators around the label.
_LABEL_LINE_RE = re.compile(
    rf"^\s*(?:[-*•]\s*)?(?:\d+\s*[.)]\s*)?(?:\*\*)?\s*(?P<label>{_ALIAS_ALT})"
    rf"\s*(?:\*\*)?\s*[:\-–—]\s*(?:\*\*)?\s*(?P<value>.*)$",
    re.IGNORECASE,
)

_QUOTE_PAIRS = (('"', '"'), ("“", "”"), ("'", "'"))


def _unquote(value: str) -> str:
    value = value.strip()
    for open_q, close_q in _QUOTE_PAIRS:
        if len(value) >= 2 and value.startswith(open_q) and value.endswith(close_q):
            return value[1:-1].strip()
    return value


def parse_three_elements(text: str) -> dict[str, str]:
    """Extract question, answer, and supporting excerpt from model output.

    Labels may appear in Portuguese or English, with bullets, numbering,
    bold markers, or dash separators; values may span multiple lines, up
    to the next labeled line. Raises :class:`ParseError` naming whichever
    fields are missing or empty.
    """
    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.splitlines():
        m = _LABEL_LINE_RE.match(line)
        if m:
            current = _ALIAS_TO_FIELD[m.group("label").lower()]
            fields[current] = [m.group("value")]
        elif current is not None:
            fields[current].append(line)
    result = {
        name: _unquote("\n".join(parts).strip()) for name, parts in fields.items()
    }
    missing = [f for f in ("question", "answer", "support") if not result.get(f)]
    if missing:
        raise ParseError(f"missing or empty fields: {', '.join(missing)}")
    return {f: result[f] for f in ("question", "answer", "support")}


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _support_flags(chunk: Chunk, support: str) -> tuple[str, ...]:
    """Verbatim and overlap-placement checks for a supporting excerpt.

    An excerpt that extends past the chunk core into the shared overlap
    region also occurs in a neighboring chunk, so its gold binding is
    ambiguous and a human should adjudicate.
    """
    pos = chunk.text.find(support)
    if pos < 0:
        return (FLAG_SUPPORT_NOT_VERBATIM,)
    abs_start = chunk.text_start + pos
    abs_end = abs_start + len(support)
    if abs_start < chunk.core_start or abs_end > chunk.core_end:
        return (FLAG_OVERLAP_AMBIGUITY,)
    return ()


def generate_qa(chunk: Chunk, chat: ChatModel, item_id: str,
                min_words: int = MIN_SOURCE_WORDS) -> QAItem:
    """Generate one QA item from a chunk, or raise :class:`ChunkRejected`.

    Chunks below ``min_words`` word tokens are rejected outright; output
    that fails to parse gets exactly one regeneration attempt.
    """
    if word_count(chunk.text) < min_words:
        raise ChunkRejected(chunk.id, "too_short")
    elements: dict[str, str] | None = None
    for _ in range(2):
        try:
            elements = parse_three_elements(chat.complete(qa_generation_prompt(chunk)))
            break
        except ParseError:
            continue
    if elements is None:
        raise ChunkRejected(chunk.id, "unparseable")
    return QAItem(
        id=item_id,
        question=elements["question"],
        answer=elements["answer"],
        supporting_text=elements["support"],
        gold_chunk_id=chunk.id,
        gold_doc_id=chunk.doc_id,
        flags=_support_flags(chunk, elements["support"]),
    )


def sample_chunks(chunks: Sequence[Chunk], n: int, seed: int,
                  min_words: int = MIN_SOURCE_WORDS) -> list[Chunk]:
    """Uniform sample of n QA-eligible chunks (at least ``min_words`` words)."""
    eligible = [c for c in chunks if word_count(c.text) >= min_words]
    if n > len(eligible):
        raise DatasetError(
            f"asked for {n} chunks but only {len(eligible)} have >= {min_words} words"
        )
    return random.Random(seed).sample(eligible, n)


def generate_dataset(
    chunks: Sequence[Chunk],
    chat: ChatModel,
    n: int,
    seed: int,
    min_words: int = MIN_SOURCE_WORDS,
) -> tuple[QADataset, dict]:
    """Sample chunks and generate one QA item per chunk.

    Returns the dataset plus a report dict accounting for every sampled
    chunk: item counts, per-reason rejections, and per-flag counts.
    """
    sampled = sample_chunks(chunks, n, seed, min_words)
    items: list[QAItem] = []
    rejected: list[dict] = []
    for i, chunk in enumerate(sampled, start=1):
        try:
            items.append(generate_qa(chunk, chat, f"qa-{i:04d}", min_words))
        except ChunkRejected as exc:
            rejected.append({"chunk_id": exc.chunk_id, "reason": exc.reason})
    flag_counts: dict[str, int] = {}
    for item in items:
        for flag in item.flags:
            flag_counts[flag] = flag_counts.get(flag, 0) + 1
    dataset = QADataset(
        items=tuple(items),
        corpus_fingerprint=corpus_fingerprint(chunks),
        generator_model_id=chat.model_id,
    )
    report = {
        "sampled": len(sampled),
        "generated": len(items),
        "rejected": rejected,
        "flag_counts": flag_counts,
        "seed": seed,
        "min_words": min_words,
        "dataset_fingerprint": dataset_fingerprint(items),
    }
    return dataset, report


def paraphrase_question(question: str, chat: ChatModel) -> str:
    """One paraphrase of a question; retries once if it comes back verbatim."""
    for _ in range(2):
        candidate = chat.complete(paraphrase_prompt(question)).strip()
        if candidate and candidate != question.strip():
            return candidate
    raise ParaphraseError("paraphrase was identical to the original twice")


def add_paraphrases(dataset: QADataset, chat: ChatModel) -> tuple[QADataset, list[str]]:
    """Attach a paraphrase to every item.

    Items whose paraphrase fails keep ``paraphrase=None`` and gain the
    ``paraphrase_failed`` flag; their ids are returned for the manifest.
    """
    out: list[QAItem] = []
    failed: list[str] = []
    for item in dataset.items:
        try:
            out.append(replace(item, paraphrase=paraphrase_question(item.question, chat)))
        except ParaphraseError:
            failed.append(item.id)
            out.append(replace(item, flags=item.flags + (FLAG_PARAPHRASE_FAILED,)))
    return replace(dataset, items=tuple(out)), failed


# ---------------------------------------------------------------------------
# Validation and gold rebinding
# ---------------------------------------------------------------------------


def validate_dataset(dataset: QADataset, chunks: Sequence[Chunk]) -> list[dict]:
    """Structural checks; returns one issue dict per problem found."""
    issues: list[dict] = []
    by_id: dict[str, Chunk] = {c.id: c for c in chunks}
    seen: set[str] = set()
    for item in dataset.items:
        if item.id in seen:
            issues.append({"item_id": item.id, "issue": "duplicate_item_id"})
        seen.add(item.id)
        for field in ("question", "answer", "supporting_text"):
            if not getattr(item, field).strip():
                issues.append({"item_id": item.id, "issue": f"empty_{field}"})
        gold = by_id.get(item.gold_chunk_id)
        if gold is None:
            issues.append({"item_id": item.id, "issue": "unknown_gold_chunk"})
        else:
            if gold.doc_id != item.gold_doc_id:
                issues.append({"item_id": item.id, "issue": "gold_doc_mismatch"})
            if item.supporting_text and item.supporting_text not in gold.text:
                issues.append({"item_id": item.id, "issue": "support_not_in_gold"})
    if corpus_fingerprint(chunks) != dataset.corpus_fingerprint:
        issues.append({"item_id": None, "issue": "corpus_fingerprint_mismatch"})
    return issues


def rebind_gold(dataset: QADataset, chunks: Sequence[Chunk]) -> QADataset:
    """Re-point gold chunk ids at a differently-chunked corpus.

    For each item, the new gold is the first chunk (by seq) of the same
    document whose text contains the supporting excerpt. Items whose
    excerpt no longer occurs anywhere keep their old binding and gain the
    ``rebind_failed`` flag. The returned dataset carries the new corpus
    fingerprint.
    """
    by_doc: dict[str, list[Chunk]] = {}
    for c in chunks:
        by_doc.setdefault(c.doc_id, []).append(c)
    for doc_chunks in by_doc.values():
        doc_chunks.sort(key=lambda c: c.seq)
    placement_flags = {
        FLAG_SUPPORT_NOT_VERBATIM, FLAG_OVERLAP_AMBIGUITY, FLAG_REBIND_FAILED,
    }
    out: list[QAItem] = []
    for item in dataset.items:
        kept = tuple(f for f in item.flags if f not in placement_flags)
        candidates = [
            c for c in by_doc.get(item.gold_doc_id, ())
            if item.supporting_text and item.supporting_text in c.text
        ]
        if candidates:
            new_gold = candidates[0]
            out.append(replace(
                item,
                gold_chunk_id=new_gold.id,
                flags=kept + _support_flags(new_gold, item.supporting_text),
            ))
        else:
            out.append(replace(item, flags=kept + (FLAG_REBIND_FAILED,)))
    return QADataset(
        items=tuple(out),
        corpus_fingerprint=corpus_fingerprint(chunks),
        generator_model_id=dataset.generator_model_id,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_dataset(dataset: QADataset, path: str | Path) -> None:
    """Write the dataset as JSONL: one header line, then one item per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "corpus_fingerprint": dataset.corpus_fingerprint,
            "generator_model_id": dataset.generator_model_id,
            "item_count": len(dataset.items),
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for item in dataset.items:
            rec = {
                "id": item.id,
                "question": item.question,
                "answer": item.answer,
                "supporting_text": item.supporting_text,
                "gold_chunk_id": item.gold_chunk_id,
                "gold_doc_id": item.gold_doc_id,
                "paraphrase": item.paraphrase,
                "flags": list(item.flags),
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_dataset(path: str | Path) -> QADataset:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise DatasetError(f"bad dataset header in {path}: {exc}") from exc
        items: list[QAItem] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                items.append(QAItem(
                    id=rec["id"],
                    question=rec["question"],
                    answer=rec["answer"],
                    supporting_text=rec["supporting_text"],
                    gold_chunk_id=rec["gold_chunk_id"],
                    gold_doc_id=rec["gold_doc_id"],
                    paraphrase=rec.get("paraphrase"),
                    flags=tuple(rec.get("flags", ())),
                ))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetError(f"bad item at line {lineno} of {path}: {exc}") from exc
    if header.get("item_count") not in (None, len(items)):
        raise DatasetError(
            f"{path} header promises {header['item_count']} items, found {len(items)}"
        )
    return QADataset(
        items=tuple(items),
        corpus_fingerprint=header.get("corpus_fingerprint", ""),
        generator_model_id=header.get("generator_model_id", ""),
    )


def write_review_sheet(dataset: QADataset, path: str | Path) -> None:
    """CSV worksheet for human review; markers are stripped for readability."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "id", "question", "answer", "supporting_text",
            "gold_chunk_id", "flags", "verdict",
        ])
        for item in dataset.items:
            writer.writerow([
                item.id,
                strip_marks(item.question),
                item.answer,
                item.supporting_text,
                item.gold_chunk_id,
                ";".join(item.flags),
                "",
            ])
