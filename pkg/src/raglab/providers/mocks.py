"""Deterministic offline providers.

These stand in for remote embedding and chat backends in tests and demo
runs. Each one is a pure function of its inputs (plus ``model_id``), so
pipelines built on them are exactly reproducible and need no network.
"""

from __future__ import annotations

import hashlib
import re
from typing import Sequence

from ..markers import (
    ANSWER_CUES,
    CONTEXT_HEADER_PREFIX,
    QUESTION_CUES,
    find_marked,
    mark_answer,
    parse_tagged,
)
from ..tokens import iter_words, tokenize
from .base import EmbeddingVector

# Returned by the grounded echo model when it cannot support an answer
# from the supplied context.
NOT_FOUND_ANSWER = "Não encontrei a resposta no contexto fornecido."

_WORD_SPAN_RE = re.compile(r"\S+")


class MockEmbedder:
    """Feature-hashing embedder: token unigrams plus padded char trigrams.

    Every gram is hashed with SHA-256 (salted by ``model_id``) onto one of
    ``dims`` signed buckets; the accumulated vector is L2-normalized. The
    mapping is stable across runs, platforms, and processes.
    """

    def __init__(self, dims: int = 64, model_id: str = "mock-embedder-v1"):
        if dims < 1:
            raise ValueError(f"dims must be >= 1, got {dims}")
        self.dims = dims
        self.model_id = model_id

    def _grams(self, text: str) -> list[str]:
        grams: list[str] = []
        for tok in tokenize(text):
            grams.append(tok)
            padded = f"^{tok}$"
            for i in range(len(padded) - 2):
                grams.append(padded[i : i + 3])
        return grams

    def _embed_one(self, text: str) -> EmbeddingVector:
        vec = [0.0] * self.dims
        for gram in self._grams(text):
            digest = hashlib.sha256(f"{self.model_id}\x00{gram}".encode()).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dims
            vec[bucket] += 1.0 if digest[4] & 1 else -1.0
        norm = sum(x * x for x in vec) ** 0.5
        if norm > 0.0:
            vec = [x / norm for x in vec]
        return vec

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self._embed_one(t) for t in texts]


def _split_prompt(prompt: str) -> tuple[list[str], str, str]:
    """Break an answer prompt into (context_blocks, context_region, question).

    Blocks are the bodies under ``### `` headers; the question is the text
    after the last question cue line.
    """
    lines = prompt.splitlines()
    question = ""
    question_line = len(lines)
    for i in range(len(lines) - 1, -1, -1):
        stripped = lines[i].strip()
        for cue in QUESTION_CUES:
            if stripped.startswith(cue):
                question = stripped[len(cue):].strip()
                question_line = i
                break
        if question:
            break
    blocks: list[str] = []
    buf: list[str] = []
    in_block = False
    for line in lines[:question_line]:
        if line.startswith(CONTEXT_HEADER_PREFIX):
            if in_block:
                blocks.append("\n".join(buf).strip())
            in_block = True
            buf = []
        elif in_block:
            buf.append(line)
    if in_block:
        blocks.append("\n".join(buf).strip())
    return blocks, "\n\n".join(blocks), question


class EchoChatModel:
    """Chat model that answers with the question's guillemet-marked span.

    With ``grounded=True`` the marked span is only returned when it occurs
    in the prompt's context region; otherwise the model admits it found
    nothing. With ``grounded=False`` the span is returned unconditionally,
    which behaves like a model answering from memory. A prompt with no
    marked span gets the first context block back verbatim.
    """

    def __init__(self, grounded: bool = True, model_id: str | None = None):
        self.grounded = grounded
        self.model_id = model_id or ("echo-grounded" if grounded else "echo-free")

    def complete(self, prompt: str) -> str:
        blocks, context, question = _split_prompt(prompt)
        candidate = find_marked(question)
        if candidate is None:
            return blocks[0] if blocks else NOT_FOUND_ANSWER
        if self.grounded and candidate not in context:
            return NOT_FOUND_ANSWER
        return candidate


class JudgeChatModel:
    """Grading model for bracket-tagged judge prompts.

    Compares reference and candidate answers as token multisets: identical
    multisets are totally correct, a containment ratio of at least one half
    is mostly correct, anything else is incorrect.
    """

    model_id = "mock-judge-v1"

    def complete(self, prompt: str) -> str:
        sections = parse_tagged(prompt)
        reference = tokenize(sections.get("reference_answer", ""))
        candidate = tokenize(sections.get("candidate_answer", ""))
        if not candidate:
            return "Incorrect: the candidate answer is empty."
        if sorted(reference) == sorted(candidate):
            return "Totally correct: the candidate matches the reference."
        overlap = _multiset_overlap(reference, candidate)
        if overlap >= 0.5:
            return "Mostly correct: the candidate covers the reference in part."
        return "Incorrect: the candidate does not match the reference."


def _multiset_overlap(ref: list[str], cand: list[str]) -> float:
    if not ref or not cand:
        return 0.0
    counts: dict[str, int] = {}
    for tok in ref:
        counts[tok] = counts.get(tok, 0) + 1
    common = 0
    for tok in cand:
        if counts.get(tok, 0) > 0:
            counts[tok] -= 1
            common += 1
    return common / max(len(ref), len(cand))


class QAGenChatModel:
    """Question generator for bracket-tagged document prompts.

    Picks a deterministic window of the document as supporting text, uses
    its longest token as the answer, and phrases a question that embeds the
    answer between guillemets, so downstream echo models can ground it.
    """

    model_id = "mock-qa-gen-v1"

    WINDOW = 24

    def complete(self, prompt: str) -> str:
        sections = parse_tagged(prompt)
        document = sections.get("document", "")
        spans = list(_WORD_SPAN_RE.finditer(document))
        if not spans:
            return "Pergunta: ?\nResposta: ?\nTrecho: ?"
        digest = hashlib.sha256(document.encode()).digest()
        window = min(self.WINDOW, len(spans))
        start = int.from_bytes(digest[:4], "big") % (len(spans) - window + 1)
        sup_slice = document[spans[start].start() : spans[start + window - 1].end()]
        answer = _longest_word(sup_slice)
        anchor_end = min(start + 8, start + window) - 1
        anchor = document[spans[start].start() : spans[anchor_end].end()]
        # The question must stay a single line; the supporting excerpt is
        # kept verbatim so it remains a substring of the document.
        anchor = " ".join(anchor.split())
        question = (
            f'No trecho que começa com "{anchor}", '
            f"qual termo corresponde a {mark_answer(answer)}?"
        )
        return f"Pergunta: {question}\nResposta: {answer}\nTrecho: {sup_slice}"


def _longest_word(text: str) -> str:
    """Longest word token, original casing, first on ties."""
    best = ""
    for m in iter_words(text):
        if len(m.group()) > len(best):
            best = m.group()
    return best or text.strip()


class ParaphraseChatModel:
    """Rewords a tagged question while preserving its marked answer."""

    model_id = "mock-paraphrase-v1"

    def complete(self, prompt: str) -> str:
        question = parse_tagged(prompt).get("question", "").strip()
        if question.startswith("No trecho"):
            return "Considerando o trecho" + question[len("No trecho"):]
        return f"Dito de outra forma: {question}"


class IdentityChatModel:
    """Returns the tagged question verbatim; exercises paraphrase rejection."""

    model_id = "mock-identity-v1"

    def complete(self, prompt: str) -> str:
        return parse_tagged(prompt).get("question", "").strip()


class RefusalChatModel:
    """Produces unlabeled prose; exercises parser retry and failure paths."""

    model_id = "mock-refusal-v1"

    def complete(self, prompt: str) -> str:
        return "Sinto muito, mas não posso ajudar com esse pedido."


# Re-exported for tests that need the grounded fallback and cue strings.
__all__ = [
    "ANSWER_CUES",
    "EchoChatModel",
    "IdentityChatModel",
    "JudgeChatModel",
    "MockEmbedder",
    "NOT_FOUND_ANSWER",
    "ParaphraseChatModel",
    "QAGenChatModel",
    "RefusalChatModel",
]
