"""Grounded answer generation: context prompt assembly plus the chat call.

The prompt layout is the contract between this module and the offline
mocks: a preamble, one ``### title (date)`` block per context chunk, then
a cued question line and a bare answer cue.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Chunk
from .markers import CONTEXT_HEADER_PREFIX
from .providers.base import ChatModel
from .retrieval import RetrievalResult, Retriever


class GenerationError(Exception):
    """Invalid generation request."""


@dataclass(frozen=True)
class PromptTemplate:
    """Language-specific prompt skeleton.

    ``version()`` hashes the content, so any wording change shows up in
    run manifests as a new template version.
    """

    language: str
    preamble: str
    question_cue: str
    answer_cue: str

    def version(self) -> str:
        payload = "\x00".join(
            (self.language, self.preamble, self.question_cue, self.answer_cue)
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


PT_TEMPLATE = PromptTemplate(
    language="pt",
    preamble=(
        "Responda à pergunta usando somente os trechos de contexto abaixo. "
        "Se a resposta não estiver no contexto, responda que não a encontrou."
    ),
    question_cue="Pergunta:",
    answer_cue="Resposta:",
)

EN_TEMPLATE = PromptTemplate(
    language="en",
    preamble=(
        "Answer the question using only the context excerpts below. "
        "If the answer is not in the context, say you could not find it."
    ),
    question_cue="Question:",
    answer_cue="Answer:",
)

TEMPLATES = {"pt": PT_TEMPLATE, "en": EN_TEMPLATE}


@dataclass(frozen=True)
class Citation:
    """One context chunk as it entered the prompt, with its ranking score."""

    chunk_id: str
    title: str
    date: str
    score: float
    text: str


@dataclass(frozen=True)
class GroundedAnswer:
    """Model answer plus everything needed to audit how it was produced."""

    question: str
    answer: str
    citations: list[Citation]
    retriever_id: str
    model_id: str
    prompt_version: str
    prompt: str


def _context_block(chunk: Chunk) -> str:
    return f"{CONTEXT_HEADER_PREFIX}{chunk.title} ({chunk.date})\n{chunk.text}"


def build_prompt(
    question: str,
    chunks: Sequence[Chunk],
    template: PromptTemplate = PT_TEMPLATE,
    max_prompt_chars: int | None = None,
) -> tuple[str, list[Chunk]]:
    """Assemble the answer prompt; returns (prompt, chunks actually used).

    When ``max_prompt_chars`` is set, whole chunks are dropped from the
    tail of the ranking until the prompt fits. The preamble and question
    are never truncated.
    """
    if "\n" in question:
        question = " ".join(question.split())
    blocks = [_context_block(c) for c in chunks]
    tail = f"{template.question_cue} {question}\n{template.answer_cue}"

    def render(nblocks: int) -> str:
        parts = [template.preamble, *blocks[:nblocks], tail]
        return "\n\n".join(parts)

    keep = len(blocks)
    if max_prompt_chars is not None:
        if max_prompt_chars < 1:
            raise GenerationError(f"max_prompt_chars must be >= 1, got {max_prompt_chars}")
        while keep > 0 and len(render(keep)) > max_prompt_chars:
            keep -= 1
    return render(keep), list(chunks[:keep])


def answer_with_chunks(
    question: str,
    ranked: Sequence[tuple[Chunk, float]],
    chat: ChatModel,
    retriever_id: str,
    template: PromptTemplate = PT_TEMPLATE,
    max_prompt_chars: int | None = None,
) -> GroundedAnswer:
    """Answer from an already-ranked chunk list (retrieval done elsewhere)."""
    chunks = [c for c, _ in ranked]
    scores = {c.id: s for c, s in ranked}
    prompt, used = build_prompt(question, chunks, template, max_prompt_chars)
    completion = chat.complete(prompt)
    citations = [
        Citation(
            chunk_id=c.id,
            title=c.title,
            date=c.date,
            score=scores[c.id],
            text=c.text,
        )
        for c in used
    ]
    return GroundedAnswer(
        question=question,
        answer=completion.strip(),
        citations=citations,
        retriever_id=retriever_id,
        model_id=chat.model_id,
        prompt_version=template.version(),
        prompt=prompt,
    )


def answer(
    question: str,
    retriever: Retriever | None,
    chunk_lookup: Mapping[str, Chunk],
    chat: ChatModel,
    k: int,
    template: PromptTemplate = PT_TEMPLATE,
    max_prompt_chars: int | None = None,
) -> GroundedAnswer:
    """Retrieve k chunks for the question, then answer from them.

    ``k == 0`` (or no retriever) skips retrieval entirely and asks the
    model with an empty context; this is the no-retrieval baseline.
    """
    if k < 0:
        raise GenerationError(f"k must be >= 0, got {k}")
    ranked: list[tuple[Chunk, float]] = []
    retriever_id = "none"
    if k > 0 and retriever is not None:
        result: RetrievalResult = retriever.search(question, k)
        retriever_id = result.retriever_id
        for cid, score in result.ranked:
            if cid not in chunk_lookup:
                raise GenerationError(f"retriever returned unknown chunk id {cid!r}")
            ranked.append((chunk_lookup[cid], score))
    return answer_with_chunks(
        question, ranked, chat, retriever_id, template, max_prompt_chars
    )
