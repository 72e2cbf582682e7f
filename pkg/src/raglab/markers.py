"""Textual conventions shared by prompt builders and the offline mocks.

Prompts built here are plain text; these helpers pin down the few
structural conventions (context headers, question cues, guillemet answer
marks, bracket-tagged sections) so the deterministic mock models can parse
prompts the same way the templates write them.
"""

from __future__ import annotations

import re

# Guillemets mark the expected answer inside synthetic questions. They are
# punctuation to the tokenizer, so marked questions tokenize identically to
# unmarked ones.
ANSWER_OPEN = "«"
ANSWER_CLOSE = "»"

# Context blocks in answer prompts start with this header prefix.
CONTEXT_HEADER_PREFIX = "### "

# The question line of an answer prompt starts with one of these cues.
QUESTION_CUES = ("Pergunta:", "Question:")
ANSWER_CUES = ("Resposta:", "Answer:")

_MARKED_RE = re.compile(re.escape(ANSWER_OPEN) + r"(.*?)" + re.escape(ANSWER_CLOSE), re.DOTALL)


def mark_answer(text: str) -> str:
    return f"{ANSWER_OPEN}{text}{ANSWER_CLOSE}"


def find_marked(text: str) -> str | None:
    """First guillemet-marked span, or None."""
    m = _MARKED_RE.search(text)
    return m.group(1) if m else None


def strip_marks(text: str) -> str:
    return text.replace(ANSWER_OPEN, "").replace(ANSWER_CLOSE, "")


# ---------------------------------------------------------------------------
# Bracket-tagged sections, used by the judge / generation / paraphrase
# prompts: "[name]\n...content...\n[next]\n...\n[end]".
# ---------------------------------------------------------------------------

END_TAG = "[end]"

_TAG_LINE_RE = re.compile(r"^\[([a-z_]+)\]\s*$")


def tagged_block(name: str, content: str) -> str:
    return f"[{name}]\n{content}"


def parse_tagged(text: str) -> dict[str, str]:
    """Split bracket-tagged prompt text into {section_name: content}.

    Content runs from the line after a ``[name]`` line to the next tag line
    (``[end]`` closes the last section). Text before the first tag is
    ignored; duplicate tags keep the last occurrence.
    """
    sections: dict[str, str] = {}
    current: str | None = None
    buf: list[str] = []
    for line in text.splitlines():
        m = _TAG_LINE_RE.match(line.strip())
        if m:
            if current is not None:
                sections[current] = "\n".join(buf).strip()
            name = m.group(1)
            current = None if name == "end" else name
            buf = []
        elif current is not None:
            buf.append(line)
    if current is not None:
        sections[current] = "\n".join(buf).strip()
    return sections
