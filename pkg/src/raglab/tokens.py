"""Shared word tokenizer.

One tokenizer feeds everything that counts or compares words: BM25
indexing and scoring, corpus word statistics, and token-overlap F1.
Keeping a single definition means "word" always agrees across modules.

The segmenter is deliberately plain: Unicode-aware word characters
(letters, digits, combining marks; underscore excluded), lowercased,
punctuation dropped, no stemming and no stopword removal. Its exact
output on tricky strings is pinned by a golden fixture in the tests.
"""

from __future__ import annotations

import re
from typing import Iterator

# [^\W_] = \w minus underscore; str patterns are Unicode-aware, so
# accented letters ("são") stay intact while "R$8.6" splits to r, 8, 6.
_WORD_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and segment ``text`` into word tokens."""
    return _WORD_RE.findall(text.lower())


def iter_words(text: str) -> Iterator[re.Match[str]]:
    """Word-token regex matches over the raw text, case preserved."""
    return _WORD_RE.finditer(text)


def word_count(text: str) -> int:
    """Number of word tokens in ``text``."""
    return len(tokenize(text))
