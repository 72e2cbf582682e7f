"""Shared fixtures: a small synthetic news corpus and its derived objects.

The corpus generator produces Portuguese-flavoured word salad with digits,
accents, and punctuation, which is enough to exercise tokenization,
chunk boundaries, and retrieval without shipping any real documents.
"""

from __future__ import annotations

import random

import pytest

from raglab.corpus import Chunk, ChunkingConfig, Document, chunk_corpus

WORDS = [
    "governo", "inflação", "banco", "central", "taxa", "juros", "mercado",
    "produto", "interno", "bruto", "crescimento", "economia", "real",
    "dólar", "exportação", "importação", "balança", "comercial", "déficit",
    "superávit", "arrecadação", "imposto", "reforma", "tributária",
    "investimento", "indústria", "varejo", "consumo", "famílias", "renda",
]


def make_documents(n_docs: int, seed: int, words_per_doc: int = 300) -> list[Document]:
    """Synthetic documents with distinctive per-position vocabulary."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        parts = []
        for _ in range(words_per_doc):
            w = rng.choice(WORDS)
            # Numeric suffixes make most tokens rare, so retrieval has
            # real signal instead of uniform word soup.
            parts.append(f"{w}{rng.randint(0, 9999)}")
            if rng.random() < 0.1:
                parts.append(f"R${rng.randint(1, 99)},{rng.randint(0, 9)}")
        body = " ".join(parts)
        docs.append(Document(
            id=f"doc{i:03d}",
            title=f"Notícia {i}",
            date=f"2024-{(i % 12) + 1:02d}-{(i % 27) + 1:02d}",
            body=body,
        ))
    return docs


@pytest.fixture(scope="session")
def documents() -> list[Document]:
    return make_documents(8, seed=101)


@pytest.fixture(scope="session")
def chunks(documents) -> list[Chunk]:
    return chunk_corpus(documents, ChunkingConfig(chunk_size=600))


@pytest.fixture(scope="session")
def chunk_lookup(chunks) -> dict[str, Chunk]:
    return {c.id: c for c in chunks}
