"""Retrieval-augmented question answering over a document corpus.

Pipeline stages: ingest documents, split them into overlapping character
chunks, rank chunks against queries (BM25, dense embeddings, or a random
baseline), generate grounded answers through a pluggable LLM provider,
synthesize QA evaluation datasets, and score the whole pipeline with
top-k accuracy, token F1, embedding cosine, and an LLM judge.
"""

__version__ = "0.1.0"
