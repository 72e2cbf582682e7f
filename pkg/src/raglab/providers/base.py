"""Provider protocols, shared types, and the provider error hierarchy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

EmbeddingVector = list[float]


class ProviderError(Exception):
    """Base class for anything a model backend can do wrong."""


class ProviderTimeout(ProviderError):
    """Backend did not answer within the configured deadline."""


class ProviderHTTPError(ProviderError):
    """Backend answered with a non-success HTTP status."""

    def __init__(self, status_code: int, message: str):
        super().__init__(message)
        self.status_code = status_code


class EmptyResponseError(ProviderError):
    """Backend returned a syntactically valid but empty completion."""


class DimensionMismatch(ProviderError):
    """Embedding vector length disagrees with the declared dims."""


@dataclass(frozen=True)
class ChatExchange:
    """One completed chat call, for audit trails and debugging."""

    prompt: str
    completion: str
    model_id: str
    latency_ms: float
    tokens_in: int | None = None
    tokens_out: int | None = None


@runtime_checkable
class Embedder(Protocol):
    """Maps text batches to fixed-width float vectors."""

    model_id: str
    dims: int

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


@runtime_checkable
class ChatModel(Protocol):
    """Single-prompt chat completion."""

    model_id: str

    def complete(self, prompt: str) -> str: ...
