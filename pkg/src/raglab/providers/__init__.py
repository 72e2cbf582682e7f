"""Model providers: embedding and chat backends plus offline mocks.

The rest of the package depends only on the ``Embedder`` and ``ChatModel``
protocols, so HTTP-backed providers and deterministic mocks are fully
interchangeable in pipelines and tests.
"""

from .base import (
    ChatExchange,
    ChatModel,
    DimensionMismatch,
    Embedder,
    EmbeddingVector,
    EmptyResponseError,
    ProviderError,
    ProviderHTTPError,
    ProviderTimeout,
)
from .audit import AuditLog
from .http import HttpChatModel, HttpEmbedder
from .mocks import (
    EchoChatModel,
    IdentityChatModel,
    JudgeChatModel,
    MockEmbedder,
    ParaphraseChatModel,
    QAGenChatModel,
    RefusalChatModel,
)

__all__ = [
    "AuditLog",
    "ChatExchange",
    "ChatModel",
    "DimensionMismatch",
    "EchoChatModel",
    "Embedder",
    "EmbeddingVector",
    "EmptyResponseError",
    "HttpChatModel",
    "HttpEmbedder",
    "IdentityChatModel",
    "JudgeChatModel",
    "MockEmbedder",
    "ParaphraseChatModel",
    "ProviderError",
    "ProviderHTTPError",
    "ProviderTimeout",
    "QAGenChatModel",
    "RefusalChatModel",
]
