"""HTTP providers speaking the common ``/v1`` JSON wire format.

Both clients accept an injected ``httpx`` transport so tests can run
against ``httpx.MockTransport`` without sockets. Retries use exponential
backoff on timeouts, connection errors, and retryable status codes.
"""

from __future__ import annotations

import os
import time
from typing import Callable, Sequence

import httpx

from .audit import AuditLog
from .base import (
    DimensionMismatch,
    EmbeddingVector,
    EmptyResponseError,
    ProviderError,
    ProviderHTTPError,
    ProviderTimeout,
)

API_KEY_ENV = "PROVIDER_API_KEY"
RETRYABLE_STATUSES = frozenset({408, 429, 500, 502, 503, 504})


def _auth_headers(api_key: str | None) -> dict[str, str]:
    key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
    headers = {"Content-Type": "application/json"}
    if key:
        headers["Authorization"] = f"Bearer {key}"
    return headers


class _HttpClientBase:
    def __init__(
        self,
        base_url: str,
        model_id: str,
        *,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        transport: httpx.BaseTransport | None = None,
        audit: AuditLog | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model_id = model_id
        self.audit = audit
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers=_auth_headers(api_key),
            timeout=timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        """POST with retries; raises a ProviderError subclass on failure."""
        last_error: ProviderError | None = None
        for attempt in range(self._max_retries + 1):
            if attempt:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
            try:
                response = self._client.post(path, json=payload)
            except httpx.TimeoutException as exc:
                last_error = ProviderTimeout(f"{path}: {exc}")
                continue
            except httpx.TransportError as exc:
                last_error = ProviderError(f"{path}: {exc}")
                continue
            if response.status_code in RETRYABLE_STATUSES:
                last_error = ProviderHTTPError(
                    response.status_code, f"{path}: HTTP {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise ProviderHTTPError(
                    response.status_code,
                    f"{path}: HTTP {response.status_code}: {response.text[:200]}",
                )
            try:
                return response.json()
            except ValueError as exc:
                raise ProviderError(f"{path}: invalid JSON body: {exc}") from exc
        assert last_error is not None
        raise last_error


class HttpEmbedder(_HttpClientBase):
    """Embedding client for ``POST /v1/embeddings``."""

    def __init__(self, base_url: str, model_id: str, dims: int, **kwargs):
        super().__init__(base_url, model_id, **kwargs)
        if dims < 1:
            raise ValueError(f"dims must be >= 1, got {dims}")
        self.dims = dims

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            return []
        started = time.monotonic()
        ok = False
        error: str | None = None
        usage: dict = {}
        try:
            body = self._post(
                "/v1/embeddings", {"model": self.model_id, "input": list(texts)}
            )
            data = sorted(body.get("data", []), key=lambda d: d.get("index", 0))
            if len(data) != len(texts):
                raise ProviderError(
                    f"asked for {len(texts)} embeddings, got {len(data)}"
                )
            vectors = [[float(x) for x in item["embedding"]] for item in data]
            for vec in vectors:
                if len(vec) != self.dims:
                    raise DimensionMismatch(
                        f"provider returned {len(vec)} dims, expected {self.dims}"
                    )
            usage = body.get("usage", {}) or {}
            ok = True
            return vectors
        except ProviderError as exc:
            error = str(exc)
            raise
        finally:
            if self.audit is not None:
                self.audit.record(
                    kind="embed",
                    model=self.model_id,
                    prompt="\x1e".join(texts),
                    latency_ms=(time.monotonic() - started) * 1000.0,
                    ok=ok,
                    tokens_in=usage.get("prompt_tokens"),
                    tokens_out=None,
                    error=error,
                )


class HttpChatModel(_HttpClientBase):
    """Chat client for ``POST /v1/chat/completions``."""

    def __init__(self, base_url: str, model_id: str, *, temperature: float = 0.0, **kwargs):
        super().__init__(base_url, model_id, **kwargs)
        self.temperature = temperature

    def complete(self, prompt: str) -> str:
        started = time.monotonic()
        ok = False
        error: str | None = None
        usage: dict = {}
        try:
            body = self._post(
                "/v1/chat/completions",
                {
                    "model": self.model_id,
                    "temperature": self.temperature,
                    "messages": [{"role": "user", "content": prompt}],
                },
            )
            choices = body.get("choices") or []
            if not choices:
                raise EmptyResponseError("completion had no choices")
            content = (choices[0].get("message") or {}).get("content")
            if not content or not content.strip():
                raise EmptyResponseError("completion content was empty")
            usage = body.get("usage", {}) or {}
            ok = True
            return content
        except ProviderError as exc:
            error = str(exc)
            raise
        finally:
            if self.audit is not None:
                self.audit.record(
                    kind="chat",
                    model=self.model_id,
                    prompt=prompt,
                    latency_ms=(time.monotonic() - started) * 1000.0,
                    ok=ok,
                    tokens_in=usage.get("prompt_tokens"),
                    tokens_out=usage.get("completion_tokens"),
                    error=error,
                )
