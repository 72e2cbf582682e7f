"""Append-only JSONL audit trail for provider calls.

Records enough to account for usage and reproduce issues (hashes, not
payloads: prompts may contain private corpus text).
"""

from __future__ import annotations

import hashlib
import json
import threading
from datetime import datetime, timezone
from pathlib import Path


class AuditLog:
    """Thread-safe JSONL writer; one record per provider call."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def record(
        self,
        kind: str,
        model: str,
        prompt: str,
        latency_ms: float,
        ok: bool,
        tokens_in: int | None = None,
        tokens_out: int | None = None,
        error: str | None = None,
    ) -> None:
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "kind": kind,
            "model": model,
            "prompt_sha256": hashlib.sha256(prompt.encode()).hexdigest(),
            "latency_ms": round(latency_ms, 3),
            "tokens_in": tokens_in,
            "tokens_out": tokens_out,
            "ok": ok,
        }
        if error is not None:
            entry["error"] = error
        line = json.dumps(entry, ensure_ascii=False)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
