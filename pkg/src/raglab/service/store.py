"""Durable chat sessions: one JSONL file per session, fsync on write.

Every acknowledged append survives a hard process kill: message lines are
flushed and fsynced before the call returns, and directory entries are
fsynced when session files are created or deleted. A write interrupted
mid-line leaves a truncated final line, which the loader drops.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator

_MICROSECOND = timedelta(microseconds=1)


class StoreError(Exception):
    """Corrupt session file or invalid store operation."""


class UnknownSession(StoreError):
    """Session id does not exist."""


@dataclass(frozen=True)
class Session:
    id: str
    title: str
    created_at: str


@dataclass(frozen=True)
class Message:
    id: str
    role: str
    text: str
    ts: str
    error: bool = False
    citations: tuple[dict, ...] = ()


@dataclass
class _SessionState:
    session: Session
    messages: list[Message] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock)
    last_ts: datetime | None = None


def _parse_ts(ts: str) -> datetime:
    return datetime.fromisoformat(ts)


class SessionStore:
    """Thread-safe session store over a directory of JSONL files."""

    ROLES = ("user", "assistant")

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._states: dict[str, _SessionState] = {}
        self._load_all()

    # -- loading ------------------------------------------------------------

    def _load_all(self) -> None:
        for path in sorted(self.root.glob("*.jsonl")):
            state = self._load_file(path)
            if state is not None:
                self._states[state.session.id] = state

    def _load_file(self, path: Path) -> _SessionState | None:
        raw = path.read_bytes()
        lines = raw.split(b"\n")
        # A crash can leave a torn final line; anything before it must
        # parse, or the file is corrupt rather than truncated.
        records: list[dict] = []
        good_end = 0  # bytes covered by intact lines
        needs_newline = False
        pos = 0
        last = len(lines) - 1
        for i, line in enumerate(lines):
            end = pos + len(line) + (1 if i < last else 0)
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    if i == last:
                        break
                    raise StoreError(
                        f"corrupt session file {path}: line {i + 1}: {exc}"
                    ) from exc
                needs_newline = i == last  # complete record, missing its "\n"
            pos = end
            good_end = end
        if good_end < len(raw) or needs_newline:
            # Scrub the torn tail (or terminate an unterminated final line)
            # so the next append starts on a fresh line.
            with path.open("r+b") as fh:
                fh.truncate(good_end)
                if needs_newline:
                    fh.seek(0, os.SEEK_END)
                    fh.write(b"\n")
                fh.flush()
                os.fsync(fh.fileno())
        if not records:
            return None
        head = records[0]
        if head.get("type") != "session":
            raise StoreError(f"{path} does not start with a session record")
        state = _SessionState(
            session=Session(id=head["id"], title=head["title"], created_at=head["created_at"])
        )
        for rec in records[1:]:
            if rec.get("type") != "message":
                raise StoreError(f"{path} has a non-message record after the header")
            msg = Message(
                id=rec["id"],
                role=rec["role"],
                text=rec["text"],
                ts=rec["ts"],
                error=bool(rec.get("error", False)),
                citations=tuple(rec.get("citations", ())),
            )
            state.messages.append(msg)
            state.last_ts = _parse_ts(msg.ts)
        if state.last_ts is None:
            state.last_ts = _parse_ts(state.session.created_at)
        return state

    # -- low-level io -------------------------------------------------------

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def _fsync_dir(self) -> None:
        fd = os.open(self.root, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)

    def _append_line(self, path: Path, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def _next_ts(self, state: _SessionState) -> str:
        """Strictly increasing per-session timestamp, microsecond floor."""
        now = datetime.now(timezone.utc)
        if state.last_ts is not None and now <= state.last_ts:
            now = state.last_ts + _MICROSECOND
        state.last_ts = now
        return now.isoformat()

    # -- public api ----------------------------------------------------------

    def create_session(self, title: str = "") -> Session:
        session = Session(
            id=uuid.uuid4().hex,
            title=title.strip() or "Nova conversa",
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        state = _SessionState(session=session, last_ts=_parse_ts(session.created_at))
        with self._registry_lock:
            path = self._path(session.id)
            self._append_line(path, {
                "type": "session",
                "id": session.id,
                "title": session.title,
                "created_at": session.created_at,
            })
            self._fsync_dir()
            self._states[session.id] = state
        return session

    def list_sessions(self) -> list[Session]:
        with self._registry_lock:
            states = list(self._states.values())
        return sorted(
            (s.session for s in states), key=lambda s: (s.created_at, s.id)
        )

    def _state(self, session_id: str) -> _SessionState:
        with self._registry_lock:
            state = self._states.get(session_id)
        if state is None:
            raise UnknownSession(f"no such session: {session_id}")
        return state

    def get_session(self, session_id: str) -> Session:
        return self._state(session_id).session

    def delete_session(self, session_id: str) -> None:
        state = self._state(session_id)
        with state.lock:
            with self._registry_lock:
                self._states.pop(session_id, None)
            path = self._path(session_id)
            if path.exists():
                path.unlink()
                self._fsync_dir()

    def message_count(self, session_id: str) -> int:
        state = self._state(session_id)
        with state.lock:
            return len(state.messages)

    def messages(self, session_id: str) -> list[Message]:
        state = self._state(session_id)
        with state.lock:
            return list(state.messages)

    def append_message(
        self,
        session_id: str,
        role: str,
        text: str,
        citations: tuple[dict, ...] = (),
        error: bool = False,
    ) -> Message:
        """Durably append one message; returns it once fsynced."""
        if role not in self.ROLES:
            raise StoreError(f"role must be one of {self.ROLES}, got {role!r}")
        state = self._state(session_id)
        with state.lock:
            msg = Message(
                id=uuid.uuid4().hex,
                role=role,
                text=text,
                ts=self._next_ts(state),
                error=error,
                citations=tuple(citations),
            )
            self._append_line(self._path(session_id), {
                "type": "message",
                "id": msg.id,
                "role": msg.role,
                "text": msg.text,
                "ts": msg.ts,
                "error": msg.error,
                "citations": list(msg.citations),
            })
            state.messages.append(msg)
            return msg

    @contextmanager
    def session_lock(self, session_id: str) -> Iterator[None]:
        """Serialize a multi-step operation against one session.

        Readers and writers all take this lock, so a user/assistant pair
        appended under it is observed atomically.
        """
        state = self._state(session_id)
        with state.lock:
            yield
