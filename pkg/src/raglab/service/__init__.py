"""Chat service: durable session store and the HTTP API over the engine."""

from .store import Message, Session, SessionStore, StoreError, UnknownSession
from .app import create_app

__all__ = [
    "Message",
    "Session",
    "SessionStore",
    "StoreError",
    "UnknownSession",
    "create_app",
]
