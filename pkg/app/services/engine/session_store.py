from __future__ import annotations

import logging
import threading
from typing import Iterable, Optional

from app.schemas.crypto import ServerTrapdoor
from app.schemas.snapshot import SessionEntry

logger = logging.getLogger(__name__)


class SessionStore:
    """
    Active Roles: requester id → server trapdoors of activated roles.

    Entries are compared by value (T is deterministic per role), so a repeated
    activation never adds a second entry. With a TTL, expired entries stop
    counting immediately and are dropped by purge_expired().
    """

    def __init__(self, ttl_seconds: Optional[float] = None) -> None:
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, list[SessionEntry]] = {}
        self.lock = threading.RLock()

    @staticmethod
    def _live(entry: SessionEntry, now: float) -> bool:
        return entry.expires_at is None or entry.expires_at > now

    def activate(self, requester_id: str, role: ServerTrapdoor, now: float) -> bool:
        """Returns False when the role was already active."""
        expires = now + self.ttl_seconds if self.ttl_seconds else None
        with self.lock:
            entries = self._sessions.setdefault(requester_id, [])
            for i, entry in enumerate(entries):
                if entry.role.t == role.t:
                    if not self._live(entry, now):
                        entries[i] = SessionEntry(role=role, activated_at=now, expires_at=expires)
                    return False
            entries.append(SessionEntry(role=role, activated_at=now, expires_at=expires))
            return True

    def is_active(self, requester_id: str, role: ServerTrapdoor, now: float) -> bool:
        with self.lock:
            entries = tuple(self._sessions.get(requester_id, ()))
        return any(e.role.t == role.t and self._live(e, now) for e in entries)

    def active_roles(self, requester_id: str, now: float) -> list[ServerTrapdoor]:
        with self.lock:
            entries = tuple(self._sessions.get(requester_id, ()))
        return [e.role for e in entries if self._live(e, now)]

    def deactivate(self, requester_id: str, role: ServerTrapdoor) -> bool:
        with self.lock:
            entries = self._sessions.get(requester_id, [])
            kept = [e for e in entries if e.role.t != role.t]
            if len(kept) == len(entries):
                return False
            if kept:
                self._sessions[requester_id] = kept
            else:
                self._sessions.pop(requester_id, None)
            return True

    def drop_requester(self, requester_id: str) -> int:
        with self.lock:
            return len(self._sessions.pop(requester_id, []))

    def purge_expired(self, now: float) -> int:
        removed = 0
        with self.lock:
            for requester_id in list(self._sessions):
                entries = self._sessions[requester_id]
                kept = [e for e in entries if self._live(e, now)]
                removed += len(entries) - len(kept)
                if kept:
                    self._sessions[requester_id] = kept
                else:
                    del self._sessions[requester_id]
        if removed:
            logger.info("purged %d expired active role(s)", removed)
        return removed

    def size(self, requester_id: str) -> int:
        with self.lock:
            return len(self._sessions.get(requester_id, ()))

    def export(self) -> dict[str, list[SessionEntry]]:
        with self.lock:
            return {rid: list(self._sessions[rid]) for rid in sorted(self._sessions)}

    def replace_all(self, sessions: dict[str, Iterable[SessionEntry]]) -> None:
        with self.lock:
            self._sessions = {rid: list(entries) for rid, entries in sessions.items() if entries}
