from __future__ import annotations

import logging
import threading
from typing import Iterable

from app.core.exceptions import KeyNotFoundError
from app.schemas.crypto import ServerKeySet

logger = logging.getLogger(__name__)


class KeyStore:
    """user id → ServerKeySet; starts empty, at most one entry per user."""

    def __init__(self) -> None:
        self._keys: dict[str, ServerKeySet] = {}
        self.lock = threading.RLock()

    def install(self, skey: ServerKeySet) -> bool:
        """Returns True when an existing entry was replaced."""
        with self.lock:
            replaced = skey.user_id in self._keys
            self._keys[skey.user_id] = skey
        logger.info("%s server key set for user %r", "replaced" if replaced else "installed", skey.user_id)
        return replaced

    def get(self, user_id: str) -> ServerKeySet:
        with self.lock:
            skey = self._keys.get(user_id)
        if skey is None:
            raise KeyNotFoundError(user_id)
        return skey

    def remove(self, user_id: str) -> bool:
        with self.lock:
            return self._keys.pop(user_id, None) is not None

    def __contains__(self, user_id: object) -> bool:
        with self.lock:
            return user_id in self._keys

    def __len__(self) -> int:
        with self.lock:
            return len(self._keys)

    def entries(self) -> list[ServerKeySet]:
        with self.lock:
            return [self._keys[uid] for uid in sorted(self._keys)]

    def replace_all(self, entries: Iterable[ServerKeySet]) -> None:
        keys = {skey.user_id: skey for skey in entries}
        with self.lock:
            self._keys = keys
