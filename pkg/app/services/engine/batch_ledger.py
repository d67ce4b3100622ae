from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from typing import Iterable

from Crypto.Hash import SHA256

from app.schemas.requests import AttributeBatch
from app.services.engine.policy_store import canonical_json

logger = logging.getLogger(__name__)

DEFAULT_LEDGER_CAPACITY = 65_536


def batch_fingerprint(batch: AttributeBatch) -> str:
    """Digest of the PIP id and its trapdoors; the correlation id is left out."""
    body = {"pip_id": batch.pip_id, "trapdoors": [td.model_dump(mode="json") for td in batch.trapdoors]}
    return SHA256.new(canonical_json(body)).hexdigest()


class ConsumedBatchLedger:
    """
    Attribute batches that already fed a decision.

    A batch is accepted once. It is keyed both by correlation id and by its
    trapdoor fingerprint: client trapdoors are randomized per generation, so a
    batch whose correlation id was rewritten still collides on the second key.
    The oldest keys fall out past `capacity`.
    """

    def __init__(self, capacity: int = DEFAULT_LEDGER_CAPACITY) -> None:
        if capacity < 1:
            raise ValueError("ledger capacity must be positive")
        self.capacity = capacity
        self._seen: OrderedDict[str, None] = OrderedDict()
        self.lock = threading.RLock()

    @staticmethod
    def _keys(batch: AttributeBatch) -> tuple[str, str]:
        return f"cid:{batch.pip_id}:{batch.correlation_id}", f"td:{batch_fingerprint(batch)}"

    def consume(self, batch: AttributeBatch) -> bool:
        """False when this batch, or its correlation id, was consumed before."""
        keys = self._keys(batch)
        with self.lock:
            if any(k in self._seen for k in keys):
                return False
            for k in keys:
                self._seen[k] = None
            while len(self._seen) > self.capacity:
                self._seen.popitem(last=False)
        return True

    def __contains__(self, batch: AttributeBatch) -> bool:
        with self.lock:
            return any(k in self._seen for k in self._keys(batch))

    def __len__(self) -> int:
        with self.lock:
            return len(self._seen)

    def export(self) -> list[str]:
        with self.lock:
            return list(self._seen)

    def replace_all(self, keys: Iterable[str]) -> None:
        with self.lock:
            self._seen = OrderedDict((k, None) for k in keys)
            while len(self._seen) > self.capacity:
                self._seen.popitem(last=False)
