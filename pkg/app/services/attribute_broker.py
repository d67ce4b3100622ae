"""
app/services/attribute_broker.py

Hands PIP attribute batches to pending decisions.

A batch is bound to a decision by its correlation_id. Two orders happen:
  • the PIP pushes first      → the batch is parked until the decision asks
                                 (parked batches expire after park_seconds)
  • the decision asks first   → the broker notifies the PIP (callable hook or
                                 POST to SP_PIP_CALLBACK_URL) and waits up to
                                 timeout_seconds for deliver()

A decision that gets nothing in time is denied with condition-unresolved by
the engine.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import httpx

from app.schemas.requests import AttributeBatch

logger = logging.getLogger(__name__)

PipNotifier = Callable[[str, str], None]

USER_AGENT = "encrypted-rbac-sp/1.0"


@dataclass
class _Waiter:
    requester_id: str
    event: threading.Event = field(default_factory=threading.Event)
    batch: Optional[AttributeBatch] = None


def http_notifier(url: str, timeout_seconds: float) -> PipNotifier:
    """POSTs {"correlation_id", "requester_id"} to the PIP's callback URL."""

    def _notify(correlation_id: str, requester_id: str) -> None:
        try:
            with httpx.Client(timeout=timeout_seconds) as client:
                resp = client.post(
                    url,
                    json={"correlation_id": correlation_id, "requester_id": requester_id},
                    headers={"User-Agent": USER_AGENT},
                )
            if not resp.is_success:
                logger.warning("PIP callback answered HTTP %d for %s", resp.status_code, correlation_id)
        except httpx.TimeoutException as exc:
            logger.warning("PIP callback timed out for %s: %s", correlation_id, exc)
        except httpx.HTTPError as exc:
            logger.warning("PIP callback failed for %s: %s", correlation_id, exc)

    return _notify


class AttributeBroker:
    def __init__(
        self,
        timeout_seconds: float = 2.0,
        notifier: Optional[PipNotifier] = None,
        park_seconds: float = 60.0,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.timeout_seconds = timeout_seconds
        self.notifier = notifier
        self.park_seconds = park_seconds
        self.clock = clock
        self._waiters: dict[str, _Waiter] = {}
        self._parked: dict[str, tuple[float, AttributeBatch]] = {}
        self._lock = threading.Lock()

    def deliver(self, batch: AttributeBatch) -> bool:
        """Returns True when a decision was waiting for this batch."""
        with self._lock:
            waiter = self._waiters.get(batch.correlation_id)
            if waiter is None:
                self._parked[batch.correlation_id] = (self.clock() + self.park_seconds, batch)
            else:
                waiter.batch = batch
                waiter.event.set()
        logger.debug(
            "attribute batch %s from %r: %s (%d trapdoors)",
            batch.correlation_id,
            batch.pip_id,
            "delivered" if waiter else "parked",
            len(batch.trapdoors),
        )
        return waiter is not None

    def fetch(self, correlation_id: str, requester_id: str) -> Optional[AttributeBatch]:
        with self._lock:
            parked = self._parked.pop(correlation_id, None)
            if parked is not None and parked[0] > self.clock():
                return parked[1]
            waiter = _Waiter(requester_id=requester_id)
            self._waiters[correlation_id] = waiter

        try:
            if self.notifier is not None:
                self.notifier(correlation_id, requester_id)
            if self.timeout_seconds > 0:
                waiter.event.wait(self.timeout_seconds)
        finally:
            with self._lock:
                self._waiters.pop(correlation_id, None)

        if waiter.batch is None:
            logger.info("no attributes for %s within %.2fs", correlation_id, self.timeout_seconds)
        return waiter.batch

    def purge_expired(self) -> int:
        now = self.clock()
        with self._lock:
            stale = [cid for cid, (expires, _) in self._parked.items() if expires <= now]
            for cid in stale:
                del self._parked[cid]
        if stale:
            logger.info("dropped %d unclaimed attribute batch(es)", len(stale))
        return len(stale)

    def pending(self) -> int:
        with self._lock:
            return len(self._parked)
