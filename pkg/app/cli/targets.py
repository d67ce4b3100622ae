"""
app/cli/targets.py

Where SP-facing commands send their envelope:

  ServiceTarget   POST /api/v1/envelope on a running service (httpx)
  StateTarget     an in-process engine loaded from, and saved back to, a
                  snapshot file

Both speak WireEnvelope and return the op's JSON result, so a command behaves
the same against either.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional, Protocol

import httpx

from app.cli.exit_codes import EXIT_INVALID, EXIT_TRANSPORT
from app.core.exceptions import KeyNotFoundError
from app.models.enums import EndpointOp
from app.schemas.requests import WireEnvelope
from app.services.attribute_broker import AttributeBroker
from app.services.engine import ServiceProvider
from app.services.envelope import dispatch
from app.services.provider_service import ServiceContainer
from app.services.snapshot_service import FileSnapshotRepository, restore_store

logger = logging.getLogger(__name__)

ENVELOPE_PATH = "/api/v1/envelope"
USER_AGENT = "encrypted-rbac-cli/1.0"

# Ops that leave the stored state as it was.
_READ_ONLY_OPS = frozenset({EndpointOp.ACCESS, EndpointOp.SNAPSHOT})


class ServiceResponseError(Exception):
    """Non-success answer from the service, already mapped to an exit code."""

    def __init__(self, status_code: int, detail: Any, exit_code: int) -> None:
        super().__init__(f"service answered HTTP {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail
        self.exit_code = exit_code


class Target(Protocol):
    def call(self, op: EndpointOp, body: dict[str, Any], principal: Optional[str] = None) -> dict[str, Any]: ...


class ServiceTarget:
    def __init__(
        self,
        base_url: str,
        admin_key: Optional[str] = None,
        timeout: float = 30.0,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.admin_key = admin_key
        self.timeout = timeout
        # Injected by tests (FastAPI TestClient); otherwise one client per call.
        self._client = client

    def call(self, op: EndpointOp, body: dict[str, Any], principal: Optional[str] = None) -> dict[str, Any]:
        envelope = WireEnvelope(op=op, principal=principal, body=body)
        headers = {"User-Agent": USER_AGENT}
        if self.admin_key:
            headers["X-Admin-Key"] = self.admin_key
        if principal:
            headers["X-Principal"] = principal
        payload = envelope.model_dump(mode="json")
        if self._client is not None:
            resp = self._client.post(ENVELOPE_PATH, json=payload, headers=headers)
        else:
            with httpx.Client(base_url=self.base_url, timeout=self.timeout) as client:
                resp = client.post(ENVELOPE_PATH, json=payload, headers=headers)
        if resp.is_success:
            return resp.json()
        raise self._error_for(resp)

    @staticmethod
    def _error_for(resp: httpx.Response) -> Exception:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = resp.text
        if resp.status_code == 403 and isinstance(detail, dict) and detail.get("reason") == "key-not-found":
            return KeyNotFoundError(detail.get("user_id", "?"))
        # 4xx: the request itself was refused; 5xx: the service failed.
        exit_code = EXIT_INVALID if 400 <= resp.status_code < 500 else EXIT_TRANSPORT
        return ServiceResponseError(resp.status_code, detail, exit_code)


class StateTarget:
    """The engine lives in this process for one command; its state in a file."""

    def __init__(self, path: str | Path) -> None:
        self.repository = FileSnapshotRepository(path)
        # No PIP can answer a callback here: conditions need an inline batch.
        broker = AttributeBroker(timeout_seconds=0)
        sp = ServiceProvider(attribute_source=broker)
        restore_store(sp, self.repository)
        self.container = ServiceContainer(sp=sp, broker=broker, repository=self.repository)

    def call(self, op: EndpointOp, body: dict[str, Any], principal: Optional[str] = None) -> dict[str, Any]:
        envelope = WireEnvelope(op=op, principal=principal, body=body)
        result = dispatch(self.container, envelope)
        if op not in _READ_ONLY_OPS:
            self.repository.save(self.container.sp.snapshot())
            logger.debug("state saved to %s", self.repository.path)
        return result
