"""
POST /api/v1/envelope

Single entry point for the CLI and other tooling: one WireEnvelope in, the op's
result out. Operator ops still need X-Admin-Key; the envelope's principal is
compared with the X-Principal header when both are present.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import APIRouter, Depends, Header

from app.api.deps import get_container, principal_header, require_admin_key, translate_errors
from app.schemas.requests import WireEnvelope
from app.services.envelope import OPERATOR_OPS, check_principal, dispatch
from app.services.provider_service import ServiceContainer

router = APIRouter()


@router.post("", summary="Dispatch a wire envelope")
def handle_envelope(
    envelope: WireEnvelope,
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
    x_admin_key: Optional[str] = Header(default=None),
) -> dict[str, Any]:
    if envelope.op in OPERATOR_OPS:
        require_admin_key(x_admin_key)
    with translate_errors():
        if envelope.principal is not None:
            check_principal(principal, envelope.principal)
        return dispatch(c, envelope)
