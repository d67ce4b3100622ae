"""
Requester flows through the Policy Enforcement Point.

  POST /api/v1/requests/activate     ACT: activate a role in the session
  POST /api/v1/requests/deactivate   drop an active role
  POST /api/v1/requests/access       REQ: role + action + target decision

A request may carry its PIP batch inline; otherwise the engine asks the
attribute broker when a condition must be evaluated. Bodies are
{"request": {...}, "attributes": {...} | null}.
"""

from __future__ import annotations

from typing import Optional

from fastapi import APIRouter, Body, Depends

from app.api.deps import get_container, principal_header, translate_errors
from app.schemas.requests import (
    AccessRequest,
    Acknowledgement,
    ActivationRequest,
    AttributeBatch,
    DeactivationRequest,
    Decision,
)
from app.services.envelope import check_principal
from app.services.provider_service import ProviderService, ServiceContainer

router = APIRouter()


@router.post("/activate", response_model=Decision, summary="Activate a role")
def activate(
    req: ActivationRequest = Body(alias="request"),
    attributes: Optional[AttributeBatch] = Body(default=None),
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
) -> Decision:
    with translate_errors():
        check_principal(principal, req.requester_id)
        return ProviderService.activate(c, req, attributes)


@router.post("/deactivate", response_model=Acknowledgement, summary="Deactivate a role")
def deactivate(
    req: DeactivationRequest,
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
) -> Acknowledgement:
    with translate_errors():
        check_principal(principal, req.requester_id)
        return ProviderService.deactivate(c, req)


@router.post("/access", response_model=Decision, summary="Access decision")
def access(
    req: AccessRequest = Body(alias="request"),
    attributes: Optional[AttributeBatch] = Body(default=None),
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
) -> Decision:
    with translate_errors():
        check_principal(principal, req.requester_id)
        return ProviderService.access(c, req, attributes)
