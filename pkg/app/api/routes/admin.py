"""
Operator endpoints. All of them require X-Admin-Key.

  POST /api/v1/admin/revoke/{user_id}   delete the user's server key set
  POST /api/v1/admin/snapshot           persist the store, return its digest
  POST /api/v1/admin/restore            reload from the repository, or from the
                                        snapshot document in the body
"""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import APIRouter, Body, Depends

from app.api.deps import get_container, require_admin_key, translate_errors
from app.schemas.requests import RevokeResult
from app.schemas.snapshot import StoreSnapshot
from app.services.provider_service import ProviderService, ServiceContainer
from app.services.scheduler import scheduled_jobs

logger = logging.getLogger(__name__)

router = APIRouter(dependencies=[Depends(require_admin_key)])


@router.post("/revoke/{user_id}", response_model=RevokeResult, summary="Revoke a user")
def revoke(user_id: str, c: ServiceContainer = Depends(get_container)) -> RevokeResult:
    with translate_errors():
        result = ProviderService.revoke(c, user_id)
    if not result.removed:
        logger.info("revoke for %r: no key set was installed", user_id)
    return result


@router.post("/snapshot", summary="Snapshot the whole store")
def snapshot(c: ServiceContainer = Depends(get_container)) -> dict:
    with translate_errors():
        return ProviderService.snapshot(c)


@router.post("/restore", summary="Restore the whole store")
def restore(
    document: Optional[StoreSnapshot] = Body(default=None),
    c: ServiceContainer = Depends(get_container),
) -> dict:
    with translate_errors():
        return ProviderService.restore(c, document)


@router.get("/scheduler-status", summary="Background job status")
def scheduler_status() -> dict:
    return {"jobs": scheduled_jobs()}
