"""
Public parameters published by the TKMA.

  PUT /api/v1/params   install (operator)
  GET /api/v1/params   read back what the engine runs on
"""

from __future__ import annotations

from fastapi import APIRouter, Depends

from app.api.deps import get_container, require_admin_key, translate_errors
from app.schemas.crypto import PublicParams
from app.schemas.requests import Acknowledgement
from app.services.provider_service import ProviderService, ServiceContainer

router = APIRouter()


@router.put("", response_model=Acknowledgement, summary="Install public parameters")
def install_params(
    params: PublicParams,
    c: ServiceContainer = Depends(get_container),
    _: None = Depends(require_admin_key),
) -> Acknowledgement:
    with translate_errors():
        return ProviderService.install_params(c, params)


@router.get("", response_model=PublicParams, summary="Installed public parameters")
def read_params(c: ServiceContainer = Depends(get_container)) -> PublicParams:
    with translate_errors():
        return c.sp.params
