from __future__ import annotations

from fastapi import APIRouter, Depends

from app.api.deps import get_container, require_admin_key, translate_errors
from app.schemas.crypto import ServerKeySet
from app.schemas.requests import Acknowledgement
from app.services.provider_service import ProviderService, ServiceContainer

router = APIRouter()


@router.put("", response_model=Acknowledgement, summary="Install a user's server key set")
def install_keyset(
    skey: ServerKeySet,
    c: ServiceContainer = Depends(get_container),
    _: None = Depends(require_admin_key),
) -> Acknowledgement:
    """The TKMA hands over the server half; re-issuing replaces the old pair."""
    with translate_errors():
        return ProviderService.install_keyset(c, skey)
