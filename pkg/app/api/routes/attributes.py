from __future__ import annotations

from typing import Optional

from fastapi import APIRouter, Depends, status

from app.api.deps import get_container, principal_header, translate_errors
from app.schemas.requests import Acknowledgement, AttributeBatch
from app.services.envelope import check_principal
from app.services.provider_service import ProviderService, ServiceContainer

router = APIRouter()


@router.post(
    "",
    response_model=Acknowledgement,
    status_code=status.HTTP_202_ACCEPTED,
    summary="PIP pushes the attribute trapdoors for one pending decision",
)
def deliver_attributes(
    batch: AttributeBatch,
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
) -> Acknowledgement:
    with translate_errors():
        check_principal(principal, batch.pip_id)
        return ProviderService.deliver_attributes(c, batch)
