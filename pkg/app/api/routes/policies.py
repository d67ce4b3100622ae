"""
Encrypted policy deployment and removal (Administration Point).

  POST   /api/v1/policies                                deploy a bundle
  DELETE /api/v1/policies/role-assignments/{requester}   remove a role assignment
  DELETE /api/v1/policies/permission-assignments/{id}    remove a permission assignment
  DELETE /api/v1/policies/hierarchy                      remove the role hierarchy
  GET    /api/v1/policies/digest                         SHA-256 of the policy store

Removals are operator calls (X-Admin-Key); deploys are checked against the
issuer through X-Principal.
"""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import APIRouter, Depends, status

from app.api.deps import get_container, principal_header, require_admin_key, translate_errors
from app.schemas.bundles import ClientEncryptedPolicyBundle
from app.schemas.requests import Acknowledgement, DeployResult
from app.services.envelope import check_principal
from app.services.provider_service import ProviderService, ServiceContainer

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post(
    "",
    response_model=DeployResult,
    status_code=status.HTTP_201_CREATED,
    summary="Deploy a client-encrypted policy bundle",
)
def deploy_policy(
    bundle: ClientEncryptedPolicyBundle,
    c: ServiceContainer = Depends(get_container),
    principal: Optional[str] = Depends(principal_header),
) -> DeployResult:
    with translate_errors():
        check_principal(principal, bundle.issuer_id)
        return ProviderService.deploy(c, bundle)


@router.delete(
    "/role-assignments/{requester_id}",
    response_model=Acknowledgement,
    dependencies=[Depends(require_admin_key)],
)
def remove_role_assignment(requester_id: str, c: ServiceContainer = Depends(get_container)) -> Acknowledgement:
    with translate_errors():
        return ProviderService.remove_policy(c, "role_assignment", requester_id)


@router.delete(
    "/permission-assignments/{policy_id}",
    response_model=Acknowledgement,
    dependencies=[Depends(require_admin_key)],
)
def remove_permission_assignment(policy_id: str, c: ServiceContainer = Depends(get_container)) -> Acknowledgement:
    with translate_errors():
        return ProviderService.remove_policy(c, "permission_assignment", policy_id)


@router.delete("/hierarchy", response_model=Acknowledgement, dependencies=[Depends(require_admin_key)])
def remove_hierarchy(c: ServiceContainer = Depends(get_container)) -> Acknowledgement:
    with translate_errors():
        return ProviderService.remove_policy(c, "hierarchy")


@router.get("/digest", summary="Policy store digest")
def policy_digest(c: ServiceContainer = Depends(get_container)) -> dict:
    return {"digest": c.sp.policy_digest(), **c.sp.policy_store.counts()}
