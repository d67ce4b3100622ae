"""
app/services/envelope.py

Dispatches a WireEnvelope to ProviderService. The HTTP envelope endpoint and
the CLI's in-process mode both go through dispatch(), so a command gives the
same answer whether it crossed the wire or not.

Bodies per op:
  install_params   PublicParams
  install_keyset   ServerKeySet
  deploy_policy    ClientEncryptedPolicyBundle
  remove_policy    {"kind": ..., "id": ...}
  activate         {"request": ActivationRequest, "attributes": AttributeBatch | null}
  deactivate       DeactivationRequest
  access           {"request": AccessRequest, "attributes": AttributeBatch | null}
  attributes       AttributeBatch
  revoke           {"user_id": ...}
  snapshot         {}
  restore          {"document": StoreSnapshot | null}
"""

from __future__ import annotations

import logging
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.exceptions import PrincipalMismatchError
from app.models.enums import EndpointOp
from app.schemas.bundles import ClientEncryptedPolicyBundle
from app.schemas.crypto import PublicParams, ServerKeySet
from app.schemas.requests import (
    AccessRequest,
    ActivationRequest,
    AttributeBatch,
    DeactivationRequest,
    WireEnvelope,
)
from app.schemas.snapshot import StoreSnapshot
from app.services.provider_service import ProviderService, ServiceContainer

logger = logging.getLogger(__name__)

OPERATOR_OPS = frozenset(
    {
        EndpointOp.INSTALL_PARAMS,
        EndpointOp.INSTALL_KEYSET,
        EndpointOp.REMOVE_POLICY,
        EndpointOp.REVOKE,
        EndpointOp.SNAPSHOT,
        EndpointOp.RESTORE,
    }
)


class RemovePolicyBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    id: Optional[str] = None


class ActivateBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    request: ActivationRequest
    attributes: Optional[AttributeBatch] = None


class AccessBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    request: AccessRequest
    attributes: Optional[AttributeBatch] = None


class RevokeBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    user_id: str = Field(min_length=1)


class RestoreBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    document: Optional[StoreSnapshot] = None


def check_principal(principal: Optional[str], claimed: str) -> None:
    """No principal means the transport did not authenticate one; nothing to compare."""
    if principal is not None and principal != claimed:
        logger.warning("principal %r tried to act as %r", principal, claimed)
        raise PrincipalMismatchError(f"principal {principal!r} cannot act as {claimed!r}")


def _validate(c: ServiceContainer, model: type[BaseModel], body: dict[str, Any]) -> Any:
    # Group elements are checked for subgroup membership once params exist.
    context = {"params": c.sp.params} if c.sp.configured else None
    return model.model_validate(body, context=context)


def dispatch(c: ServiceContainer, envelope: WireEnvelope) -> dict[str, Any]:
    op, body, principal = envelope.op, envelope.body, envelope.principal
    logger.debug("envelope %s op=%s principal=%r", envelope.correlation_id, op.value, principal)

    if op is EndpointOp.INSTALL_PARAMS:
        result: BaseModel | dict = ProviderService.install_params(c, PublicParams.model_validate(body))
    elif op is EndpointOp.INSTALL_KEYSET:
        result = ProviderService.install_keyset(c, ServerKeySet.model_validate(body))
    elif op is EndpointOp.DEPLOY_POLICY:
        bundle = _validate(c, ClientEncryptedPolicyBundle, body)
        check_principal(principal, bundle.issuer_id)
        result = ProviderService.deploy(c, bundle)
    elif op is EndpointOp.REMOVE_POLICY:
        removal = RemovePolicyBody.model_validate(body)
        result = ProviderService.remove_policy(c, removal.kind, removal.id)
    elif op is EndpointOp.ACTIVATE:
        act = _validate(c, ActivateBody, body)
        check_principal(principal, act.request.requester_id)
        result = ProviderService.activate(c, act.request, act.attributes)
    elif op is EndpointOp.DEACTIVATE:
        deact = _validate(c, DeactivationRequest, body)
        check_principal(principal, deact.requester_id)
        result = ProviderService.deactivate(c, deact)
    elif op is EndpointOp.ACCESS:
        req = _validate(c, AccessBody, body)
        check_principal(principal, req.request.requester_id)
        result = ProviderService.access(c, req.request, req.attributes)
    elif op is EndpointOp.ATTRIBUTES:
        batch = _validate(c, AttributeBatch, body)
        check_principal(principal, batch.pip_id)
        result = ProviderService.deliver_attributes(c, batch)
    elif op is EndpointOp.REVOKE:
        result = ProviderService.revoke(c, RevokeBody.model_validate(body).user_id)
    elif op is EndpointOp.SNAPSHOT:
        result = ProviderService.snapshot(c)
    else:
        result = ProviderService.restore(c, RestoreBody.model_validate(body).document)

    if isinstance(result, BaseModel):
        return result.model_dump(mode="json")
    return result
