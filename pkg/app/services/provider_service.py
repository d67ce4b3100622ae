"""
app/services/provider_service.py

The operations the service provider exposes, shared by the HTTP routes, the
envelope endpoint and the CLI's in-process mode, so every transport runs
exactly the same decision code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from app.core.config import Settings
from app.core.exceptions import EngineNotConfiguredError, InvalidPolicyError
from app.schemas.bundles import ClientEncryptedPolicyBundle
from app.schemas.crypto import PublicParams, ServerKeySet
from app.schemas.requests import (
    AccessRequest,
    Acknowledgement,
    ActivationRequest,
    AttributeBatch,
    DeactivationRequest,
    Decision,
    DeployResult,
    RevokeResult,
)
from app.schemas.snapshot import StoreSnapshot
from app.services import key_files
from app.services.attribute_broker import AttributeBroker, http_notifier
from app.services.engine import ServiceProvider, snapshot_digest
from app.services.snapshot_service import (
    SnapshotRepository,
    build_repository,
    restore_store,
)

logger = logging.getLogger(__name__)

REMOVABLE_KINDS = ("role_assignment", "permission_assignment", "hierarchy")


@dataclass
class ServiceContainer:
    sp: ServiceProvider
    broker: AttributeBroker
    repository: Optional[SnapshotRepository] = None


def build_container(settings: Settings, restore: bool = True) -> ServiceContainer:
    notifier = (
        http_notifier(settings.SP_PIP_CALLBACK_URL, settings.SP_ATTRIBUTE_TIMEOUT_SEC)
        if settings.SP_PIP_CALLBACK_URL
        else None
    )
    broker = AttributeBroker(timeout_seconds=settings.SP_ATTRIBUTE_TIMEOUT_SEC, notifier=notifier)
    sp = ServiceProvider(session_ttl_seconds=settings.SP_SESSION_TTL_SEC, attribute_source=broker)
    repository = build_repository(settings)
    if restore:
        restore_store(sp, repository)
    if settings.SP_PUBLIC_PARAMS_PATH and not sp.configured:
        sp.install_params(key_files.read_public_params(settings.SP_PUBLIC_PARAMS_PATH))
    return ServiceContainer(sp=sp, broker=broker, repository=repository)


class ProviderService:
    @staticmethod
    def install_params(c: ServiceContainer, params: PublicParams) -> Acknowledgement:
        c.sp.install_params(params)
        return Acknowledgement(detail="public parameters installed")

    @staticmethod
    def install_keyset(c: ServiceContainer, skey: ServerKeySet) -> Acknowledgement:
        if not c.sp.configured:
            raise EngineNotConfiguredError("install public parameters before key sets")
        c.sp.install_keyset(skey)
        return Acknowledgement(detail=f"server key set installed for {skey.user_id}")

    @staticmethod
    def deploy(c: ServiceContainer, bundle: ClientEncryptedPolicyBundle) -> DeployResult:
        return c.sp.deploy(bundle)

    @staticmethod
    def remove_policy(c: ServiceContainer, kind: str, ident: Optional[str] = None) -> Acknowledgement:
        if kind == "role_assignment" and ident:
            c.sp.remove_role_assignment(ident)
        elif kind == "permission_assignment" and ident:
            c.sp.remove_permission_assignment(ident)
        elif kind == "hierarchy":
            c.sp.remove_hierarchy()
        else:
            raise InvalidPolicyError(
                f"cannot remove {kind!r}; expected one of {', '.join(REMOVABLE_KINDS)} "
                "with an id for assignments"
            )
        return Acknowledgement(detail=f"{kind} removed", policy_id=ident)

    @staticmethod
    def activate(
        c: ServiceContainer, req: ActivationRequest, attributes: Optional[AttributeBatch] = None
    ) -> Decision:
        return c.sp.pep.activate(req, attributes)

    @staticmethod
    def deactivate(c: ServiceContainer, req: DeactivationRequest) -> Acknowledgement:
        removed = c.sp.pep.deactivate(req)
        return Acknowledgement(ok=removed, detail="deactivated" if removed else "role was not active")

    @staticmethod
    def access(
        c: ServiceContainer, req: AccessRequest, attributes: Optional[AttributeBatch] = None
    ) -> Decision:
        return c.sp.pep.access(req, attributes)

    @staticmethod
    def deliver_attributes(c: ServiceContainer, batch: AttributeBatch) -> Acknowledgement:
        delivered = c.broker.deliver(batch)
        return Acknowledgement(detail="delivered" if delivered else "parked")

    @staticmethod
    def revoke(c: ServiceContainer, user_id: str) -> RevokeResult:
        return RevokeResult(user_id=user_id, removed=c.sp.revoke_user(user_id))

    @staticmethod
    def snapshot(c: ServiceContainer) -> dict:
        snapshot = c.sp.snapshot()
        location = c.repository.save(snapshot) if c.repository is not None else None
        logger.info("snapshot taken (%s)", location or "not persisted")
        return {"location": location, "digest": snapshot_digest(snapshot)}

    @staticmethod
    def restore(c: ServiceContainer, document: Optional[StoreSnapshot] = None) -> dict:
        if document is not None:
            c.sp.restore(document)
            restored = True
        else:
            restored = c.repository is not None and restore_store(c.sp, c.repository)
        return {"restored": restored, "digest": c.sp.store_digest()}
