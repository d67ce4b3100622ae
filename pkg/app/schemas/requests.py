from __future__ import annotations

import uuid
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.enums import DecisionOutcome, DenyReason, EndpointOp
from app.schemas.crypto import ClientTrapdoor

SUPPORTED_ENVELOPE_VERSIONS = frozenset({1})


def new_correlation_id() -> str:
    return uuid.uuid4().hex


class ActivationRequest(BaseModel):
    """ACT = (i, R) with R in trapdoor form."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    requester_id: str = Field(min_length=1)
    role_td: ClientTrapdoor
    # Binds a PIP attribute batch to this decision.
    correlation_id: str = Field(default_factory=new_correlation_id)


class DeactivationRequest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    requester_id: str = Field(min_length=1)
    role_td: ClientTrapdoor


class AccessRequest(BaseModel):
    """REQ = (R, A, T) from requester i."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    requester_id: str = Field(min_length=1)
    role_td: ClientTrapdoor
    action_td: ClientTrapdoor
    target_td: ClientTrapdoor
    correlation_id: str = Field(default_factory=new_correlation_id)


class AttributeBatch(BaseModel):
    """Every contextual attribute trapdoor the PIP has for one decision."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pip_id: str = Field(min_length=1)
    correlation_id: str = Field(min_length=1)
    trapdoors: list[ClientTrapdoor] = Field(min_length=1)


class Decision(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    outcome: DecisionOutcome
    reason: Optional[DenyReason] = None
    # True when the permission was found on a base role of the active role.
    via_base_role: bool = False

    @model_validator(mode="after")
    def _reason_iff_deny(self) -> "Decision":
        if self.outcome is DecisionOutcome.DENY and self.reason is None:
            raise ValueError("a deny decision needs a reason")
        if self.outcome is DecisionOutcome.PERMIT and self.reason is not None:
            raise ValueError("a permit decision carries no reason")
        return self

    @classmethod
    def permit(cls, via_base_role: bool = False) -> "Decision":
        return cls(outcome=DecisionOutcome.PERMIT, via_base_role=via_base_role)

    @classmethod
    def deny(cls, reason: DenyReason) -> "Decision":
        return cls(outcome=DecisionOutcome.DENY, reason=reason)

    @property
    def permitted(self) -> bool:
        return self.outcome is DecisionOutcome.PERMIT


class WireEnvelope(BaseModel):
    """Transport wrapper: one op, one principal, an op-specific body."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    version: int = 1
    op: EndpointOp
    principal: Optional[str] = None
    body: dict[str, Any] = Field(default_factory=dict)
    correlation_id: str = Field(default_factory=new_correlation_id)

    @model_validator(mode="after")
    def _supported_version(self) -> "WireEnvelope":
        if self.version not in SUPPORTED_ENVELOPE_VERSIONS:
            raise ValueError(f"envelope version {self.version} is not supported")
        return self


class Acknowledgement(BaseModel):
    ok: bool = True
    detail: Optional[str] = None
    policy_id: Optional[str] = None


class DeployResult(BaseModel):
    kind: str
    issuer_id: str
    policy_id: Optional[str] = None
    stored_ciphertexts: int
    stored_trapdoors: int = 0


class RevokeResult(BaseModel):
    user_id: str
    removed: bool
