"""
app/schemas/snapshot.py

The versioned store document written by snapshot() and read by restore().
Group elements are hex strings; nothing in here is a client-side secret.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.bundles import StoredHierarchy, StoredPermissionAssignment, StoredRoleAssignment
from app.schemas.crypto import PublicParams, ServerKeySet, ServerTrapdoor

SNAPSHOT_FORMAT = "encrypted-rbac-store"
SNAPSHOT_MAJOR_VERSION = 1
SNAPSHOT_MINOR_VERSION = 1


class SessionEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    role: ServerTrapdoor
    activated_at: float
    expires_at: Optional[float] = None


class StoreSnapshot(BaseModel):
    # extra="ignore" keeps newer minor versions readable.
    model_config = ConfigDict(frozen=True, extra="ignore")

    format: str = SNAPSHOT_FORMAT
    major_version: int = SNAPSHOT_MAJOR_VERSION
    minor_version: int = SNAPSHOT_MINOR_VERSION
    params: Optional[PublicParams] = None
    key_store: list[ServerKeySet] = Field(default_factory=list)
    role_repository: list[StoredRoleAssignment] = Field(default_factory=list)
    permission_repository: list[StoredPermissionAssignment] = Field(default_factory=list)
    hierarchy: Optional[StoredHierarchy] = None
    sessions: dict[str, list[SessionEntry]] = Field(default_factory=dict)
    # Ledger keys of attribute batches already used by a decision (minor 1).
    consumed_batches: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _readable(self) -> "StoreSnapshot":
        if self.format != SNAPSHOT_FORMAT:
            raise ValueError(f"not a store snapshot (format={self.format!r})")
        if self.major_version != SNAPSHOT_MAJOR_VERSION:
            raise ValueError(
                f"snapshot major version {self.major_version} is not readable "
                f"(expected {SNAPSHOT_MAJOR_VERSION})"
            )
        return self
