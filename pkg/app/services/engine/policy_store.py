"""
app/services/engine/policy_store.py

Role Repository, Permission Repository and Role Hierarchy.

  role repository        requester id → StoredRoleAssignment (replaced on redeploy)
  permission repository  ordered StoredPermissionAssignment list, keyed by policy id
  hierarchy              one StoredHierarchy, replaced on redeploy

Readers get immutable copies taken under the lock and evaluate outside it.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from typing import Optional

from Crypto.Hash import SHA256

from app.core.exceptions import UnknownPolicyError
from app.schemas.bundles import (
    ServerEncryptedTree,
    StoredHierarchy,
    StoredPermissionAssignment,
    StoredRoleAssignment,
)

logger = logging.getLogger(__name__)


def canonical_json(data: object) -> bytes:
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def new_policy_id() -> str:
    return uuid.uuid4().hex


class PolicyStore:
    def __init__(self) -> None:
        self._roles: dict[str, StoredRoleAssignment] = {}
        self._permissions: list[StoredPermissionAssignment] = []
        self._hierarchy: Optional[StoredHierarchy] = None
        self.lock = threading.RLock()

    # ── Role repository ──────────────────────────────────────────────────────

    def put_role_assignment(self, entry: StoredRoleAssignment) -> None:
        with self.lock:
            self._roles[entry.requester_id] = entry

    def role_assignment_for(self, requester_id: str) -> Optional[StoredRoleAssignment]:
        with self.lock:
            return self._roles.get(requester_id)

    def remove_role_assignment(self, requester_id: str) -> None:
        with self.lock:
            if self._roles.pop(requester_id, None) is None:
                raise UnknownPolicyError(f"no role assignment for requester {requester_id!r}")

    # ── Permission repository ────────────────────────────────────────────────

    def put_permission_assignment(self, entry: StoredPermissionAssignment) -> bool:
        """Appends, or replaces the entry with the same policy id in place."""
        with self.lock:
            for i, existing in enumerate(self._permissions):
                if existing.policy_id == entry.policy_id:
                    self._permissions[i] = entry
                    return True
            self._permissions.append(entry)
            return False

    def permission_entries(self) -> tuple[StoredPermissionAssignment, ...]:
        with self.lock:
            return tuple(self._permissions)

    def has_permission_assignment(self, policy_id: str) -> bool:
        with self.lock:
            return any(e.policy_id == policy_id for e in self._permissions)

    def remove_permission_assignment(self, policy_id: str) -> None:
        with self.lock:
            kept = [e for e in self._permissions if e.policy_id != policy_id]
            if len(kept) == len(self._permissions):
                raise UnknownPolicyError(f"no permission assignment with id {policy_id!r}")
            self._permissions = kept

    # ── Hierarchy ─────────────────────────────────────────────────────────────

    def set_hierarchy(self, hierarchy: StoredHierarchy) -> None:
        with self.lock:
            self._hierarchy = hierarchy

    def hierarchy(self) -> Optional[StoredHierarchy]:
        with self.lock:
            return self._hierarchy

    def remove_hierarchy(self) -> None:
        with self.lock:
            if self._hierarchy is None:
                raise UnknownPolicyError("no role hierarchy is deployed")
            self._hierarchy = None

    # ── Conditions ────────────────────────────────────────────────────────────

    def attach_condition(self, attach_to: str, target: str, tree: ServerEncryptedTree) -> None:
        with self.lock:
            if attach_to == "role_assignment":
                entry = self._roles.get(target)
                if entry is None:
                    raise UnknownPolicyError(f"no role assignment for requester {target!r}")
                self._roles[target] = entry.model_copy(update={"condition": tree})
                return
            for i, entry in enumerate(self._permissions):
                if entry.policy_id == target:
                    self._permissions[i] = entry.model_copy(update={"condition": tree})
                    return
            raise UnknownPolicyError(f"no permission assignment with id {target!r}")

    # ── Whole-store views ─────────────────────────────────────────────────────

    def export(
        self,
    ) -> tuple[list[StoredRoleAssignment], list[StoredPermissionAssignment], Optional[StoredHierarchy]]:
        with self.lock:
            roles = [self._roles[rid] for rid in sorted(self._roles)]
            return roles, list(self._permissions), self._hierarchy

    def replace_all(
        self,
        roles: list[StoredRoleAssignment],
        permissions: list[StoredPermissionAssignment],
        hierarchy: Optional[StoredHierarchy],
    ) -> None:
        with self.lock:
            self._roles = {entry.requester_id: entry for entry in roles}
            self._permissions = list(permissions)
            self._hierarchy = hierarchy

    def is_empty(self) -> bool:
        with self.lock:
            return not self._roles and not self._permissions and self._hierarchy is None

    def digest(self) -> str:
        """SHA-256 over the canonical JSON of all three repositories."""
        roles, permissions, hierarchy = self.export()
        document = {
            "role_repository": [e.model_dump(mode="json") for e in roles],
            "permission_repository": [e.model_dump(mode="json") for e in permissions],
            "hierarchy": hierarchy.model_dump(mode="json") if hierarchy else None,
        }
        return SHA256.new(canonical_json(document)).hexdigest()

    def counts(self) -> dict[str, int]:
        with self.lock:
            return {
                "role_assignments": len(self._roles),
                "permission_assignments": len(self._permissions),
                "hierarchy_nodes": len(self._hierarchy.nodes) if self._hierarchy else 0,
            }
