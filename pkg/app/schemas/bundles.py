"""
app/schemas/bundles.py

Encrypted policy shapes.

Client* types are what the Admin User sends after the first encryption
round; Server* types are what the Administration Point stores after the
second round. Both mirror the plaintext policy: same list lengths, same
tree topology, gates in clear.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.enums import BundleKind, Gate
from app.schemas.crypto import ClientCiphertext, ClientTrapdoor, ServerCiphertext, ServerTrapdoor

_FROZEN = ConfigDict(frozen=True, extra="forbid")


# ── Condition trees ───────────────────────────────────────────────────────────


class ClientEncryptedLeaf(BaseModel):
    model_config = _FROZEN

    ciphertext: ClientCiphertext


class ClientEncryptedGate(BaseModel):
    model_config = _FROZEN

    gate: Gate
    k: Optional[int] = None
    children: list[Union[ClientEncryptedLeaf, ClientEncryptedGate]] = Field(min_length=1)


class ClientEncryptedTree(BaseModel):
    model_config = _FROZEN

    root: Union[ClientEncryptedLeaf, ClientEncryptedGate]


class ServerEncryptedLeaf(BaseModel):
    model_config = _FROZEN

    ciphertext: ServerCiphertext


class ServerEncryptedGate(BaseModel):
    model_config = _FROZEN

    gate: Gate
    children: list[Union[ServerEncryptedLeaf, ServerEncryptedGate]] = Field(min_length=1)


class ServerEncryptedTree(BaseModel):
    model_config = _FROZEN

    root: Union[ServerEncryptedLeaf, ServerEncryptedGate]


ClientEncryptedGate.model_rebuild()
ServerEncryptedGate.model_rebuild()


# ── Client bundles (Admin User → Administration Point) ───────────────────────


class ClientPermission(BaseModel):
    model_config = _FROZEN

    action: ClientCiphertext
    target: ClientCiphertext


class ClientHierarchyNode(BaseModel):
    model_config = _FROZEN

    ciphertext: ClientCiphertext
    trapdoor: ClientTrapdoor


class RoleAssignmentPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["role_assignment"] = "role_assignment"
    requester_id: str = Field(min_length=1)
    roles: list[ClientCiphertext] = Field(min_length=1)
    condition: Optional[ClientEncryptedTree] = None


class PermissionAssignmentPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["permission_assignment"] = "permission_assignment"
    role: ClientCiphertext
    permissions: list[ClientPermission] = Field(min_length=1)
    condition: Optional[ClientEncryptedTree] = None
    policy_id: Optional[str] = None


class ConditionPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["condition"] = "condition"
    attach_to: Literal["role_assignment", "permission_assignment"]
    target: str = Field(min_length=1)
    tree: ClientEncryptedTree


class HierarchyPayload(BaseModel):
    model_config = _FROZEN

    kind: Literal["hierarchy"] = "hierarchy"
    nodes: list[ClientHierarchyNode] = Field(default_factory=list)
    # (derived index, base index) into nodes
    edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _edges_in_range(self) -> "HierarchyPayload":
        n = len(self.nodes)
        for derived, base in self.edges:
            if not (0 <= derived < n and 0 <= base < n):
                raise ValueError(f"edge ({derived}, {base}) points outside the node list")
        return self


BundlePayload = Annotated[
    Union[RoleAssignmentPayload, PermissionAssignmentPayload, ConditionPayload, HierarchyPayload],
    Field(discriminator="kind"),
]


class ClientEncryptedPolicyBundle(BaseModel):
    """What the Admin User ships; issuer_id selects the server key half."""

    model_config = _FROZEN

    kind: BundleKind
    issuer_id: str = Field(min_length=1)
    payload: BundlePayload

    @model_validator(mode="after")
    def _kind_matches(self) -> "ClientEncryptedPolicyBundle":
        if self.payload.kind != self.kind.value:
            raise ValueError(f"bundle kind {self.kind.value!r} carries a {self.payload.kind!r} payload")
        return self


# ── Stored forms (Policy Store) ───────────────────────────────────────────────


class StoredPermission(BaseModel):
    model_config = _FROZEN

    action: ServerCiphertext
    target: ServerCiphertext


class StoredRoleAssignment(BaseModel):
    model_config = _FROZEN

    requester_id: str
    issuer_id: str
    roles: list[ServerCiphertext]
    condition: Optional[ServerEncryptedTree] = None


class StoredPermissionAssignment(BaseModel):
    model_config = _FROZEN

    policy_id: str
    issuer_id: str
    role: ServerCiphertext
    permissions: list[StoredPermission]
    condition: Optional[ServerEncryptedTree] = None


class StoredHierarchyNode(BaseModel):
    model_config = _FROZEN

    ciphertext: ServerCiphertext
    trapdoor: ServerTrapdoor


class StoredHierarchy(BaseModel):
    model_config = _FROZEN

    issuer_id: str
    nodes: list[StoredHierarchyNode] = Field(default_factory=list)
    edges: list[tuple[int, int]] = Field(default_factory=list)


class FlatPolicy(BaseModel):
    """⟨S, A, T⟩ tuple with a condition; only the benchmark baseline uses it."""

    model_config = _FROZEN

    subject: ServerCiphertext
    action: ServerCiphertext
    target: ServerCiphertext
    condition: Optional[ServerEncryptedTree] = None


# ── Shape helpers ─────────────────────────────────────────────────────────────

AnyEncryptedTree = Union[ClientEncryptedTree, ServerEncryptedTree]


def tree_leaf_count(tree: Optional[AnyEncryptedTree]) -> int:
    if tree is None:
        return 0
    count, stack = 0, [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, (ClientEncryptedLeaf, ServerEncryptedLeaf)):
            count += 1
        else:
            stack.extend(node.children)
    return count


def payload_counts(payload: BundlePayload) -> tuple[int, int]:
    """(ciphertexts, trapdoors) carried by a bundle payload."""
    if isinstance(payload, RoleAssignmentPayload):
        return len(payload.roles) + tree_leaf_count(payload.condition), 0
    if isinstance(payload, PermissionAssignmentPayload):
        return 1 + 2 * len(payload.permissions) + tree_leaf_count(payload.condition), 0
    if isinstance(payload, ConditionPayload):
        return tree_leaf_count(payload.tree), 0
    return len(payload.nodes), len(payload.nodes)
