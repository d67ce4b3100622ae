"""
app/services/client_toolkit.py

Everything that runs in the trusted environment.

  KeyAuthority          TKMA: init, enrol / re-issue, persisted state
  encrypt_*             Admin User: first-round encryption of policies
  make_*_request        Requester: ACT / REQ in trapdoor form
  pip_collect           PIP: contextual attributes as trapdoors

Nothing here talks to the service provider; callers ship the results over
HTTP (app/cli) or hand them to an in-process ServiceProvider.
"""

from __future__ import annotations

import logging
import random
import threading
from pathlib import Path
from typing import Iterable, Optional, Union

from app.core.exceptions import InvalidPolicyError, UnsupportedGateError
from app.models.enums import BundleKind
from app.schemas.bundles import (
    ClientEncryptedGate,
    ClientEncryptedLeaf,
    ClientEncryptedPolicyBundle,
    ClientEncryptedTree,
    ClientHierarchyNode,
    ClientPermission,
    ConditionPayload,
    HierarchyPayload,
    PermissionAssignmentPayload,
    RoleAssignmentPayload,
)
from app.schemas.crypto import ClientKeySet, ClientTrapdoor, MasterSecret, PublicParams, ServerKeySet
from app.schemas.policy import (
    AttributeAssertion,
    ConditionAttachment,
    ConditionNode,
    ConditionTree,
    GateNode,
    LeafToken,
    PermissionAssignmentPolicy,
    PolicyDocument,
    RoleAssignmentPolicy,
    RoleHierarchyGraph,
)
from app.schemas.requests import (
    AccessRequest,
    ActivationRequest,
    AttributeBatch,
    DeactivationRequest,
    new_correlation_id,
)
from app.services import key_files
from app.services.crypto.group import SecurityParam, default_rng, init
from app.services.crypto.scheme import client_encrypt, client_trapdoor, keygen
from app.services.policy_model import (
    compile_condition,
    contains_threshold,
    ensure_acyclic,
    tokenize_action,
    tokenize_assertions,
    tokenize_role,
    tokenize_target,
)

logger = logging.getLogger(__name__)


# ── TKMA ──────────────────────────────────────────────────────────────────────


class KeyAuthority:
    """Trusted Key Management Authority: the only holder of (x, s)."""

    def __init__(
        self,
        params: PublicParams,
        master_secret: MasterSecret,
        issued_users: Iterable[str] = (),
        rng: random.Random | None = None,
    ) -> None:
        self.params = params
        self._msk = master_secret
        self._issued: list[str] = list(dict.fromkeys(issued_users))
        self._rng = rng or default_rng()
        self._lock = threading.Lock()

    @classmethod
    def create(cls, security_param: SecurityParam, rng: random.Random | None = None) -> "KeyAuthority":
        params, msk = init(security_param, rng)
        return cls(params, msk, rng=rng)

    @property
    def issued_users(self) -> list[str]:
        return list(self._issued)

    def enroll(self, user_id: str) -> tuple[ClientKeySet, ServerKeySet]:
        """
        Issues a fresh split pair. Enrolling an existing user re-issues:
        once the new server half is installed the old client half is dead.
        """
        client, server = keygen(self._msk, user_id, self.params, self._rng)
        with self._lock:
            if user_id in self._issued:
                logger.info("re-issuing key pair for user %r", user_id)
            else:
                self._issued.append(user_id)
                logger.info("issued key pair for user %r", user_id)
        return client, server

    def forget(self, user_id: str) -> bool:
        with self._lock:
            if user_id in self._issued:
                self._issued.remove(user_id)
                return True
            return False

    def save(self, path: str | Path) -> Path:
        state = key_files.KeyAuthorityState(
            params=self.params, master_secret=self._msk, issued_users=self._issued
        )
        return key_files.write_authority_state(path, state)

    @classmethod
    def load(cls, path: str | Path, rng: random.Random | None = None) -> "KeyAuthority":
        state = key_files.read_authority_state(path)
        return cls(state.params, state.master_secret, state.issued_users, rng=rng)

    def __repr__(self) -> str:
        return f"KeyAuthority(|p|={self.params.p.bit_length()}, issued={len(self._issued)})"


# ── Admin User ────────────────────────────────────────────────────────────────


def _encrypt_node(
    node: ConditionNode, keyset: ClientKeySet, params: PublicParams, rng: random.Random
) -> Union[ClientEncryptedLeaf, ClientEncryptedGate]:
    if isinstance(node, LeafToken):
        return ClientEncryptedLeaf(ciphertext=client_encrypt(node.token, keyset, params, rng))
    if not isinstance(node, GateNode):
        raise InvalidPolicyError("conditions are compiled before encryption")
    return ClientEncryptedGate(
        gate=node.gate,
        children=[_encrypt_node(child, keyset, params, rng) for child in node.children],
    )


def encrypt_condition(
    tree: ConditionTree,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedTree:
    """Leaves → ClientCiphertexts; gates stay in clear."""
    compiled = compile_condition(tree)
    if contains_threshold(compiled.root):
        raise UnsupportedGateError(
            "THRESHOLD gates cannot be evaluated over ciphertexts; "
            "rewrite the condition with AND/OR gates"
        )
    return ClientEncryptedTree(root=_encrypt_node(compiled.root, keyset, params, rng or default_rng()))


def _encrypt_optional(
    tree: Optional[ConditionTree], keyset: ClientKeySet, params: PublicParams, rng: random.Random
) -> Optional[ClientEncryptedTree]:
    return None if tree is None else encrypt_condition(tree, keyset, params, rng)


def encrypt_role_assignment(
    policy: RoleAssignmentPolicy,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedPolicyBundle:
    rng = rng or default_rng()
    payload = RoleAssignmentPayload(
        requester_id=policy.requester_id,
        roles=[client_encrypt(tokenize_role(role), keyset, params, rng) for role in policy.roles],
        condition=_encrypt_optional(policy.condition, keyset, params, rng),
    )
    return ClientEncryptedPolicyBundle(
        kind=BundleKind.ROLE_ASSIGNMENT, issuer_id=keyset.user_id, payload=payload
    )


def encrypt_permission_assignment(
    policy: PermissionAssignmentPolicy,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedPolicyBundle:
    rng = rng or default_rng()
    payload = PermissionAssignmentPayload(
        role=client_encrypt(tokenize_role(policy.role), keyset, params, rng),
        permissions=[
            ClientPermission(
                action=client_encrypt(tokenize_action(p.action), keyset, params, rng),
                target=client_encrypt(tokenize_target(p.target), keyset, params, rng),
            )
            for p in policy.permissions
        ],
        condition=_encrypt_optional(policy.condition, keyset, params, rng),
        policy_id=policy.policy_id,
    )
    return ClientEncryptedPolicyBundle(
        kind=BundleKind.PERMISSION_ASSIGNMENT, issuer_id=keyset.user_id, payload=payload
    )


def encrypt_condition_attachment(
    attachment: ConditionAttachment,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedPolicyBundle:
    payload = ConditionPayload(
        attach_to=attachment.attach_to,
        target=attachment.target,
        tree=encrypt_condition(attachment.tree, keyset, params, rng),
    )
    return ClientEncryptedPolicyBundle(
        kind=BundleKind.CONDITION, issuer_id=keyset.user_id, payload=payload
    )


def encrypt_hierarchy(
    graph: RoleHierarchyGraph,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedPolicyBundle:
    """Every role becomes a (ciphertext, trapdoor) pair; edges keep their indices."""
    ensure_acyclic(graph)
    rng = rng or default_rng()
    index = {role: i for i, role in enumerate(graph.roles)}
    nodes = [
        ClientHierarchyNode(
            ciphertext=client_encrypt(tokenize_role(role), keyset, params, rng),
            trapdoor=client_trapdoor(tokenize_role(role), keyset, params, rng),
        )
        for role in graph.roles
    ]
    edges = [(index[derived], index[base]) for derived, base in graph.edges]
    return ClientEncryptedPolicyBundle(
        kind=BundleKind.HIERARCHY,
        issuer_id=keyset.user_id,
        payload=HierarchyPayload(nodes=nodes, edges=edges),
    )


def encrypt_policy(
    document: PolicyDocument,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientEncryptedPolicyBundle:
    if isinstance(document, RoleAssignmentPolicy):
        return encrypt_role_assignment(document, keyset, params, rng)
    if isinstance(document, PermissionAssignmentPolicy):
        return encrypt_permission_assignment(document, keyset, params, rng)
    if isinstance(document, RoleHierarchyGraph):
        return encrypt_hierarchy(document, keyset, params, rng)
    if isinstance(document, ConditionAttachment):
        return encrypt_condition_attachment(document, keyset, params, rng)
    raise InvalidPolicyError(f"unsupported policy document {type(document).__name__}")


# ── Requester ─────────────────────────────────────────────────────────────────


def make_activation_request(
    keyset: ClientKeySet,
    role: str,
    params: PublicParams,
    rng: random.Random | None = None,
    correlation_id: str | None = None,
) -> ActivationRequest:
    return ActivationRequest(
        requester_id=keyset.user_id,
        role_td=client_trapdoor(tokenize_role(role), keyset, params, rng),
        correlation_id=correlation_id or new_correlation_id(),
    )


def make_deactivation_request(
    keyset: ClientKeySet, role: str, params: PublicParams, rng: random.Random | None = None
) -> DeactivationRequest:
    return DeactivationRequest(
        requester_id=keyset.user_id,
        role_td=client_trapdoor(tokenize_role(role), keyset, params, rng),
    )


def make_access_request(
    keyset: ClientKeySet,
    role: str,
    action: str,
    target: str,
    params: PublicParams,
    rng: random.Random | None = None,
    correlation_id: str | None = None,
) -> AccessRequest:
    rng = rng or default_rng()
    return AccessRequest(
        requester_id=keyset.user_id,
        role_td=client_trapdoor(tokenize_role(role), keyset, params, rng),
        action_td=client_trapdoor(tokenize_action(action), keyset, params, rng),
        target_td=client_trapdoor(tokenize_target(target), keyset, params, rng),
        correlation_id=correlation_id or new_correlation_id(),
    )


# ── PIP ───────────────────────────────────────────────────────────────────────


def pip_collect(
    assertions: Iterable[AttributeAssertion],
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> list[ClientTrapdoor]:
    """One trapdoor per string attribute, bit_width trapdoors per numeric one."""
    rng = rng or default_rng()
    return [client_trapdoor(token, keyset, params, rng) for token in tokenize_assertions(assertions)]


def make_attribute_batch(
    assertions: Iterable[AttributeAssertion],
    keyset: ClientKeySet,
    params: PublicParams,
    correlation_id: str,
    rng: random.Random | None = None,
) -> AttributeBatch:
    return AttributeBatch(
        pip_id=keyset.user_id,
        correlation_id=correlation_id,
        trapdoors=pip_collect(assertions, keyset, params, rng),
    )
