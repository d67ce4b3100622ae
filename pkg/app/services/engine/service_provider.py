"""
app/services/engine/service_provider.py

The honest-but-curious service provider: Administration Point, Key Store,
Policy Store, Session, PEP and PDP over one set of stores.

Only server key halves and public parameters ever reach this object.
"""

from __future__ import annotations

import contextlib
import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

from Crypto.Hash import SHA256

from app.core.exceptions import (
    EngineNotConfiguredError,
    InvalidParametersError,
    KeyNotFoundError,
    MalformedBundleError,
    MalformedElementError,
    UnsupportedGateError,
)
from app.models.enums import DenyReason, Gate
from app.schemas.bundles import (
    ClientEncryptedGate,
    ClientEncryptedLeaf,
    ClientEncryptedPolicyBundle,
    ClientEncryptedTree,
    ConditionPayload,
    HierarchyPayload,
    PermissionAssignmentPayload,
    RoleAssignmentPayload,
    ServerEncryptedGate,
    ServerEncryptedLeaf,
    ServerEncryptedTree,
    StoredHierarchy,
    StoredHierarchyNode,
    StoredPermission,
    StoredPermissionAssignment,
    StoredRoleAssignment,
    payload_counts,
)
from app.schemas.crypto import (
    ClientTrapdoor,
    PublicParams,
    ServerCiphertext,
    ServerKeySet,
    ServerTrapdoor,
)
from app.schemas.requests import (
    AccessRequest,
    ActivationRequest,
    AttributeBatch,
    DeactivationRequest,
    Decision,
    DeployResult,
)
from app.schemas.snapshot import StoreSnapshot
from app.services.crypto.scheme import server_reencrypt, server_trapdoor
from app.services.engine import evaluation
from app.services.engine.batch_ledger import ConsumedBatchLedger
from app.services.engine.evaluation import EvaluationStats
from app.services.engine.key_store import KeyStore
from app.services.engine.policy_store import PolicyStore, canonical_json, new_policy_id
from app.services.engine.session_store import SessionStore

logger = logging.getLogger(__name__)


class AttributeSource(Protocol):
    """Where the PDP gets the PIP's batch for a pending decision."""

    def fetch(self, correlation_id: str, requester_id: str) -> Optional[AttributeBatch]: ...


@dataclass(frozen=True)
class ConditionUpdate:
    attach_to: str
    target: str
    tree: ServerEncryptedTree


StoredPolicy = Union[StoredRoleAssignment, StoredPermissionAssignment, StoredHierarchy, ConditionUpdate]


@dataclass
class _Attributes:
    """Lazily fetched, server-completed attribute trapdoors for one request."""

    correlation_id: str
    requester_id: str
    supplied: Optional[AttributeBatch] = None
    completed: Optional[list[ServerTrapdoor]] = None
    resolved: bool = False
    unavailable: bool = False


class ServiceProvider:
    def __init__(
        self,
        params: Optional[PublicParams] = None,
        session_ttl_seconds: Optional[float] = None,
        attribute_source: Optional[AttributeSource] = None,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self._params = params
        self.key_store = KeyStore()
        self.policy_store = PolicyStore()
        self.sessions = SessionStore(session_ttl_seconds)
        self.consumed_batches = ConsumedBatchLedger()
        self.attribute_source = attribute_source
        self.clock = clock
        self._admin_lock = threading.RLock()
        self.pep = PolicyEnforcementPoint(self)
        self.pdp = PolicyDecisionPoint(self)

    # ── Parameters and keys ───────────────────────────────────────────────────

    @property
    def params(self) -> PublicParams:
        if self._params is None:
            raise EngineNotConfiguredError("no public parameters installed")
        return self._params

    @property
    def configured(self) -> bool:
        return self._params is not None

    def install_params(self, params: PublicParams) -> None:
        with self._admin_lock:
            if self._params == params:
                return
            if self._params is not None and (len(self.key_store) or not self.policy_store.is_empty()):
                raise InvalidParametersError(
                    "the store already holds material under different public parameters"
                )
            self._params = params
        logger.info("installed public parameters (|p|=%d bits)", params.p.bit_length())

    def install_keyset(self, skey: ServerKeySet) -> None:
        self.key_store.install(skey)

    def revoke_user(self, user_id: str) -> bool:
        """Deletes the server half; no stored policy is touched."""
        removed = self.key_store.remove(user_id)
        if removed:
            dropped = self.sessions.drop_requester(user_id)
            logger.info("revoked user %r (%d active role(s) dropped)", user_id, dropped)
        else:
            logger.info("revocation of unknown user %r ignored", user_id)
        return removed

    def _complete(self, td: ClientTrapdoor, skey: ServerKeySet, stats: Optional[EvaluationStats]) -> ServerTrapdoor:
        if stats is not None:
            stats.completions += 1
        return server_trapdoor(td, skey, self.params)

    def complete_trapdoor(
        self, td: ClientTrapdoor, user_id: str, stats: Optional[EvaluationStats] = None
    ) -> ServerTrapdoor:
        """td*(e) → td(e) under the user's server key half."""
        return self._complete(td, self.key_store.get(user_id), stats)

    # ── Administration Point ──────────────────────────────────────────────────

    def reencrypt_tree(self, tree: Optional[ClientEncryptedTree], skey: ServerKeySet) -> Optional[ServerEncryptedTree]:
        if tree is None:
            return None

        def convert(node: Union[ClientEncryptedLeaf, ClientEncryptedGate]) -> Union[ServerEncryptedLeaf, ServerEncryptedGate]:
            if isinstance(node, ClientEncryptedLeaf):
                return ServerEncryptedLeaf(ciphertext=server_reencrypt(node.ciphertext, skey, self.params))
            if node.gate is Gate.THRESHOLD:
                raise UnsupportedGateError("THRESHOLD gates cannot be deployed for encrypted evaluation")
            return ServerEncryptedGate(gate=node.gate, children=[convert(c) for c in node.children])

        return ServerEncryptedTree(root=convert(tree.root))

    def reencrypt_bundle(self, bundle: ClientEncryptedPolicyBundle) -> StoredPolicy:
        """Second encryption round under the issuer's server key half."""
        skey = self.key_store.get(bundle.issuer_id)
        payload = bundle.payload
        try:
            if isinstance(payload, RoleAssignmentPayload):
                return StoredRoleAssignment(
                    requester_id=payload.requester_id,
                    issuer_id=bundle.issuer_id,
                    roles=[server_reencrypt(ct, skey, self.params) for ct in payload.roles],
                    condition=self.reencrypt_tree(payload.condition, skey),
                )
            if isinstance(payload, PermissionAssignmentPayload):
                return StoredPermissionAssignment(
                    policy_id=payload.policy_id or new_policy_id(),
                    issuer_id=bundle.issuer_id,
                    role=server_reencrypt(payload.role, skey, self.params),
                    permissions=[
                        StoredPermission(
                            action=server_reencrypt(p.action, skey, self.params),
                            target=server_reencrypt(p.target, skey, self.params),
                        )
                        for p in payload.permissions
                    ],
                    condition=self.reencrypt_tree(payload.condition, skey),
                )
            if isinstance(payload, ConditionPayload):
                return ConditionUpdate(
                    attach_to=payload.attach_to,
                    target=payload.target,
                    tree=self.reencrypt_tree(payload.tree, skey),
                )
            if isinstance(payload, HierarchyPayload):
                self._check_acyclic(payload)
                return StoredHierarchy(
                    issuer_id=bundle.issuer_id,
                    nodes=[
                        StoredHierarchyNode(
                            ciphertext=server_reencrypt(node.ciphertext, skey, self.params),
                            trapdoor=server_trapdoor(node.trapdoor, skey, self.params),
                        )
                        for node in payload.nodes
                    ],
                    edges=list(payload.edges),
                )
        except MalformedElementError as exc:
            raise MalformedBundleError(f"bundle from {bundle.issuer_id!r} is malformed: {exc}") from exc
        raise MalformedBundleError(f"unsupported bundle kind {bundle.kind.value!r}")

    @staticmethod
    def _check_acyclic(payload: HierarchyPayload) -> None:
        bases: dict[int, list[int]] = {}
        for derived, base in payload.edges:
            bases.setdefault(derived, []).append(base)
        state: dict[int, int] = {}  # 1 = on stack, 2 = done

        for root in range(len(payload.nodes)):
            if root in state:
                continue
            stack = [(root, iter(bases.get(root, [])))]
            state[root] = 1
            while stack:
                node, children = stack[-1]
                child = next(children, None)
                if child is None:
                    state[node] = 2
                    stack.pop()
                elif state.get(child) == 1:
                    raise MalformedBundleError("hierarchy bundle contains a cycle")
                elif child not in state:
                    state[child] = 1
                    stack.append((child, iter(bases.get(child, []))))

    def deploy(self, bundle: ClientEncryptedPolicyBundle) -> DeployResult:
        stored = self.reencrypt_bundle(bundle)
        ciphertexts, trapdoors = payload_counts(bundle.payload)
        policy_id: Optional[str] = None
        if isinstance(stored, StoredRoleAssignment):
            self.policy_store.put_role_assignment(stored)
            policy_id = stored.requester_id
        elif isinstance(stored, StoredPermissionAssignment):
            self.policy_store.put_permission_assignment(stored)
            policy_id = stored.policy_id
        elif isinstance(stored, StoredHierarchy):
            self.policy_store.set_hierarchy(stored)
        else:
            self.policy_store.attach_condition(stored.attach_to, stored.target, stored.tree)
            policy_id = stored.target
        logger.info(
            "deployed %s bundle from %r (%d ciphertexts, %d trapdoors)",
            bundle.kind.value, bundle.issuer_id, ciphertexts, trapdoors,
        )
        return DeployResult(
            kind=bundle.kind.value,
            issuer_id=bundle.issuer_id,
            policy_id=policy_id,
            stored_ciphertexts=ciphertexts,
            stored_trapdoors=trapdoors,
        )

    def remove_role_assignment(self, requester_id: str) -> None:
        self.policy_store.remove_role_assignment(requester_id)
        logger.info("removed role assignment for %r", requester_id)

    def remove_permission_assignment(self, policy_id: str) -> None:
        self.policy_store.remove_permission_assignment(policy_id)
        logger.info("removed permission assignment %s", policy_id)

    def remove_hierarchy(self) -> None:
        self.policy_store.remove_hierarchy()
        logger.info("removed role hierarchy")

    # ── Searches over client trapdoors ────────────────────────────────────────

    def search_role(
        self,
        role_td: ClientTrapdoor,
        ciphertexts: Sequence[ServerCiphertext],
        requester_id: str,
        stats: Optional[EvaluationStats] = None,
    ) -> tuple[bool, ServerTrapdoor]:
        """Completes the trapdoor once and returns it for reuse downstream."""
        skey = self.key_store.get(requester_id)
        completed = self._complete(role_td, skey, stats)
        return evaluation.search_role(completed, ciphertexts, self.params, stats), completed

    def search_permission(
        self,
        action_td: ClientTrapdoor,
        target_td: ClientTrapdoor,
        permissions: Sequence[StoredPermission],
        requester_id: str,
        stats: Optional[EvaluationStats] = None,
    ) -> bool:
        skey = self.key_store.get(requester_id)
        action = self._complete(action_td, skey, stats)
        target = self._complete(target_td, skey, stats)
        return evaluation.search_permission(action, target, permissions, self.params, stats)

    def evaluate_condition(
        self,
        trapdoors: Sequence[ClientTrapdoor],
        tree: ServerEncryptedTree,
        pip_id: str,
        stats: Optional[EvaluationStats] = None,
    ) -> bool:
        skey = self.key_store.get(pip_id)
        completed = [self._complete(td, skey, stats) for td in trapdoors]
        return evaluation.evaluate_condition(completed, tree, self.params, stats)

    def hierarchy_bases(
        self, role_td: ServerTrapdoor, stats: Optional[EvaluationStats] = None
    ) -> list[ServerTrapdoor]:
        return evaluation.hierarchy_bases(role_td, self.policy_store.hierarchy(), self.params, stats)

    # ── Contextual attributes ─────────────────────────────────────────────────

    def _condition_holds(
        self,
        tree: ServerEncryptedTree,
        attrs: _Attributes,
        stats: Optional[EvaluationStats],
    ) -> Optional[bool]:
        """None when no usable attribute batch arrived for this request."""
        if not attrs.resolved:
            attrs.resolved = True
            batch = attrs.supplied
            if batch is None and self.attribute_source is not None:
                batch = self.attribute_source.fetch(attrs.correlation_id, attrs.requester_id)
            if batch is None:
                logger.info("no attribute batch for decision %s", attrs.correlation_id)
                attrs.unavailable = True
            elif batch.correlation_id != attrs.correlation_id:
                logger.warning(
                    "attribute batch %s offered for decision %s refused",
                    batch.correlation_id,
                    attrs.correlation_id,
                )
                attrs.unavailable = True
            elif not self.consumed_batches.consume(batch):
                logger.warning("replayed attribute batch %s refused", batch.correlation_id)
                attrs.unavailable = True
            else:
                try:
                    skey = self.key_store.get(batch.pip_id)
                except KeyNotFoundError:
                    logger.warning("attribute batch from unknown or revoked PIP %r ignored", batch.pip_id)
                    attrs.unavailable = True
                else:
                    attrs.completed = [self._complete(td, skey, stats) for td in batch.trapdoors]
        if attrs.unavailable:
            return None
        return evaluation.evaluate_condition(attrs.completed or [], tree, self.params, stats)

    # ── PEP / PDP flows ───────────────────────────────────────────────────────

    def activate_role(
        self,
        req: ActivationRequest,
        attributes: Optional[AttributeBatch] = None,
        stats: Optional[EvaluationStats] = None,
    ) -> Decision:
        if req.requester_id not in self.key_store:
            raise KeyNotFoundError(req.requester_id)
        entry = self.policy_store.role_assignment_for(req.requester_id)
        if entry is None:
            return self._log(req.requester_id, "activate", Decision.deny(DenyReason.NO_ROLE_MATCH))

        found, completed = self.search_role(req.role_td, entry.roles, req.requester_id, stats)
        if not found:
            return self._log(req.requester_id, "activate", Decision.deny(DenyReason.NO_ROLE_MATCH))

        if entry.condition is not None:
            attrs = _Attributes(req.correlation_id, req.requester_id, supplied=attributes)
            holds = self._condition_holds(entry.condition, attrs, stats)
            if holds is None:
                return self._log(req.requester_id, "activate", Decision.deny(DenyReason.CONDITION_UNRESOLVED))
            if not holds:
                return self._log(req.requester_id, "activate", Decision.deny(DenyReason.CONDITION_FALSE))

        self.sessions.activate(req.requester_id, completed, self.clock())
        return self._log(req.requester_id, "activate", Decision.permit())

    def deactivate_role(self, req: DeactivationRequest) -> bool:
        skey = self.key_store.get(req.requester_id)
        removed = self.sessions.deactivate(req.requester_id, self._complete(req.role_td, skey, None))
        logger.info("deactivate for %r: %s", req.requester_id, "removed" if removed else "not active")
        return removed

    def authorize_access(
        self,
        req: AccessRequest,
        attributes: Optional[AttributeBatch] = None,
        stats: Optional[EvaluationStats] = None,
    ) -> Decision:
        skey = self.key_store.get(req.requester_id)
        role = self._complete(req.role_td, skey, stats)
        if not evaluation.search_session(role, self.sessions.active_roles(req.requester_id, self.clock())):
            return self._log(req.requester_id, "access", Decision.deny(DenyReason.NO_ACTIVE_ROLE))

        action = self._complete(req.action_td, skey, stats)
        target = self._complete(req.target_td, skey, stats)
        entries = self.policy_store.permission_entries()
        attrs = _Attributes(req.correlation_id, req.requester_id, supplied=attributes)
        outcome: dict[str, bool] = {"false": False, "unresolved": False}

        def permitted_for(candidate: ServerTrapdoor) -> bool:
            for entry in entries:
                # The completed role trapdoor is reused; no re-generation per entry.
                if not evaluation.search_role(candidate, [entry.role], self.params, stats):
                    continue
                if not evaluation.search_permission(action, target, entry.permissions, self.params, stats):
                    continue
                if entry.condition is None:
                    return True
                holds = self._condition_holds(entry.condition, attrs, stats)
                if holds:
                    return True
                outcome["unresolved" if holds is None else "false"] = True
            return False

        if permitted_for(role):
            return self._log(req.requester_id, "access", Decision.permit())
        for base in self.hierarchy_bases(role, stats):
            if permitted_for(base):
                return self._log(req.requester_id, "access", Decision.permit(via_base_role=True))

        if outcome["unresolved"]:
            reason = DenyReason.CONDITION_UNRESOLVED
        elif outcome["false"]:
            reason = DenyReason.CONDITION_FALSE
        else:
            reason = DenyReason.NO_PERMISSION
        return self._log(req.requester_id, "access", Decision.deny(reason))

    @staticmethod
    def _log(requester_id: str, flow: str, decision: Decision) -> Decision:
        logger.info(
            "%s for %r: %s%s",
            flow,
            requester_id,
            decision.outcome.value,
            f" ({decision.reason.value})" if decision.reason else "",
        )
        return decision

    # ── Sessions ──────────────────────────────────────────────────────────────

    def purge_sessions(self) -> int:
        return self.sessions.purge_expired(self.clock())

    # ── Snapshots ─────────────────────────────────────────────────────────────

    @contextlib.contextmanager
    def _frozen(self):
        with (
            self._admin_lock,
            self.key_store.lock,
            self.policy_store.lock,
            self.sessions.lock,
            self.consumed_batches.lock,
        ):
            yield

    def snapshot(self) -> StoreSnapshot:
        """Consistent point-in-time copy of every store."""
        with self._frozen():
            roles, permissions, hierarchy = self.policy_store.export()
            return StoreSnapshot(
                params=self._params,
                key_store=self.key_store.entries(),
                role_repository=roles,
                permission_repository=permissions,
                hierarchy=hierarchy,
                sessions=self.sessions.export(),
                consumed_batches=self.consumed_batches.export(),
            )

    def restore(self, snapshot: StoreSnapshot) -> None:
        with self._frozen():
            self._params = snapshot.params
            self.key_store.replace_all(snapshot.key_store)
            self.policy_store.replace_all(
                snapshot.role_repository, snapshot.permission_repository, snapshot.hierarchy
            )
            self.sessions.replace_all(snapshot.sessions)
            self.consumed_batches.replace_all(snapshot.consumed_batches)
        logger.info(
            "restored store: %d key set(s), %s",
            len(snapshot.key_store),
            self.policy_store.counts(),
        )

    def store_digest(self) -> str:
        return snapshot_digest(self.snapshot())

    def policy_digest(self) -> str:
        return self.policy_store.digest()


def snapshot_digest(snapshot: StoreSnapshot) -> str:
    return SHA256.new(canonical_json(snapshot.model_dump(mode="json"))).hexdigest()


class PolicyEnforcementPoint:
    """Entry point for requesters: activation, deactivation, access."""

    def __init__(self, sp: ServiceProvider) -> None:
        self._sp = sp

    def activate(self, req: ActivationRequest, attributes: Optional[AttributeBatch] = None) -> Decision:
        return self._sp.activate_role(req, attributes)

    def deactivate(self, req: DeactivationRequest) -> bool:
        return self._sp.deactivate_role(req)

    def access(self, req: AccessRequest, attributes: Optional[AttributeBatch] = None) -> Decision:
        return self._sp.authorize_access(req, attributes)


class PolicyDecisionPoint:
    """Encrypted searches and condition evaluation, as the PEP consults them."""

    def __init__(self, sp: ServiceProvider) -> None:
        self._sp = sp

    def search_role(self, role_td: ClientTrapdoor, ciphertexts: Sequence[ServerCiphertext], requester_id: str):
        return self._sp.search_role(role_td, ciphertexts, requester_id)

    def search_permission(
        self,
        action_td: ClientTrapdoor,
        target_td: ClientTrapdoor,
        permissions: Sequence[StoredPermission],
        requester_id: str,
    ) -> bool:
        return self._sp.search_permission(action_td, target_td, permissions, requester_id)

    def evaluate_condition(
        self, trapdoors: Sequence[ClientTrapdoor], tree: ServerEncryptedTree, pip_id: str
    ) -> bool:
        return self._sp.evaluate_condition(trapdoors, tree, pip_id)

    def hierarchy_bases(self, role_td: ServerTrapdoor) -> list[ServerTrapdoor]:
        return self._sp.hierarchy_bases(role_td)
