"""
app/bench/workload.py

Key material, providers and policy builders shared by the scenarios. Nothing
in here is timed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, TypeVar

from app.schemas.crypto import ClientKeySet, PublicParams, ServerKeySet
from app.schemas.policy import (
    AttributeAssertion,
    CompareNode,
    ConditionNode,
    ConditionTree,
    EqualsNode,
    GateNode,
    Permission,
    PermissionAssignmentPolicy,
    RoleAssignmentPolicy,
    RoleHierarchyGraph,
)
from app.models.enums import ComparisonOp, Gate
from app.services import client_toolkit
from app.services.client_toolkit import KeyAuthority
from app.services.crypto.group import SecurityParam
from app.services.engine import ServiceProvider

T = TypeVar("T")

ADMIN_ID = "admin"
REQUESTER_ID = "requester"
PIP_ID = "pip"
NUMERIC_BIT_WIDTH = 8


def timed(fn: Callable[[], T]) -> tuple[T, float]:
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


@dataclass
class BenchContext:
    params: PublicParams
    admin: ClientKeySet
    requester: ClientKeySet
    pip: ClientKeySet
    server_keys: list[ServerKeySet]
    rng: random.Random = field(default_factory=random.Random)

    @classmethod
    def create(cls, profile: SecurityParam = "test", seed: int = 1) -> "BenchContext":
        rng = random.Random(seed)
        authority = KeyAuthority.create(profile, rng=rng)
        keys = {user: authority.enroll(user) for user in (ADMIN_ID, REQUESTER_ID, PIP_ID)}
        return cls(
            params=authority.params,
            admin=keys[ADMIN_ID][0],
            requester=keys[REQUESTER_ID][0],
            pip=keys[PIP_ID][0],
            server_keys=[server for _, server in keys.values()],
            rng=rng,
        )

    def provider(self) -> ServiceProvider:
        sp = ServiceProvider(params=self.params)
        for skey in self.server_keys:
            sp.install_keyset(skey)
        return sp

    def deploy(self, sp: ServiceProvider, *documents) -> None:
        for doc in documents:
            sp.deploy(client_toolkit.encrypt_policy(doc, self.admin, self.params, self.rng))


# ── Policy builders ───────────────────────────────────────────────────────────


def role_names(n: int, offset: int = 0) -> list[str]:
    return [f"role-{i}" for i in range(offset, offset + n)]


def permissions(n: int, tag: str = "") -> list[Permission]:
    return [Permission(action=f"action-{i}{tag}", target=f"target-{i}{tag}") for i in range(n)]


def role_assignment(n_roles: int, condition: ConditionTree | None = None) -> RoleAssignmentPolicy:
    return RoleAssignmentPolicy(requester_id=REQUESTER_ID, roles=role_names(n_roles), condition=condition)


def permission_assignment(
    role: str, n_permissions: int, condition: ConditionTree | None = None, tag: str = ""
) -> PermissionAssignmentPolicy:
    return PermissionAssignmentPolicy(role=role, permissions=permissions(n_permissions, tag), condition=condition)


def chain_hierarchy(roles: list[str]) -> RoleHierarchyGraph:
    """roles[i] extends roles[i-1]; the last role inherits from all others."""
    return RoleHierarchyGraph(
        roles=roles,
        extends={derived: [base] for base, derived in zip(roles, roles[1:])},
    )


def and_tree(nodes: list[ConditionNode]) -> ConditionTree:
    return ConditionTree(root=nodes[0] if len(nodes) == 1 else GateNode(gate=Gate.AND, children=nodes))


def string_comparisons(n: int) -> tuple[ConditionTree, list[AttributeAssertion]]:
    nodes = [EqualsNode(attribute=f"attr{i}", equals=f"value{i}") for i in range(n)]
    assertions = [AttributeAssertion(name=f"attr{i}", value=f"value{i}") for i in range(n)]
    return and_tree(nodes), assertions


def numeric_comparisons(
    n: int, bit_width: int = NUMERIC_BIT_WIDTH
) -> tuple[ConditionTree, list[AttributeAssertion]]:
    """'=' comparisons: exactly bit_width leaves each."""
    value = (1 << bit_width) - 1
    nodes = [
        CompareNode(attribute=f"num{i}", op=ComparisonOp.EQ, threshold=value, bit_width=bit_width)
        for i in range(n)
    ]
    assertions = [AttributeAssertion(name=f"num{i}", value=value, bit_width=bit_width) for i in range(n)]
    return and_tree(nodes), assertions


def comparisons(series: str, n: int) -> tuple[ConditionTree, list[AttributeAssertion]]:
    return string_comparisons(n) if series == "string" else numeric_comparisons(n)
