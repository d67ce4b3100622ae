"""
app/services/engine/evaluation.py

Encrypted evaluation over server ciphertexts and completed trapdoors.
Nothing in this module ever sees x, x_i1 or the PRF key: it works with
ServerCiphertext / ServerTrapdoor values and public parameters only.

Lists are scanned in order and the first match wins.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from app.core.exceptions import UnsupportedGateError
from app.models.enums import Gate
from app.schemas.bundles import (
    ServerEncryptedGate,
    ServerEncryptedLeaf,
    ServerEncryptedTree,
    StoredHierarchy,
    StoredPermission,
)
from app.schemas.crypto import PublicParams, ServerCiphertext, ServerTrapdoor
from app.services.crypto.scheme import match


@dataclass
class EvaluationStats:
    """Operation counters; the benchmark reads these for its cost columns."""

    matches: int = 0
    completions: int = 0

    def reset(self) -> None:
        self.matches = 0
        self.completions = 0


def counted_match(
    ct: ServerCiphertext, td: ServerTrapdoor, params: PublicParams, stats: Optional[EvaluationStats] = None
) -> bool:
    if stats is not None:
        stats.matches += 1
    return match(ct, td, params)


# ── Searches ──────────────────────────────────────────────────────────────────


def search_role(
    role_td: ServerTrapdoor,
    ciphertexts: Sequence[ServerCiphertext],
    params: PublicParams,
    stats: Optional[EvaluationStats] = None,
) -> bool:
    return any(counted_match(ct, role_td, params, stats) for ct in ciphertexts)


def search_session(role_td: ServerTrapdoor, active: Sequence[ServerTrapdoor]) -> bool:
    # Session entries are completed trapdoors; T is deterministic per role.
    return any(entry.t == role_td.t for entry in active)


def search_permission(
    action_td: ServerTrapdoor,
    target_td: ServerTrapdoor,
    permissions: Sequence[StoredPermission],
    params: PublicParams,
    stats: Optional[EvaluationStats] = None,
) -> bool:
    """True iff some pair matches on action AND target."""
    return any(
        counted_match(perm.action, action_td, params, stats) and counted_match(perm.target, target_td, params, stats)
        for perm in permissions
    )


# ── Condition trees ───────────────────────────────────────────────────────────


@dataclass
class DecisionNode:
    """A condition tree node with its decision field."""

    gate: Optional[Gate] = None
    children: list["DecisionNode"] = field(default_factory=list)
    decision: Optional[bool] = None


def annotate_leaves(
    node: Union[ServerEncryptedLeaf, ServerEncryptedGate],
    trapdoors: Sequence[ServerTrapdoor],
    params: PublicParams,
    stats: Optional[EvaluationStats] = None,
) -> DecisionNode:
    """Leaf decision = some completed attribute trapdoor matches its ciphertext."""
    if isinstance(node, ServerEncryptedLeaf):
        hit = any(counted_match(node.ciphertext, td, params, stats) for td in trapdoors)
        return DecisionNode(decision=hit)
    return DecisionNode(
        gate=node.gate,
        children=[annotate_leaves(child, trapdoors, params, stats) for child in node.children],
    )


def evaluate_tree(node: DecisionNode) -> bool:
    """AND: all children true. OR: at least one. Decisions are memoised on the node."""
    if node.decision is not None:
        return node.decision
    if node.gate is Gate.THRESHOLD or node.gate is None:
        raise UnsupportedGateError("only AND and OR gates can be evaluated over ciphertexts")
    t = len(node.children)
    m = sum(1 for child in node.children if evaluate_tree(child))
    node.decision = m == t if node.gate is Gate.AND else m >= 1
    return node.decision


def evaluate_condition(
    trapdoors: Sequence[ServerTrapdoor],
    tree: ServerEncryptedTree,
    params: PublicParams,
    stats: Optional[EvaluationStats] = None,
) -> bool:
    return evaluate_tree(annotate_leaves(tree.root, trapdoors, params, stats))


# ── Role hierarchy ────────────────────────────────────────────────────────────


def hierarchy_bases(
    role_td: ServerTrapdoor,
    hierarchy: Optional[StoredHierarchy],
    params: PublicParams,
    stats: Optional[EvaluationStats] = None,
) -> list[ServerTrapdoor]:
    """
    Finds the node whose ciphertext matches role_td and returns the stored
    trapdoors of every base role reachable from it, breadth-first.
    """
    if hierarchy is None:
        return []
    start = next(
        (i for i, node in enumerate(hierarchy.nodes) if counted_match(node.ciphertext, role_td, params, stats)),
        None,
    )
    if start is None:
        return []
    bases: dict[int, list[int]] = {}
    for derived, base in hierarchy.edges:
        bases.setdefault(derived, []).append(base)
    seen, order, queue = {start}, [], deque([start])
    while queue:
        for base in bases.get(queue.popleft(), []):
            if base not in seen:
                seen.add(base)
                order.append(hierarchy.nodes[base].trapdoor)
                queue.append(base)
    return order
