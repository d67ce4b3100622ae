"""
app/services/policy_model.py

Plaintext side of the policy model.

  • canonical element tokens   role:/action:/target:/subject:/attr:
  • bag-of-bits numeric tokens attr:AT#5:0****, one revealed bit per token
  • comparison expansion       <, >, =, <=, >= as AND/OR trees of bit leaves
  • plaintext evaluation       the reference semantics for encrypted evaluation
  • role hierarchy helpers     breadth-first base roles, cycle detection
"""

from __future__ import annotations

import json
import logging
from collections import deque
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Iterable, Iterator, Union

from pydantic import TypeAdapter, ValidationError

from app.core.exceptions import CycleDetectedError, InvalidAssertionError, InvalidPolicyError
from app.models.enums import ComparisonOp, Gate
from app.schemas.policy import (
    AttributeAssertion,
    CompareNode,
    ConditionNode,
    ConditionTree,
    EqualsNode,
    GateNode,
    LeafToken,
    RESERVED_NAME_CHARS,
    PolicyDocument,
    RoleHierarchyGraph,
)

logger = logging.getLogger(__name__)

CompiledNode = Union[LeafToken, GateNode]

ROLE_PREFIX = "role:"
ACTION_PREFIX = "action:"
TARGET_PREFIX = "target:"
SUBJECT_PREFIX = "subject:"
ATTRIBUTE_PREFIX = "attr:"

_POLICY_DOCUMENT = TypeAdapter(PolicyDocument)


# ── Canonical element tokens ──────────────────────────────────────────────────


def _token(prefix: str, name: str) -> str:
    if not name:
        raise InvalidPolicyError(f"empty name for a {prefix[:-1]} element")
    return f"{prefix}{name}"


def tokenize_role(name: str) -> str:
    return _token(ROLE_PREFIX, name)


def tokenize_action(name: str) -> str:
    return _token(ACTION_PREFIX, name)


def tokenize_target(name: str) -> str:
    return _token(TARGET_PREFIX, name)


def tokenize_subject(name: str) -> str:
    return _token(SUBJECT_PREFIX, name)


def _reserved_in(name: str) -> str:
    return "".join(sorted(RESERVED_NAME_CHARS.intersection(name)))


def _attribute_name(name: str) -> str:
    if _reserved_in(name):
        raise InvalidAssertionError(f"attribute name {name!r} may not contain {_reserved_in(name)!r}")
    return name


def string_attribute_token(name: str, value: str) -> str:
    _attribute_name(name)
    return f"{ATTRIBUTE_PREFIX}{name}={value}"


def bit_token(name: str, bit_width: int, position: int, bit: int) -> str:
    """Pattern token revealing one bit; position 0 is the most significant."""
    _attribute_name(name)
    pattern = ["*"] * bit_width
    pattern[position] = "1" if bit else "0"
    return f"{ATTRIBUTE_PREFIX}{name}#{bit_width}:{''.join(pattern)}"


def tokenize_string_attribute(assertion: AttributeAssertion) -> str:
    if assertion.is_numeric:
        raise InvalidAssertionError(f"attribute {assertion.name!r} is numeric")
    if not assertion.name or not assertion.value:
        raise InvalidAssertionError("string attributes need a non-empty name and value")
    return string_attribute_token(assertion.name, assertion.value)


def tokenize_numeric_attribute(assertion: AttributeAssertion) -> list[str]:
    if not assertion.is_numeric:
        raise InvalidAssertionError(f"attribute {assertion.name!r} is not numeric")
    if not assertion.name:
        raise InvalidAssertionError("numeric attributes need a name")
    width, value = assertion.bit_width, assertion.value
    if not 0 <= value < 1 << width:
        raise InvalidAssertionError(f"{value} does not fit in {width} bits")
    return [
        bit_token(assertion.name, width, pos, (value >> (width - 1 - pos)) & 1)
        for pos in range(width)
    ]


def tokenize_assertion(assertion: AttributeAssertion) -> list[str]:
    if assertion.is_numeric:
        return tokenize_numeric_attribute(assertion)
    return [tokenize_string_attribute(assertion)]


def tokenize_assertions(assertions: Iterable[AttributeAssertion]) -> list[str]:
    return [token for a in assertions for token in tokenize_assertion(a)]


# ── Numeric comparisons ───────────────────────────────────────────────────────


def _leaf(name: str, width: int, position: int, bit: int) -> LeafToken:
    return LeafToken(token=bit_token(name, width, position, bit))


def _gate(gate: Gate, children: list[CompiledNode]) -> CompiledNode:
    if len(children) == 1:
        return children[0]
    return GateNode(gate=gate, children=children)


def _tautology(name: str, width: int) -> CompiledNode:
    return GateNode(gate=Gate.OR, children=[_leaf(name, width, 0, 0), _leaf(name, width, 0, 1)])


def _contradiction(name: str, width: int) -> CompiledNode:
    return GateNode(gate=Gate.AND, children=[_leaf(name, width, 0, 0), _leaf(name, width, 0, 1)])


def _prefix_branches(name: str, width: int, threshold: int, greater: bool) -> CompiledNode:
    # greater: v > t iff some position i has t_i = 0, v_i = 1 and v_j = 1
    # wherever t_j = 1 above i. The "<" case is the mirror image.
    pivot, anchor = (0, 1) if greater else (1, 0)
    bits = [(threshold >> (width - 1 - pos)) & 1 for pos in range(width)]
    branches: list[CompiledNode] = []
    for pos, t_bit in enumerate(bits):
        if t_bit != pivot:
            continue
        prefix = [_leaf(name, width, j, anchor) for j in range(pos) if bits[j] == anchor]
        branches.append(_gate(Gate.AND, prefix + [_leaf(name, width, pos, anchor)]))
    if not branches:
        return _contradiction(name, width)
    return _gate(Gate.OR, branches)


def expand_numeric_comparison(
    name: str, op: ComparisonOp | str, threshold: int, bit_width: int
) -> CompiledNode:
    """
    Subtree over bit-pattern leaves that is true under
    tokenize_numeric_attribute(v) iff ``v op threshold``.
    """
    op = ComparisonOp(op)
    if not name:
        raise InvalidPolicyError("comparison needs an attribute name")
    if _reserved_in(name):
        raise InvalidPolicyError(f"attribute name {name!r} may not contain {_reserved_in(name)!r}")
    if not 2 <= bit_width <= 32:
        raise InvalidPolicyError(f"bit width {bit_width} outside [2, 32]")
    top = (1 << bit_width) - 1
    if not 0 <= threshold <= top:
        raise InvalidPolicyError(f"threshold {threshold} does not fit in {bit_width} bits")

    if op is ComparisonOp.EQ:
        bits = [(threshold >> (bit_width - 1 - pos)) & 1 for pos in range(bit_width)]
        return GateNode(
            gate=Gate.AND,
            children=[_leaf(name, bit_width, pos, bit) for pos, bit in enumerate(bits)],
        )
    if op is ComparisonOp.GT:
        return _prefix_branches(name, bit_width, threshold, greater=True)
    if op is ComparisonOp.LT:
        return _prefix_branches(name, bit_width, threshold, greater=False)
    if op is ComparisonOp.GE:
        if threshold == 0:
            return _tautology(name, bit_width)
        return _prefix_branches(name, bit_width, threshold - 1, greater=True)
    # LE
    if threshold == top:
        return _tautology(name, bit_width)
    return _prefix_branches(name, bit_width, threshold + 1, greater=False)


# ── Condition trees ───────────────────────────────────────────────────────────


def _compile_node(node: ConditionNode) -> CompiledNode:
    if isinstance(node, LeafToken):
        return node
    if isinstance(node, EqualsNode):
        return LeafToken(token=string_attribute_token(node.attribute, node.equals))
    if isinstance(node, CompareNode):
        return expand_numeric_comparison(node.attribute, node.op, node.threshold, node.bit_width)
    return GateNode(gate=node.gate, k=node.k, children=[_compile_node(c) for c in node.children])


def compile_condition(tree: ConditionTree) -> ConditionTree:
    """Rewrites equals/compare sugar into leaf tokens and gates."""
    return ConditionTree(root=_compile_node(tree.root))


def iter_leaves(node: ConditionNode) -> Iterator[LeafToken]:
    if isinstance(node, LeafToken):
        yield node
    elif isinstance(node, GateNode):
        for child in node.children:
            yield from iter_leaves(child)
    else:
        yield from iter_leaves(_compile_node(node))


def leaf_count(tree: ConditionTree) -> int:
    return sum(1 for _ in iter_leaves(tree.root))


def contains_threshold(node: ConditionNode) -> bool:
    if isinstance(node, GateNode):
        return node.gate is Gate.THRESHOLD or any(contains_threshold(c) for c in node.children)
    return False


def _evaluate_node(node: ConditionNode, tokens: frozenset[str]) -> bool:
    if isinstance(node, LeafToken):
        return node.token in tokens
    if not isinstance(node, GateNode):
        return _evaluate_node(_compile_node(node), tokens)
    results = [_evaluate_node(child, tokens) for child in node.children]
    if node.gate is Gate.AND:
        return all(results)
    if node.gate is Gate.OR:
        return any(results)
    return sum(results) >= node.k


def evaluate_plaintext(
    tree: ConditionTree, assertions: Iterable[AttributeAssertion | str]
) -> bool:
    """Leaf true iff its token is among the tokenized assertions."""
    tokens: set[str] = set()
    for item in assertions:
        if isinstance(item, str):
            tokens.add(item)
        else:
            tokens.update(tokenize_assertion(item))
    return _evaluate_node(tree.root, frozenset(tokens))


# ── Role hierarchy ────────────────────────────────────────────────────────────


def ensure_acyclic(graph: RoleHierarchyGraph) -> list[str]:
    """Returns the roles bases-first; raises CycleDetectedError otherwise."""
    sorter = TopologicalSorter({role: graph.extends.get(role, []) for role in graph.roles})
    try:
        return list(sorter.static_order())
    except CycleError as exc:
        cycle = exc.args[1] if len(exc.args) > 1 else []
        raise CycleDetectedError(f"role hierarchy has a cycle: {' -> '.join(cycle)}") from exc


def topological_bases(graph: RoleHierarchyGraph, role: str) -> list[str]:
    """Transitively reachable base roles, breadth-first, without ``role`` itself."""
    if role not in graph.roles:
        raise InvalidPolicyError(f"role {role!r} is not in the hierarchy")
    seen = {role}
    order: list[str] = []
    queue = deque([role])
    while queue:
        for base in graph.extends.get(queue.popleft(), []):
            if base not in seen:
                seen.add(base)
                order.append(base)
                queue.append(base)
    return order


# ── Policy files ──────────────────────────────────────────────────────────────


def parse_policy_documents(data: object) -> list[PolicyDocument]:
    if isinstance(data, dict) and "policies" in data:
        items = data["policies"]
    elif isinstance(data, list):
        items = data
    else:
        items = [data]
    if not items:
        raise InvalidPolicyError("policy file holds no documents")
    try:
        return [_POLICY_DOCUMENT.validate_python(item) for item in items]
    except ValidationError as exc:
        raise InvalidPolicyError(str(exc)) from exc


def load_policy_document(path: str | Path) -> list[PolicyDocument]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidPolicyError(f"cannot read policy file {path}: {exc}") from exc
    documents = parse_policy_documents(data)
    logger.debug("loaded %d policy document(s) from %s", len(documents), path)
    return documents
