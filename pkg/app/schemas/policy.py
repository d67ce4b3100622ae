"""
app/schemas/policy.py

Plaintext policy documents as the Admin User writes them.

Condition trees are JSON ASTs. A node is one of
  • {"token": "attr:Location=Cardiology-ward"}                 leaf
  • {"gate": "AND"|"OR"|"THRESHOLD", "k": 2, "children": [...]} gate
  • {"attribute": "Location", "equals": "Cardiology-ward"}     string sugar
  • {"attribute": "AT", "op": ">", "threshold": 9, "bit_width": 5}
                                                                numeric sugar
Sugar nodes are compiled to leaves/gates by policy_model.compile_condition
before anything is encrypted.
"""

from __future__ import annotations

from typing import Annotated, Any, ClassVar, Literal, Optional, Union

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Discriminator,
    Field,
    StrictInt,
    Tag,
    field_validator,
    model_validator,
)

from app.models.enums import ComparisonOp, Gate

MIN_BIT_WIDTH = 2
MAX_BIT_WIDTH = 32

# Separators of the attribute token grammar (attr:NAME=VALUE, attr:NAME#W:PATTERN).
RESERVED_NAME_CHARS = frozenset("=#:")


def _attribute_name(name: str) -> str:
    bad = sorted(RESERVED_NAME_CHARS.intersection(name))
    if bad:
        raise ValueError(f"attribute name {name!r} may not contain {' '.join(bad)}")
    return name


AttributeName = Annotated[str, Field(min_length=1), AfterValidator(_attribute_name)]


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    node_tag: ClassVar[str] = ""


class LeafToken(_Node):
    node_tag: ClassVar[str] = "leaf"

    token: str = Field(min_length=1)


class EqualsNode(_Node):
    node_tag: ClassVar[str] = "equals"

    attribute: AttributeName
    equals: str = Field(min_length=1)


class CompareNode(_Node):
    node_tag: ClassVar[str] = "compare"

    attribute: AttributeName
    op: ComparisonOp
    threshold: int = Field(ge=0)
    bit_width: int = Field(ge=MIN_BIT_WIDTH, le=MAX_BIT_WIDTH)

    @model_validator(mode="after")
    def _threshold_fits(self) -> "CompareNode":
        if self.threshold >= 1 << self.bit_width:
            raise ValueError(
                f"threshold {self.threshold} does not fit in {self.bit_width} bits"
            )
        return self


class GateNode(_Node):
    node_tag: ClassVar[str] = "gate"

    gate: Gate
    k: Optional[int] = None  # THRESHOLD only
    children: list[ConditionNode] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_k(self) -> "GateNode":
        if self.gate is Gate.THRESHOLD:
            if self.k is None or not 1 <= self.k <= len(self.children):
                raise ValueError("THRESHOLD gate needs 1 <= k <= number of children")
        elif self.k is not None:
            raise ValueError(f"{self.gate.value} gate does not take k")
        return self


def _node_tag(value: Any) -> Optional[str]:
    if isinstance(value, dict):
        for key, tag in (("gate", "gate"), ("token", "leaf"), ("equals", "equals"), ("op", "compare")):
            if key in value:
                return tag
        return None
    return getattr(value, "node_tag", None)


ConditionNode = Annotated[
    Union[
        Annotated[LeafToken, Tag("leaf")],
        Annotated[GateNode, Tag("gate")],
        Annotated[EqualsNode, Tag("equals")],
        Annotated[CompareNode, Tag("compare")],
    ],
    Discriminator(_node_tag),
]

GateNode.model_rebuild()


class ConditionTree(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    root: ConditionNode


class AttributeAssertion(BaseModel):
    """A contextual attribute value reported by the PIP."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: AttributeName
    value: Union[StrictInt, str]
    bit_width: Optional[int] = Field(default=None, ge=MIN_BIT_WIDTH, le=MAX_BIT_WIDTH)

    @model_validator(mode="after")
    def _numeric_range(self) -> "AttributeAssertion":
        if isinstance(self.value, int):
            if self.bit_width is None:
                raise ValueError("numeric attributes need a bit_width")
            if not 0 <= self.value < 1 << self.bit_width:
                raise ValueError(f"{self.value} does not fit in {self.bit_width} bits")
        elif self.bit_width is not None:
            raise ValueError("bit_width only applies to numeric attributes")
        return self

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.value, int)


def _unique(values: list, what: str) -> list:
    if len(set(values)) != len(values):
        raise ValueError(f"{what} must be unique")
    return values


class Permission(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    action: str = Field(min_length=1)
    target: str = Field(min_length=1)


class RoleAssignmentPolicy(BaseModel):
    """USER can be active in {R_1 … R_n} if CONDITION."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["role_assignment"] = "role_assignment"
    requester_id: str = Field(min_length=1)
    roles: list[Annotated[str, Field(min_length=1)]] = Field(min_length=1)
    condition: Optional[ConditionTree] = None

    @field_validator("roles")
    @classmethod
    def _unique_roles(cls, v: list[str]) -> list[str]:
        return _unique(v, "role names")


class PermissionAssignmentPolicy(BaseModel):
    """R can execute {(A_1, T_1) … (A_n, T_n)} if CONDITION."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["permission_assignment"] = "permission_assignment"
    role: str = Field(min_length=1)
    permissions: list[Permission] = Field(min_length=1)
    condition: Optional[ConditionTree] = None
    # Set to replace an entry that is already deployed.
    policy_id: Optional[str] = None

    @field_validator("permissions")
    @classmethod
    def _unique_permissions(cls, v: list[Permission]) -> list[Permission]:
        return _unique(v, "permission pairs")


class RoleHierarchyGraph(BaseModel):
    """Roles plus "derived extends [bases]" edges."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["hierarchy"] = "hierarchy"
    roles: list[Annotated[str, Field(min_length=1)]] = Field(default_factory=list)
    extends: dict[str, list[str]] = Field(default_factory=dict)

    @field_validator("roles")
    @classmethod
    def _unique_roles(cls, v: list[str]) -> list[str]:
        return _unique(v, "role names")

    @model_validator(mode="after")
    def _known_roles(self) -> "RoleHierarchyGraph":
        known = set(self.roles)
        for derived, bases in self.extends.items():
            unknown = {derived, *bases} - known
            if unknown:
                raise ValueError(f"edges reference unknown roles: {sorted(unknown)}")
        return self

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(derived, base) for derived, bases in self.extends.items() for base in bases]


class ConditionAttachment(BaseModel):
    """Attaches (or replaces) the condition of a deployed policy entry."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["condition"] = "condition"
    attach_to: Literal["role_assignment", "permission_assignment"]
    # requester id for role assignments, policy id for permission assignments
    target: str = Field(min_length=1)
    tree: ConditionTree


PolicyDocument = Annotated[
    Union[RoleAssignmentPolicy, PermissionAssignmentPolicy, RoleHierarchyGraph, ConditionAttachment],
    Field(discriminator="kind"),
]


class PolicyFile(BaseModel):
    """A policy file holds one document or a list under "policies"."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    policies: list[PolicyDocument] = Field(min_length=1)
