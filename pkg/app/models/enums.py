import enum


class ParameterProfile(str, enum.Enum):
    """Named group parameter sets accepted by init()."""

    TOY = "toy"  # p=23, q=11; worked examples only
    TEST = "test"  # seeded 512-bit Schnorr group
    PRODUCTION = "production"  # 2048-bit MODP safe-prime group


class Gate(str, enum.Enum):
    """Internal node types of a condition tree."""

    AND = "AND"
    OR = "OR"
    THRESHOLD = "THRESHOLD"


class ComparisonOp(str, enum.Enum):
    """Numeric comparison operators expanded into bag-of-bits subtrees."""

    LT = "<"
    GT = ">"
    EQ = "="
    LE = "<="
    GE = ">="

    @classmethod
    def _missing_(cls, value: object) -> "ComparisonOp | None":
        aliases = {"≤": cls.LE, "≥": cls.GE, "==": cls.EQ, "lt": cls.LT, "gt": cls.GT}
        return aliases.get(value) if isinstance(value, str) else None


class BundleKind(str, enum.Enum):
    ROLE_ASSIGNMENT = "role_assignment"
    PERMISSION_ASSIGNMENT = "permission_assignment"
    CONDITION = "condition"
    HIERARCHY = "hierarchy"


class DecisionOutcome(str, enum.Enum):
    PERMIT = "permit"
    DENY = "deny"


class DenyReason(str, enum.Enum):
    NO_ROLE_MATCH = "no-role-match"
    CONDITION_FALSE = "condition-false"
    CONDITION_UNRESOLVED = "condition-unresolved"
    NO_ACTIVE_ROLE = "no-active-role"
    NO_PERMISSION = "no-permission"
    REVOKED = "revoked"


class EndpointOp(str, enum.Enum):
    """Operation names carried in the wire envelope."""

    INSTALL_PARAMS = "install_params"
    INSTALL_KEYSET = "install_keyset"
    DEPLOY_POLICY = "deploy_policy"
    REMOVE_POLICY = "remove_policy"
    ACTIVATE = "activate"
    DEACTIVATE = "deactivate"
    ACCESS = "access"
    ATTRIBUTES = "attributes"
    REVOKE = "revoke"
    SNAPSHOT = "snapshot"
    RESTORE = "restore"
