from app.services.engine.evaluation import EvaluationStats
from app.services.engine.service_provider import (
    AttributeSource,
    PolicyDecisionPoint,
    PolicyEnforcementPoint,
    ServiceProvider,
    snapshot_digest,
)

__all__ = [
    "AttributeSource",
    "EvaluationStats",
    "PolicyDecisionPoint",
    "PolicyEnforcementPoint",
    "ServiceProvider",
    "snapshot_digest",
]
