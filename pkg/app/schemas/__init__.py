from .policy import PolicyDocument
from .requests import AccessRequest, ActivationRequest, AttributeBatch, Decision, WireEnvelope
from .snapshot import StoreSnapshot

__all__ = [
    "PolicyDocument",
    "AccessRequest",
    "ActivationRequest",
    "AttributeBatch",
    "Decision",
    "WireEnvelope",
    "StoreSnapshot",
]
