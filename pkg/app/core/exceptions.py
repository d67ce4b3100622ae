class EncryptedRBACError(Exception):
    """Base class for every error raised by this package."""


class InvalidParametersError(EncryptedRBACError):
    """Raised when public parameters violate the group invariants."""


class UnsupportedSecurityParameter(EncryptedRBACError):
    """Raised when init() is asked for an unknown profile or bit length."""


class RandomnessError(EncryptedRBACError):
    """Raised when the randomness source cannot produce a value."""


class MalformedElementError(EncryptedRBACError):
    """Raised when a value is not a well-formed group element or element encoding."""


class InvalidPolicyError(EncryptedRBACError):
    """Raised when a plaintext policy breaks its structural invariants."""


class CycleDetectedError(InvalidPolicyError):
    """Raised when a role hierarchy graph contains a cycle."""


class UnsupportedGateError(InvalidPolicyError):
    """Raised when a THRESHOLD gate is headed for encrypted evaluation."""


class InvalidAssertionError(EncryptedRBACError):
    """Raised when a contextual attribute assertion is malformed."""


class KeyNotFoundError(EncryptedRBACError):
    """Raised when the Key Store holds no server key set for a user."""

    def __init__(self, user_id: str) -> None:
        super().__init__(f"no server key set for user {user_id!r}")
        self.user_id = user_id


class MalformedBundleError(EncryptedRBACError):
    """Raised when a client encrypted bundle has the wrong shape."""


class UnknownPolicyError(EncryptedRBACError):
    """Raised when a policy id / requester entry is not in the Policy Store."""


class SnapshotError(EncryptedRBACError):
    """Raised when a store snapshot cannot be written or read back."""


class EngineNotConfiguredError(EncryptedRBACError):
    """Raised when the service has no public parameters installed yet."""


class PrincipalMismatchError(EncryptedRBACError):
    """Raised when the authenticated principal acts for another identity."""
