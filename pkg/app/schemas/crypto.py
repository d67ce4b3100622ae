"""
app/schemas/crypto.py

Value types of the multi-user searchable-encryption scheme.

Group elements and exponents are plain ints in Python and lowercase hex strings
on the wire; digests and PRF keys are bytes in Python and hex on the wire.
Passing ``context={"params": PublicParams}`` to ``model_validate`` /
``model_validate_json`` checks every group element for order-q subgroup
membership, which is how the service layer rejects small-subgroup input.
"""

from __future__ import annotations

from typing import Annotated, Any, ClassVar

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationInfo,
    field_validator,
    model_validator,
)

from app.core.exceptions import MalformedElementError

DIGEST_SIZE = 32
PRF_KEY_SIZE = 32


def _parse_int(value: Any) -> Any:
    if isinstance(value, str):
        text = value.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if not text:
            raise ValueError("empty hex string")
        return int(text, 16)
    if isinstance(value, bool):
        raise ValueError("booleans are not group values")
    return value


def _parse_bytes(value: Any) -> Any:
    if isinstance(value, str):
        return bytes.fromhex(value)
    return value


BigInt = Annotated[
    int,
    BeforeValidator(_parse_int),
    PlainSerializer(lambda v: format(v, "x"), return_type=str, when_used="json"),
]
HexBytes = Annotated[
    bytes,
    BeforeValidator(_parse_bytes),
    PlainSerializer(lambda v: v.hex(), return_type=str, when_used="json"),
]


class PublicParams(BaseModel):
    """(G, g, q, h, H, f): everything a client or the server may know."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    group_modulus: BigInt  # p
    subgroup_order: BigInt  # q
    generator: BigInt  # g
    blinded_generator: BigInt  # h = g^x
    hash_id: str = "sha256"
    prf_id: str = "hmac-sha256-ctr"

    @model_validator(mode="after")
    def _check_group(self) -> "PublicParams":
        p, q = self.group_modulus, self.subgroup_order
        if p < 5 or q < 2:
            raise ValueError("group modulus and order are too small")
        if (p - 1) % q:
            raise ValueError("q must divide p - 1")
        if not self.is_member(self.generator) or self.generator == 1:
            raise ValueError("g does not generate the order-q subgroup")
        if not self.is_member(self.blinded_generator) or self.blinded_generator == 1:
            raise ValueError("h must be a non-identity subgroup member")
        return self

    @property
    def p(self) -> int:
        return self.group_modulus

    @property
    def q(self) -> int:
        return self.subgroup_order

    @property
    def g(self) -> int:
        return self.generator

    @property
    def h(self) -> int:
        return self.blinded_generator

    @property
    def element_size(self) -> int:
        """Fixed byte width of an encoded group element."""
        return (self.group_modulus.bit_length() + 7) // 8

    def is_member(self, value: int) -> bool:
        p = self.group_modulus
        return 0 < value < p and pow(value, self.subgroup_order, p) == 1

    def require_member(self, value: int, what: str = "group element") -> int:
        if not isinstance(value, int) or not self.is_member(value):
            raise MalformedElementError(f"{what} is not in the order-q subgroup")
        return value


class MasterSecret(BaseModel):
    """(x, s): held by the TKMA only."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    master_exponent: BigInt = Field(repr=False)
    prf_key: HexBytes = Field(repr=False)

    @field_validator("master_exponent")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("master exponent must be in [1, q-1]")
        return v

    @field_validator("prf_key")
    @classmethod
    def _key_size(cls, v: bytes) -> bytes:
        if len(v) != PRF_KEY_SIZE:
            raise ValueError(f"prf key must be {PRF_KEY_SIZE} bytes")
        return v


class ClientKeySet(BaseModel):
    """K_u = (x_i1, s): the user's half of the split key."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    user_id: str = Field(min_length=1)
    client_exponent: BigInt = Field(repr=False)
    prf_key: HexBytes = Field(repr=False)

    @field_validator("client_exponent")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("client exponent must be in [1, q-1]")
        return v

    @field_validator("prf_key")
    @classmethod
    def _key_size(cls, v: bytes) -> bytes:
        if len(v) != PRF_KEY_SIZE:
            raise ValueError(f"prf key must be {PRF_KEY_SIZE} bytes")
        return v


class ServerKeySet(BaseModel):
    """K_s = (i, x_i2): the half installed in the Key Store."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    user_id: str = Field(min_length=1)
    server_exponent: BigInt = Field(repr=False)

    @field_validator("server_exponent")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("server exponent must be reduced mod q")
        return v


class _GroupValue(BaseModel):
    """Base for ciphertexts / trapdoors: validates members when params are given."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    _element_fields: ClassVar[tuple[str, ...]] = ()

    @model_validator(mode="after")
    def _check_members(self, info: ValidationInfo) -> "_GroupValue":
        params = (info.context or {}).get("params") if info is not None else None
        if params is not None:
            for name in self._element_fields:
                if not params.is_member(getattr(self, name)):
                    raise ValueError(f"{name} is not in the order-q subgroup")
        return self


def _check_digest(v: bytes) -> bytes:
    if len(v) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes")
    return v


class ClientCiphertext(_GroupValue):
    """c*(e) = (ĉ1, ĉ2, ĉ3) produced by ClientEnc."""

    _element_fields: ClassVar[tuple[str, ...]] = ("c1_hat", "c2_hat")

    c1_hat: BigInt
    c2_hat: BigInt
    c3_hat: HexBytes

    @field_validator("c3_hat")
    @classmethod
    def _digest_size(cls, v: bytes) -> bytes:
        return _check_digest(v)


class ServerCiphertext(_GroupValue):
    """c(e) = (c1, c2) stored in the Policy Store."""

    _element_fields: ClassVar[tuple[str, ...]] = ("c1",)

    c1: BigInt
    c2: HexBytes

    @field_validator("c2")
    @classmethod
    def _digest_size(cls, v: bytes) -> bytes:
        return _check_digest(v)


class ClientTrapdoor(_GroupValue):
    """td*(e) = (t1, t2) produced by ClientTD."""

    _element_fields: ClassVar[tuple[str, ...]] = ("t1", "t2")

    t1: BigInt
    t2: BigInt


class ServerTrapdoor(_GroupValue):
    """td(e) = T = g^(x·σ_e); deterministic per element."""

    _element_fields: ClassVar[tuple[str, ...]] = ("t",)

    t: BigInt
