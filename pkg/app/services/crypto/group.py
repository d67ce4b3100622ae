"""
app/services/crypto/group.py

System setup (Init): choose the order-q subgroup of Z_p*, draw the master
secret and publish (G, g, q, h, H, f).

Three named profiles plus generated groups:
  • toy         p=23, q=11, g=4, small enough to check by hand
  • test        seeded Schnorr group, |p|=512, |q|=160, deterministic and fast
  • production  2048-bit MODP safe prime (RFC 3526 group 14), q=(p-1)/2, g=4
  • int k       fresh Schnorr group with |p|=k (256 ≤ k ≤ 4096)
"""

from __future__ import annotations

import logging
import random
import secrets
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

from Crypto.Util.number import getPrime, isPrime

from app.core.exceptions import RandomnessError, UnsupportedSecurityParameter
from app.models.enums import ParameterProfile
from app.schemas.crypto import PRF_KEY_SIZE, MasterSecret, PublicParams

logger = logging.getLogger(__name__)

SecurityParam = Union[ParameterProfile, str, int]

MIN_GENERATED_BITS = 256
MAX_GENERATED_BITS = 4096

TEST_GROUP_SEED = 0x5EED
TEST_P_BITS = 512
TEST_Q_BITS = 160

_MODP_2048 = int(
    """
    FFFFFFFF FFFFFFFF C90FDAA2 2168C234 C4C6628B 80DC1CD1
    29024E08 8A67CC74 020BBEA6 3B139B22 514A0879 8E3404DD
    EF9519B3 CD3A431B 302B0A6D F25F1437 4FE1356D 6D51C245
    E485B576 625E7EC6 F44C42E9 A637ED6B 0BFF5CB6 F406B7ED
    EE386BFB 5A899FA5 AE9F2411 7C4B1FE6 49286651 ECE45B3D
    C2007CB8 A163BF05 98DA4836 1C55D39A 69163FA8 FD24CF5F
    83655D23 DCA3AD96 1C62F356 208552BB 9ED52907 7096966D
    670C354E 4ABC9804 F1746C08 CA18217C 32905E46 2E36CE3B
    E39E772C 180E8603 9B2783A2 EC07A28F B5C55DF0 6F4C52C9
    DE2BCBF6 95581718 3995497C EA956AE5 15D22618 98FA0510
    15728E5A 8AACAA68 FFFFFFFF FFFFFFFF
    """.replace(" ", "").replace("\n", ""),
    16,
)


@dataclass(frozen=True)
class GroupDescription:
    p: int
    q: int
    g: int


TOY_GROUP = GroupDescription(p=23, q=11, g=4)
# 4 = 2^2 is a quadratic residue, so it generates the order-q subgroup.
PRODUCTION_GROUP = GroupDescription(p=_MODP_2048, q=(_MODP_2048 - 1) // 2, g=4)


# ── Randomness ────────────────────────────────────────────────────────────────


def default_rng() -> random.Random:
    """OS-backed CSPRNG; safe to share between threads."""
    return secrets.SystemRandom()


def random_exponent(rng: random.Random, q: int) -> int:
    """Uniform draw from Z_q* = [1, q-1]."""
    try:
        return rng.randrange(1, q)
    except (OSError, NotImplementedError) as exc:
        raise RandomnessError(f"randomness source failed: {exc}") from exc


def random_bytes(rng: random.Random, size: int) -> bytes:
    try:
        return rng.getrandbits(8 * size).to_bytes(size, "big")
    except (OSError, NotImplementedError) as exc:
        raise RandomnessError(f"randomness source failed: {exc}") from exc


def _randfunc(rng: random.Random) -> Callable[[int], bytes]:
    return lambda n: random_bytes(rng, n)


# ── Group selection ───────────────────────────────────────────────────────────


def generate_schnorr_group(p_bits: int, q_bits: int, rng: random.Random) -> GroupDescription:
    """p = m·q + 1 with |p| = p_bits, |q| = q_bits, g of order exactly q."""
    randfunc = _randfunc(rng)
    q = getPrime(q_bits, randfunc=randfunc)
    m_bits = p_bits - q_bits
    while True:
        m = rng.getrandbits(m_bits) | (1 << (m_bits - 1))
        m -= m % 2
        p = m * q + 1
        if p.bit_length() == p_bits and isPrime(p, randfunc=randfunc):
            break
    cofactor = (p - 1) // q
    while True:
        g = pow(rng.randrange(2, p - 1), cofactor, p)
        if g != 1:
            return GroupDescription(p=p, q=q, g=g)


@lru_cache(maxsize=4)
def seeded_group(seed: int = TEST_GROUP_SEED) -> GroupDescription:
    group = generate_schnorr_group(TEST_P_BITS, TEST_Q_BITS, random.Random(seed))
    logger.debug("test group ready: |p|=%d |q|=%d", group.p.bit_length(), group.q.bit_length())
    return group


def resolve_group(security_param: SecurityParam, rng: random.Random) -> GroupDescription:
    if isinstance(security_param, bool):
        raise UnsupportedSecurityParameter("security parameter must be a profile or bit length")
    if isinstance(security_param, int):
        if not MIN_GENERATED_BITS <= security_param <= MAX_GENERATED_BITS:
            raise UnsupportedSecurityParameter(
                f"bit length {security_param} outside "
                f"[{MIN_GENERATED_BITS}, {MAX_GENERATED_BITS}]"
            )
        q_bits = 160 if security_param < 1024 else 256
        return generate_schnorr_group(security_param, q_bits, rng)
    try:
        profile = ParameterProfile(security_param)
    except ValueError as exc:
        raise UnsupportedSecurityParameter(f"unknown profile {security_param!r}") from exc
    if profile is ParameterProfile.TOY:
        return TOY_GROUP
    if profile is ParameterProfile.TEST:
        return seeded_group()
    return PRODUCTION_GROUP


def public_params_for(group: GroupDescription, master_exponent: int) -> PublicParams:
    return PublicParams(
        group_modulus=group.p,
        subgroup_order=group.q,
        generator=group.g,
        blinded_generator=pow(group.g, master_exponent, group.p),
    )


def init(
    security_param: SecurityParam, rng: random.Random | None = None
) -> tuple[PublicParams, MasterSecret]:
    """Init: returns (params, msk) with h = g^x and a fresh PRF key."""
    rng = rng or default_rng()
    group = resolve_group(security_param, rng)
    x = random_exponent(rng, group.q)
    params = public_params_for(group, x)
    msk = MasterSecret(master_exponent=x, prf_key=random_bytes(rng, PRF_KEY_SIZE))
    logger.info(
        "initialised group: |p|=%d bits, |q|=%d bits",
        group.p.bit_length(),
        group.q.bit_length(),
    )
    return params, msk
