"""
app/services/crypto/scheme.py

The split-key searchable encryption primitive.

Client side (needs K_u = (x_i1, s)):
    client_encrypt   ĉ1 = g^(r+σ), ĉ2 = ĉ1^x_i1, ĉ3 = H(h^r)
    client_trapdoor  t1 = g^(σ-r), t2 = h^r · g^(x_i1·(σ-r))

Server side (needs K_s = (i, x_i2) only):
    server_reencrypt c1 = ĉ1^x_i2 · ĉ2 = h^(r+σ), c2 = ĉ3
    server_trapdoor  T  = t1^x_i2 · t2 = g^(x·σ)
    match            c2 == H(c1 · T^-1)

All exponent arithmetic is reduced mod q. Every function is pure; the only
shared object is the rng, which must be thread-safe (SystemRandom is).
"""

from __future__ import annotations

import random

from Crypto.Hash import HMAC, SHA256

from app.core.exceptions import MalformedElementError
from app.schemas.crypto import (
    ClientCiphertext,
    ClientKeySet,
    ClientTrapdoor,
    MasterSecret,
    PublicParams,
    ServerCiphertext,
    ServerKeySet,
    ServerTrapdoor,
)
from app.services.crypto.group import default_rng, random_exponent

# Extra output bits before reduction mod q keep the bias below 2^-64.
_PRF_SLACK_BITS = 64


# ── Keys ──────────────────────────────────────────────────────────────────────


def keygen(
    msk: MasterSecret,
    user_id: str,
    params: PublicParams,
    rng: random.Random | None = None,
) -> tuple[ClientKeySet, ServerKeySet]:
    """KeyGen: x_i1 ← Z_q*, x_i2 = (x - x_i1) mod q."""
    rng = rng or default_rng()
    x1 = random_exponent(rng, params.q)
    x2 = (msk.master_exponent - x1) % params.q
    client = ClientKeySet(user_id=user_id, client_exponent=x1, prf_key=msk.prf_key)
    server = ServerKeySet(user_id=user_id, server_exponent=x2)
    return client, server


def split_is_consistent(
    msk: MasterSecret, client: ClientKeySet, server: ServerKeySet, params: PublicParams
) -> bool:
    """Issuer-side check that x_i1 + x_i2 ≡ x (mod q)."""
    return (client.client_exponent + server.server_exponent) % params.q == (
        msk.master_exponent % params.q
    )


# ── H and f ───────────────────────────────────────────────────────────────────


def encode_element(value: int, params: PublicParams) -> bytes:
    """Fixed-width big-endian encoding of a group element."""
    return value.to_bytes(params.element_size, "big")


def hash_element(value: int, params: PublicParams) -> bytes:
    """H: SHA-256 over the fixed-width encoding."""
    return SHA256.new(encode_element(value, params)).digest()


def _prf_block(prf_key: bytes, message: bytes, counter: int) -> bytes:
    mac = HMAC.new(prf_key, digestmod=SHA256)
    mac.update(counter.to_bytes(4, "big"))
    mac.update(message)
    return mac.digest()


def prf_eval(prf_key: bytes, element: bytes | str, params: PublicParams) -> int:
    """
    f_s(e) ∈ Z_q*.

    HMAC-SHA256 in counter mode stretched to |q|+64 bits, reduced mod q.
    A zero result restarts the expansion with the next counter block.
    """
    if isinstance(element, str):
        element = element.encode("utf-8")
    if not element:
        raise MalformedElementError("cannot evaluate the PRF on an empty element")

    q = params.q
    need = (q.bit_length() + _PRF_SLACK_BITS + 7) // 8
    counter = 0
    while True:
        stream = b""
        while len(stream) < need:
            stream += _prf_block(prf_key, element, counter)
            counter += 1
        sigma = int.from_bytes(stream[:need], "big") % q
        if sigma:
            return sigma


# ── Elements ──────────────────────────────────────────────────────────────────


def encrypt_with_exponents(
    sigma: int, r: int, keyset: ClientKeySet, params: PublicParams
) -> ClientCiphertext:
    """ClientEnc with caller-chosen (σ, r); the public path draws r fresh."""
    p, q = params.p, params.q
    c1_hat = pow(params.g, (r + sigma) % q, p)
    c2_hat = pow(c1_hat, keyset.client_exponent, p)
    c3_hat = hash_element(pow(params.h, r, p), params)
    return ClientCiphertext(c1_hat=c1_hat, c2_hat=c2_hat, c3_hat=c3_hat)


def client_encrypt(
    element: bytes | str,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientCiphertext:
    rng = rng or default_rng()
    sigma = prf_eval(keyset.prf_key, element, params)
    return encrypt_with_exponents(sigma, random_exponent(rng, params.q), keyset, params)


def server_reencrypt(ct: ClientCiphertext, skey: ServerKeySet, params: PublicParams) -> ServerCiphertext:
    p = params.p
    params.require_member(ct.c1_hat, "c1_hat")
    params.require_member(ct.c2_hat, "c2_hat")
    c1 = pow(ct.c1_hat, skey.server_exponent, p) * ct.c2_hat % p
    return ServerCiphertext(c1=c1, c2=ct.c3_hat)


# ── Trapdoors ─────────────────────────────────────────────────────────────────


def trapdoor_with_exponents(
    sigma: int, r: int, keyset: ClientKeySet, params: PublicParams
) -> ClientTrapdoor:
    p, q = params.p, params.q
    delta = (sigma - r) % q
    t1 = pow(params.g, delta, p)
    t2 = pow(params.h, r, p) * pow(params.g, keyset.client_exponent * delta % q, p) % p
    return ClientTrapdoor(t1=t1, t2=t2)


def client_trapdoor(
    element: bytes | str,
    keyset: ClientKeySet,
    params: PublicParams,
    rng: random.Random | None = None,
) -> ClientTrapdoor:
    rng = rng or default_rng()
    sigma = prf_eval(keyset.prf_key, element, params)
    return trapdoor_with_exponents(sigma, random_exponent(rng, params.q), keyset, params)


def server_trapdoor(td: ClientTrapdoor, skey: ServerKeySet, params: PublicParams) -> ServerTrapdoor:
    p = params.p
    params.require_member(td.t1, "t1")
    params.require_member(td.t2, "t2")
    return ServerTrapdoor(t=pow(td.t1, skey.server_exponent, p) * td.t2 % p)


# ── Match ─────────────────────────────────────────────────────────────────────


def match(ct: ServerCiphertext, td: ServerTrapdoor, params: PublicParams) -> bool:
    p = params.p
    try:
        t_inv = pow(td.t, -1, p)
    except ValueError:
        raise MalformedElementError("trapdoor is not invertible mod p") from None
    return hash_element(ct.c1 * t_inv % p, params) == ct.c2
