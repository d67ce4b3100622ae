from __future__ import annotations

import random

import pytest

from app.core.exceptions import MalformedElementError, UnsupportedSecurityParameter
from app.schemas.crypto import ClientKeySet, PublicParams, ServerKeySet, ServerTrapdoor
from app.services.crypto import (
    client_encrypt,
    client_trapdoor,
    hash_element,
    init,
    keygen,
    match,
    prf_eval,
    server_reencrypt,
    server_trapdoor,
)
from app.services.crypto.group import MAX_GENERATED_BITS, MIN_GENERATED_BITS, resolve_group, seeded_group
from app.services.crypto.scheme import (
    encrypt_with_exponents,
    split_is_consistent,
    trapdoor_with_exponents,
)

TOY = PublicParams(group_modulus=23, subgroup_order=11, generator=4, blinded_generator=8)
TOY_CLIENT = ClientKeySet(user_id="u", client_exponent=3, prf_key=b"\x01" * 32)
TOY_SERVER = ServerKeySet(user_id="u", server_exponent=4)

VOCABULARY = [f"role:word-{i}" for i in range(64)]


# ── Worked example over p = 23 ────────────────────────────────────────────────


def test_toy_blinded_generator():
    assert pow(4, 7, 23) == TOY.h == 8


def test_toy_client_encryption():
    ct = encrypt_with_exponents(5, 2, TOY_CLIENT, TOY)
    assert (ct.c1_hat, ct.c2_hat) == (8, 6)
    assert ct.c3_hat == hash_element(18, TOY)


def test_toy_server_reencryption():
    ct = server_reencrypt(encrypt_with_exponents(5, 2, TOY_CLIENT, TOY), TOY_SERVER, TOY)
    assert ct.c1 == 12
    assert ct.c2 == hash_element(18, TOY)


def test_toy_trapdoor_and_match():
    td = trapdoor_with_exponents(5, 2, TOY_CLIENT, TOY)
    assert (td.t1, td.t2) == (18, 4)
    completed = server_trapdoor(td, TOY_SERVER, TOY)
    assert completed.t == 16 == pow(4, 35 % 11, 23)
    assert 12 * pow(16, -1, 23) % 23 == 18
    ct = server_reencrypt(encrypt_with_exponents(5, 2, TOY_CLIENT, TOY), TOY_SERVER, TOY)
    assert match(ct, completed, TOY)


def test_toy_mismatch_for_other_sigma():
    ct = server_reencrypt(encrypt_with_exponents(5, 2, TOY_CLIENT, TOY), TOY_SERVER, TOY)
    other = server_trapdoor(trapdoor_with_exponents(6, 3, TOY_CLIENT, TOY), TOY_SERVER, TOY)
    assert not match(ct, other, TOY)


# ── Init / KeyGen ─────────────────────────────────────────────────────────────


def test_init_toy_profile_uses_worked_group():
    params, msk = init("toy", random.Random(3))
    assert (params.p, params.q, params.g) == (23, 11, 4)
    assert params.h == pow(4, msk.master_exponent, 23)


def test_seeded_group_is_reproducible():
    assert seeded_group() == seeded_group()
    group = seeded_group()
    assert group.p.bit_length() == 512
    assert group.q.bit_length() == 160
    assert (group.p - 1) % group.q == 0
    assert pow(group.g, group.q, group.p) == 1 and group.g != 1


@pytest.mark.parametrize("bad", ["huge", MIN_GENERATED_BITS - 1, MAX_GENERATED_BITS + 1, True])
def test_unsupported_security_parameter(bad):
    with pytest.raises(UnsupportedSecurityParameter):
        resolve_group(bad, random.Random(0))


def test_keygen_splits_master_exponent(params, master_secret):
    client, server = keygen(master_secret, "carol", params, random.Random(5))
    assert split_is_consistent(master_secret, client, server, params)
    assert client.prf_key == master_secret.prf_key
    assert 1 <= client.client_exponent < params.q


def test_key_material_is_not_in_repr(users):
    text = repr(users["alice"].client) + repr(users["alice"].server)
    assert str(users["alice"].client.client_exponent) not in text
    assert str(users["alice"].server.server_exponent) not in text


# ── PRF ───────────────────────────────────────────────────────────────────────


def test_prf_is_deterministic_and_in_range(params, master_secret):
    sigma = prf_eval(master_secret.prf_key, "role:Doctor", params)
    assert sigma == prf_eval(master_secret.prf_key, b"role:Doctor", params)
    assert 1 <= sigma < params.q


def test_prf_distinct_over_vocabulary(params, master_secret):
    values = {prf_eval(master_secret.prf_key, word, params) for word in VOCABULARY}
    assert len(values) == len(VOCABULARY)


@pytest.mark.parametrize("element", ["", b""])
def test_prf_rejects_empty_element(params, master_secret, element):
    with pytest.raises(MalformedElementError, match="empty element"):
        prf_eval(master_secret.prf_key, element, params)


# ── Cross-user correctness ────────────────────────────────────────────────────


def _cross_user_errors(params, writer, reader, rng) -> int:
    stored = [server_reencrypt(client_encrypt(w, writer.client, params, rng), writer.server, params) for w in VOCABULARY]
    queries = [server_trapdoor(client_trapdoor(w, reader.client, params, rng), reader.server, params) for w in VOCABULARY]
    return sum(
        match(ct, td, params) != (i == j)
        for i, ct in enumerate(stored)
        for j, td in enumerate(queries)
    )


def test_match_oracle_across_users(params, users, rng):
    assert _cross_user_errors(params, users["admin"], users["alice"], rng) == 0


@pytest.mark.slow
def test_match_oracle_production_parameters():
    from app.services.client_toolkit import KeyAuthority
    from tests.conftest import Enrolled

    rng = random.Random(42)
    authority = KeyAuthority.create("production", rng=rng)
    writer = Enrolled(*authority.enroll("writer"))
    reader = Enrolled(*authority.enroll("reader"))
    assert _cross_user_errors(authority.params, writer, reader, rng) == 0


def test_revoked_style_wrong_server_half_never_matches(params, users, rng):
    ct = server_reencrypt(client_encrypt("role:Nurse", users["admin"].client, params, rng), users["admin"].server, params)
    td = client_trapdoor("role:Nurse", users["alice"].client, params, rng)
    # completing alice's trapdoor with bob's server half breaks the key split
    assert not match(ct, server_trapdoor(td, users["bob"].server, params), params)
    assert match(ct, server_trapdoor(td, users["alice"].server, params), params)


def test_server_trapdoor_is_deterministic(params, users, rng):
    a = server_trapdoor(client_trapdoor("role:Nurse", users["alice"].client, params, rng), users["alice"].server, params)
    b = server_trapdoor(client_trapdoor("role:Nurse", users["bob"].client, params, rng), users["bob"].server, params)
    assert a == b


def test_encryption_is_probabilistic(params, users, rng):
    c1_values = {client_encrypt("role:Nurse", users["admin"].client, params, rng).c1_hat for _ in range(1000)}
    assert len(c1_values) == 1000


def test_serialized_values_do_not_leak_plaintext(params, users, rng):
    ct = client_encrypt("attr:Location=Cardiology-ward", users["admin"].client, params, rng)
    td = client_trapdoor("attr:Location=Cardiology-ward", users["pip"].client, params, rng)
    for text in (ct.model_dump_json(), td.model_dump_json()):
        assert "Cardiology" not in text
        assert "Location" not in text


# ── Membership checks ─────────────────────────────────────────────────────────


def test_reencrypt_rejects_non_member(params, users, rng):
    ct = client_encrypt("role:Nurse", users["admin"].client, params, rng)
    forged = ct.model_copy(update={"c1_hat": params.p - 1})
    with pytest.raises(MalformedElementError):
        server_reencrypt(forged, users["admin"].server, params)


def test_trapdoor_completion_rejects_non_member(params, users, rng):
    td = client_trapdoor("role:Nurse", users["alice"].client, params, rng)
    with pytest.raises(MalformedElementError):
        server_trapdoor(td.model_copy(update={"t2": params.p - 1}), users["alice"].server, params)


def test_validation_context_checks_membership(params):
    with pytest.raises(ValueError):
        ServerTrapdoor.model_validate({"t": format(params.p - 1, "x")}, context={"params": params})
    assert ServerTrapdoor.model_validate({"t": format(params.g, "x")}, context={"params": params}).t == params.g


def test_public_params_reject_bad_group():
    with pytest.raises(ValueError):
        PublicParams(group_modulus=23, subgroup_order=7, generator=4, blinded_generator=8)
    with pytest.raises(ValueError):
        PublicParams(group_modulus=23, subgroup_order=11, generator=22, blinded_generator=8)
