from __future__ import annotations

import pytest

from app.core.exceptions import MalformedElementError
from app.schemas.crypto import ServerTrapdoor
from app.services.crypto import client_encrypt, client_trapdoor, server_reencrypt, server_trapdoor
from app.services.crypto.codec import dump_binary, load_binary, pack_fields


def test_ciphertext_layout(params, users, rng):
    ct = client_encrypt("role:Doctor", users["admin"].client, params, rng)
    blob = dump_binary(ct, params)
    size = params.element_size
    assert blob[0] == 0x01
    assert len(blob) == 1 + 3 * 4 + 2 * size + 32
    assert load_binary(blob, params) == ct


def test_every_value_type_survives_the_binary_form(params, users, rng):
    alice = users["alice"]
    ct = client_encrypt("role:Doctor", alice.client, params, rng)
    td = client_trapdoor("role:Doctor", alice.client, params, rng)
    for value in (ct, server_reencrypt(ct, alice.server, params), td, server_trapdoor(td, alice.server, params)):
        assert load_binary(dump_binary(value, params), params) == value


def test_json_mirror_is_hex(params, users, rng):
    td = server_trapdoor(client_trapdoor("role:Doctor", users["alice"].client, params, rng), users["alice"].server, params)
    data = td.model_dump(mode="json")
    assert data == {"t": format(td.t, "x")}
    assert ServerTrapdoor.model_validate(data) == td


@pytest.mark.parametrize(
    "blob",
    [b"", b"\x01\x00\x00", b"\x04\x00\x00\x00\x09abc", b"\x7f"],
    ids=["empty", "short-length", "short-field", "unknown-tag"],
)
def test_malformed_encodings(params, blob):
    with pytest.raises(MalformedElementError):
        load_binary(blob, params)


def test_non_member_element_is_rejected(params):
    blob = pack_fields(0x04, [(params.p - 1).to_bytes(params.element_size, "big")])
    with pytest.raises(MalformedElementError):
        load_binary(blob, params)


def test_wrong_field_count(params):
    blob = pack_fields(0x04, [params.g.to_bytes(params.element_size, "big")] * 2)
    with pytest.raises(MalformedElementError):
        load_binary(blob, params)


def test_bad_digest_size(params):
    fields = [params.g.to_bytes(params.element_size, "big")] * 2 + [b"\x00" * 31]
    with pytest.raises(MalformedElementError):
        load_binary(pack_fields(0x01, fields), params)
