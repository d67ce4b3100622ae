"""
app/services/crypto/codec.py

Binary layout for ciphertexts and trapdoors:

    tag (1 byte) | len (4 bytes BE) field | len (4 bytes BE) field | ...

Group elements are fixed-width big-endian (params.element_size bytes),
digests are raw. The JSON mirror is the pydantic model dump (hex strings).
Decoding checks subgroup membership of every element.
"""

from __future__ import annotations

import struct
from typing import Union

from app.core.exceptions import MalformedElementError
from app.schemas.crypto import (
    ClientCiphertext,
    ClientTrapdoor,
    PublicParams,
    ServerCiphertext,
    ServerTrapdoor,
)
from app.services.crypto.scheme import encode_element

GroupValue = Union[ClientCiphertext, ServerCiphertext, ClientTrapdoor, ServerTrapdoor]

_LENGTH = struct.Struct(">I")

# tag → (model, ((field, is_element), ...))
_LAYOUTS: dict[int, tuple[type, tuple[tuple[str, bool], ...]]] = {
    0x01: (ClientCiphertext, (("c1_hat", True), ("c2_hat", True), ("c3_hat", False))),
    0x02: (ServerCiphertext, (("c1", True), ("c2", False))),
    0x03: (ClientTrapdoor, (("t1", True), ("t2", True))),
    0x04: (ServerTrapdoor, (("t", True),)),
}
_TAGS = {model: tag for tag, (model, _) in _LAYOUTS.items()}


def decode_element(data: bytes, params: PublicParams) -> int:
    if len(data) != params.element_size:
        raise MalformedElementError(
            f"group element must be {params.element_size} bytes, got {len(data)}"
        )
    return params.require_member(int.from_bytes(data, "big"))


def pack_fields(tag: int, fields: list[bytes]) -> bytes:
    out = bytearray([tag])
    for field in fields:
        out += _LENGTH.pack(len(field))
        out += field
    return bytes(out)


def unpack_fields(data: bytes) -> tuple[int, list[bytes]]:
    if not data:
        raise MalformedElementError("empty encoding")
    tag, pos, fields = data[0], 1, []
    while pos < len(data):
        if pos + _LENGTH.size > len(data):
            raise MalformedElementError("truncated length prefix")
        (size,) = _LENGTH.unpack_from(data, pos)
        pos += _LENGTH.size
        if pos + size > len(data):
            raise MalformedElementError("truncated field")
        fields.append(data[pos : pos + size])
        pos += size
    return tag, fields


def dump_binary(value: GroupValue, params: PublicParams) -> bytes:
    tag = _TAGS[type(value)]
    _, layout = _LAYOUTS[tag]
    fields = [
        encode_element(getattr(value, name), params) if is_element else getattr(value, name)
        for name, is_element in layout
    ]
    return pack_fields(tag, fields)


def load_binary(data: bytes, params: PublicParams) -> GroupValue:
    tag, fields = unpack_fields(data)
    if tag not in _LAYOUTS:
        raise MalformedElementError(f"unknown type tag 0x{tag:02x}")
    model, layout = _LAYOUTS[tag]
    if len(fields) != len(layout):
        raise MalformedElementError(
            f"{model.__name__} needs {len(layout)} fields, got {len(fields)}"
        )
    values = {
        name: decode_element(raw, params) if is_element else raw
        for (name, is_element), raw in zip(layout, fields)
    }
    try:
        return model(**values)
    except ValueError as exc:
        raise MalformedElementError(str(exc)) from exc
