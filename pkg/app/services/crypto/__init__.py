from app.services.crypto.group import init, default_rng
from app.services.crypto.scheme import (
    client_encrypt,
    client_trapdoor,
    hash_element,
    keygen,
    match,
    prf_eval,
    server_reencrypt,
    server_trapdoor,
)

__all__ = [
    "init",
    "default_rng",
    "keygen",
    "prf_eval",
    "hash_element",
    "client_encrypt",
    "server_reencrypt",
    "client_trapdoor",
    "server_trapdoor",
    "match",
]
