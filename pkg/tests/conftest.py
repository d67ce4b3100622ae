"""
Shared fixtures. Everything runs on the seeded "test" group so a full run stays
in seconds; the production group only appears in tests marked slow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import pytest

from app.core.config import get_settings
from app.schemas.crypto import ClientKeySet, MasterSecret, PublicParams, ServerKeySet
from app.services.client_toolkit import KeyAuthority
from app.services.crypto.group import init
from app.services.engine import ServiceProvider

USERS = ("admin", "alice", "bob", "pip")


@dataclass(frozen=True)
class Enrolled:
    client: ClientKeySet
    server: ServerKeySet


@pytest.fixture(scope="session")
def group_material() -> tuple[PublicParams, MasterSecret]:
    return init("test", random.Random(20240601))


@pytest.fixture(scope="session")
def params(group_material) -> PublicParams:
    return group_material[0]


@pytest.fixture(scope="session")
def master_secret(group_material) -> MasterSecret:
    return group_material[1]


@pytest.fixture(scope="session")
def users(group_material) -> dict[str, Enrolled]:
    authority = KeyAuthority(*group_material, rng=random.Random(99))
    return {user: Enrolled(*authority.enroll(user)) for user in USERS}


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def sp(params, users) -> ServiceProvider:
    provider = ServiceProvider(params=params)
    for enrolled in users.values():
        provider.install_keyset(enrolled.server)
    return provider


@pytest.fixture
def fresh_settings(monkeypatch):
    """get_settings() re-read after monkeypatched environment variables."""
    get_settings.cache_clear()
    yield monkeypatch
    get_settings.cache_clear()
