from __future__ import annotations

import json
import os
import random

import pytest
from pydantic import ValidationError
from sqlalchemy import func, select
from sqlalchemy.orm import sessionmaker

from app.core.exceptions import SnapshotError
from app.db.session import make_engine
from app.models.store_snapshot import StoreSnapshotRecord
from app.schemas.policy import RoleAssignmentPolicy
from app.schemas.snapshot import StoreSnapshot
from app.services import client_toolkit
from app.services.engine import ServiceProvider, snapshot_digest
from app.services.snapshot_service import (
    DatabaseSnapshotRepository,
    FileSnapshotRepository,
    restore_store,
    save_store,
)
from tests.test_end_to_end import ACTIONS, TARGETS, Scenario


def _populated(seed: int, params, users) -> Scenario:
    scenario = Scenario(seed, params, users)
    scenario.build()
    for _ in range(3):
        scenario.activate(scenario.rng.choice(("alice", "bob")), scenario.rng.choice(scenario.roles))
    return scenario


def _same_decisions(left: ServiceProvider, right: ServiceProvider, scenario: Scenario) -> bool:
    rng = random.Random(0)
    for _ in range(5):
        user = rng.choice(("alice", "bob"))
        req = client_toolkit.make_access_request(
            scenario.users[user].client,
            rng.choice(scenario.roles),
            rng.choice(ACTIONS),
            rng.choice(TARGETS),
            scenario.params,
            rng,
        )
        if left.authorize_access(req) != right.authorize_access(req):
            return False
    return True


def _round_trip(seed: int, params, users, tmp_path) -> None:
    scenario = _populated(seed, params, users)
    repo = FileSnapshotRepository(tmp_path / f"store-{seed}.json")
    save_store(scenario.sp, repo)

    restored = ServiceProvider()
    assert restore_store(restored, repo)
    assert restored.store_digest() == scenario.sp.store_digest()
    assert restored.policy_digest() == scenario.sp.policy_digest()
    assert _same_decisions(scenario.sp, restored, scenario)


def test_file_round_trip_preserves_digest(params, users, tmp_path):
    for seed in range(15):
        _round_trip(seed, params, users, tmp_path)


@pytest.mark.slow
def test_file_round_trip_hundred_stores(params, users, tmp_path):
    for seed in range(100):
        _round_trip(seed, params, users, tmp_path)


def test_sessions_survive_restore(params, users, tmp_path):
    scenario = _populated(3, params, users)
    repo = FileSnapshotRepository(tmp_path / "store.json")
    save_store(scenario.sp, repo)
    restored = ServiceProvider()
    restore_store(restored, repo)
    for user in ("alice", "bob"):
        assert restored.sessions.size(user) == scenario.sp.sessions.size(user)


@pytest.mark.skipif(os.name != "posix", reason="file modes are POSIX only")
def test_snapshot_file_is_private(sp, tmp_path):
    path = tmp_path / "store.json"
    save_store(sp, FileSnapshotRepository(path))
    assert path.stat().st_mode & 0o777 == 0o600


def test_missing_file_restores_nothing(tmp_path):
    sp = ServiceProvider()
    assert not restore_store(sp, FileSnapshotRepository(tmp_path / "absent.json"))
    assert not sp.configured


def test_overwrite_leaves_no_temp_files(sp, tmp_path):
    repo = FileSnapshotRepository(tmp_path / "store.json")
    save_store(sp, repo)
    save_store(sp, repo)
    assert [p.name for p in tmp_path.iterdir()] == ["store.json"]


def test_unreadable_file(tmp_path):
    path = tmp_path / "store.json"
    path.write_text("{not json")
    with pytest.raises(SnapshotError):
        FileSnapshotRepository(path).load()


def test_newer_major_version_is_refused(sp, tmp_path):
    document = json.loads(sp.snapshot().model_dump_json())
    document["major_version"] = 2
    path = tmp_path / "store.json"
    path.write_text(json.dumps(document))
    with pytest.raises(SnapshotError, match="major version"):
        FileSnapshotRepository(path).load()


def test_newer_minor_version_with_extra_fields_is_read(sp, tmp_path):
    document = json.loads(sp.snapshot().model_dump_json())
    document["minor_version"] = 7
    document["audit_trail"] = []
    path = tmp_path / "store.json"
    path.write_text(json.dumps(document))
    loaded = FileSnapshotRepository(path).load()
    assert loaded.minor_version == 7
    assert loaded.key_store == sp.snapshot().key_store


def test_wrong_format_tag(tmp_path):
    path = tmp_path / "store.json"
    path.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(SnapshotError):
        FileSnapshotRepository(path).load()


# ── Database backend ──────────────────────────────────────────────────────────


@pytest.fixture
def db_repo(tmp_path) -> DatabaseSnapshotRepository:
    engine = make_engine(f"sqlite:///{tmp_path / 'snapshots.db'}")
    factory = sessionmaker(bind=engine, autoflush=False, autocommit=False, expire_on_commit=False)
    yield DatabaseSnapshotRepository(factory, create_schema=True)
    engine.dispose()


def test_database_round_trip(params, users, db_repo):
    scenario = _populated(11, params, users)
    location = save_store(scenario.sp, db_repo)
    assert location.startswith("store_snapshots#")

    restored = ServiceProvider()
    assert restore_store(restored, db_repo)
    assert restored.store_digest() == scenario.sp.store_digest()


def test_database_empty(db_repo):
    assert db_repo.load() is None


def test_database_newest_row_wins(sp, params, users, rng, db_repo):
    db_repo.save(sp.snapshot())
    sp.deploy(
        client_toolkit.encrypt_policy(
            RoleAssignmentPolicy(requester_id="alice", roles=["Doctor"]),
            users["admin"].client,
            params,
            rng,
        )
    )
    latest = sp.snapshot()
    db_repo.save(latest)
    assert snapshot_digest(db_repo.load()) == snapshot_digest(latest)


def _row_count(repo: DatabaseSnapshotRepository) -> int:
    with repo._session_factory() as db:
        return db.scalar(select(func.count()).select_from(StoreSnapshotRecord))


def test_database_keeps_only_the_newest_row(sp, db_repo):
    for _ in range(5):
        db_repo.save(sp.snapshot())
    assert _row_count(db_repo) == 1


def test_database_revoked_key_leaves_no_row_behind(sp, db_repo):
    db_repo.save(sp.snapshot())
    assert sp.revoke_user("alice")
    db_repo.save(sp.snapshot())
    with db_repo._session_factory() as db:
        documents = db.scalars(select(StoreSnapshotRecord.document)).all()
    assert len(documents) == 1
    assert all(k["user_id"] != "alice" for k in json.loads(documents[0])["key_store"])


def test_database_keep_window(sp, tmp_path):
    engine = make_engine(f"sqlite:///{tmp_path / 'history.db'}")
    factory = sessionmaker(bind=engine, expire_on_commit=False)
    repo = DatabaseSnapshotRepository(factory, create_schema=True, keep=3)
    locations = [repo.save(sp.snapshot()) for _ in range(6)]
    assert _row_count(repo) == 3
    with factory() as db:
        ids = sorted(db.scalars(select(StoreSnapshotRecord.id)).all())
    assert [f"store_snapshots#{i}" for i in ids] == locations[-3:]
    engine.dispose()
    with pytest.raises(ValueError):
        DatabaseSnapshotRepository(factory, keep=0)


def test_database_digest_mismatch(sp, db_repo):
    db_repo.save(sp.snapshot())
    with db_repo._session_factory() as db:
        record = db.query(StoreSnapshotRecord).one()
        record.digest = "0" * 64
        db.commit()
    with pytest.raises(SnapshotError, match="digest"):
        db_repo.load()


def test_snapshot_document_is_frozen(sp):
    snapshot = sp.snapshot()
    assert isinstance(snapshot, StoreSnapshot)
    with pytest.raises(ValidationError):
        snapshot.minor_version = 3
