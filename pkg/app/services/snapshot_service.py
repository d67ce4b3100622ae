"""
app/services/snapshot_service.py

Durable whole-store snapshots.

  FileSnapshotRepository      one JSON file, replaced atomically (temp + fsync + rename)
  DatabaseSnapshotRepository  rows in store_snapshots; newest wins, only the newest `keep` survive a save

Both hold the same versioned StoreSnapshot document.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Protocol

from pydantic import ValidationError
from sqlalchemy import delete, select
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session, sessionmaker

from app.core.config import Settings
from app.core.exceptions import SnapshotError
from app.db.base import Base
from app.models.store_snapshot import StoreSnapshotRecord
from app.schemas.snapshot import StoreSnapshot
from app.services.engine.service_provider import ServiceProvider, snapshot_digest
from app.services.utils.atomic_file import atomic_write_text, read_text

logger = logging.getLogger(__name__)

# Server key halves live in the snapshot.
SNAPSHOT_FILE_MODE = 0o600


class SnapshotRepository(Protocol):
    def save(self, snapshot: StoreSnapshot) -> str: ...

    def load(self) -> Optional[StoreSnapshot]: ...


def dump_snapshot(snapshot: StoreSnapshot) -> str:
    return snapshot.model_dump_json(indent=2) + "\n"


def parse_snapshot(text: str, source: str) -> StoreSnapshot:
    try:
        return StoreSnapshot.model_validate_json(text)
    except ValidationError as exc:
        raise SnapshotError(f"{source} is not a readable store snapshot: {exc}") from exc


class FileSnapshotRepository:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def save(self, snapshot: StoreSnapshot) -> str:
        try:
            atomic_write_text(self.path, dump_snapshot(snapshot), mode=SNAPSHOT_FILE_MODE)
        except OSError as exc:
            raise SnapshotError(f"cannot write snapshot {self.path}: {exc}") from exc
        return str(self.path)

    def load(self) -> Optional[StoreSnapshot]:
        if not self.path.exists():
            return None
        try:
            text = read_text(self.path)
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot {self.path}: {exc}") from exc
        return parse_snapshot(text, str(self.path))


class DatabaseSnapshotRepository:
    def __init__(
        self,
        session_factory: sessionmaker[Session],
        create_schema: bool = False,
        keep: int = 1,
    ) -> None:
        if keep < 1:
            raise ValueError("keep must be at least 1")
        self._session_factory = session_factory
        self.keep = keep
        if create_schema:
            Base.metadata.create_all(session_factory.kw["bind"])

    def save(self, snapshot: StoreSnapshot) -> str:
        record = StoreSnapshotRecord(
            major_version=snapshot.major_version,
            minor_version=snapshot.minor_version,
            digest=snapshot_digest(snapshot),
            document=dump_snapshot(snapshot),
        )
        try:
            with self._session_factory() as db:
                db.add(record)
                db.flush()
                stale = db.scalars(
                    select(StoreSnapshotRecord.id).order_by(StoreSnapshotRecord.id.desc()).offset(self.keep)
                ).all()
                if stale:
                    db.execute(
                        delete(StoreSnapshotRecord)
                        .where(StoreSnapshotRecord.id.in_(stale))
                        .execution_options(synchronize_session=False)
                    )
                db.commit()
                if stale:
                    logger.info("pruned %d superseded snapshot row(s)", len(stale))
                return f"store_snapshots#{record.id}"
        except SQLAlchemyError as exc:
            raise SnapshotError(f"cannot write snapshot row: {exc}") from exc

    def load(self) -> Optional[StoreSnapshot]:
        try:
            with self._session_factory() as db:
                record = db.scalars(
                    select(StoreSnapshotRecord)
                    .order_by(StoreSnapshotRecord.created_at.desc(), StoreSnapshotRecord.id.desc())
                    .limit(1)
                ).first()
        except SQLAlchemyError as exc:
            raise SnapshotError(f"cannot read snapshot rows: {exc}") from exc
        if record is None:
            return None
        snapshot = parse_snapshot(record.document, f"store_snapshots#{record.id}")
        if snapshot_digest(snapshot) != record.digest:
            raise SnapshotError(f"store_snapshots#{record.id} does not match its digest")
        return snapshot


def build_repository(settings: Settings) -> SnapshotRepository:
    if settings.SP_SNAPSHOT_BACKEND == "database":
        from app.db.session import get_session_factory

        return DatabaseSnapshotRepository(
            get_session_factory(settings.DATABASE_URL), keep=settings.SP_SNAPSHOT_KEEP
        )
    return FileSnapshotRepository(settings.SP_SNAPSHOT_PATH)


def save_store(sp: ServiceProvider, repository: SnapshotRepository) -> str:
    snapshot = sp.snapshot()
    location = repository.save(snapshot)
    logger.info("snapshot written to %s (%d key sets)", location, len(snapshot.key_store))
    return location


def restore_store(sp: ServiceProvider, repository: SnapshotRepository) -> bool:
    snapshot = repository.load()
    if snapshot is None:
        logger.info("no snapshot to restore")
        return False
    sp.restore(snapshot)
    return True
