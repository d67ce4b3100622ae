from __future__ import annotations

from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, Integer, String, Text

from app.db.base import Base


class StoreSnapshotRecord(Base):
    """One row per saved snapshot; restore reads the newest, saves prune the rest."""

    __tablename__ = "store_snapshots"

    id = Column(Integer, primary_key=True, autoincrement=True)
    major_version = Column(Integer, nullable=False)
    minor_version = Column(Integer, nullable=False, default=0)
    # SHA-256 over the canonical document, for integrity checks on restore
    digest = Column(String(64), nullable=False, index=True)
    document = Column(Text, nullable=False)
    created_at = Column(
        DateTime(timezone=True),
        nullable=False,
        default=lambda: datetime.now(timezone.utc),
        index=True,
    )
