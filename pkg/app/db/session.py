"""
app/db/session.py

Sync engine + session factory for the database snapshot backend. The engine
is built on first use so the default file backend never touches a database.
"""

from __future__ import annotations

from functools import lru_cache

from sqlalchemy import Engine, create_engine
from sqlalchemy.orm import Session, sessionmaker

from app.core.config import get_settings


def make_engine(url: str) -> Engine:
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    return create_engine(url, pool_pre_ping=True, connect_args=connect_args)


@lru_cache(maxsize=None)
def get_session_factory(url: str | None = None) -> sessionmaker[Session]:
    engine = make_engine(url or get_settings().DATABASE_URL)
    return sessionmaker(bind=engine, autoflush=False, autocommit=False, expire_on_commit=False)
