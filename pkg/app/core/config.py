from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


PROJECT_ROOT = Path(__file__).resolve().parents[2]
ENV_FILE = PROJECT_ROOT / ".env"
ENV_DIST_FILE = PROJECT_ROOT / ".env.dist"

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=(str(ENV_DIST_FILE), str(ENV_FILE)),
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # ── Listener ─────────────────────────────────────────────────────────────
    SP_LISTEN_HOST: str = "127.0.0.1"
    SP_LISTEN_PORT: int = 8000

    # ── Public parameters published by the TKMA ──────────────────────────────
    # Optional: the service can also receive them via PUT /params or a restore.
    SP_PUBLIC_PARAMS_PATH: Optional[str] = None

    # ── Store snapshots ──────────────────────────────────────────────────────
    SP_SNAPSHOT_BACKEND: Literal["file", "database"] = "file"
    SP_SNAPSHOT_PATH: str = "./var/sp_store.json"
    # Only read by the database backend and by alembic.
    DATABASE_URL: str = "sqlite:///./var/sp_store.db"
    SP_AUTOSNAPSHOT_INTERVAL_SEC: int = 0  # 0 = disabled
    # Database backend: rows kept after each save. Older rows hold superseded
    # (possibly revoked) server key halves and are deleted.
    SP_SNAPSHOT_KEEP: int = Field(default=1, ge=1)

    # ── Contextual attributes (PIP) ──────────────────────────────────────────
    SP_ATTRIBUTE_TIMEOUT_SEC: float = 2.0
    SP_PIP_CALLBACK_URL: Optional[str] = None

    # ── Sessions ─────────────────────────────────────────────────────────────
    SP_SESSION_TTL_SEC: Optional[int] = None  # None = active roles never expire
    SP_SESSION_PURGE_INTERVAL_SEC: int = 60

    # ── Operator endpoints ───────────────────────────────────────────────────
    # Shared secret the operator tooling sends as X-Admin-Key.
    # Leave empty to disable the check (NOT recommended outside a lab setup).
    SP_ADMIN_API_KEY: str = ""

    SP_ENABLE_SCHEDULER: bool = True
    SP_LOG_LEVEL: str = "INFO"

    def validate_config(self) -> None:
        if not self.SP_ADMIN_API_KEY:
            logger.warning(
                "SP_ADMIN_API_KEY is not set; key installation, revocation and "
                "snapshot endpoints are UNAUTHENTICATED."
            )
        if self.SP_ATTRIBUTE_TIMEOUT_SEC <= 0:
            logger.warning(
                "SP_ATTRIBUTE_TIMEOUT_SEC=%s; every conditional decision will "
                "deny with condition-unresolved unless attributes were pushed first.",
                self.SP_ATTRIBUTE_TIMEOUT_SEC,
            )
        if self.SP_SNAPSHOT_BACKEND == "database" and self.DATABASE_URL.startswith(
            "sqlite:///:memory:"
        ):
            logger.warning("DATABASE_URL is in-memory; snapshots will not survive restart.")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    cfg = Settings()
    cfg.validate_config()
    return cfg
