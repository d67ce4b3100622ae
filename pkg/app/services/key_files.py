"""
app/services/key_files.py

On-disk formats for key material held outside the service provider.

  • public params file   PublicParams JSON, world-readable (0644)
  • client key-set file  ClientKeySet JSON, owner-only (0600)
  • TKMA state file      params + master secret + issued user ids (0600)
  • server key-set file  ServerKeySet JSON handed to the SP operator (0600)

Secret files are written atomically and refused on read when their mode
lets group/other read them.
"""

from __future__ import annotations

import logging
import os
import stat
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.core.exceptions import InvalidParametersError
from app.schemas.crypto import ClientKeySet, MasterSecret, PublicParams, ServerKeySet
from app.services.utils.atomic_file import atomic_write_text, read_text

logger = logging.getLogger(__name__)

SECRET_FILE_MODE = 0o600
PUBLIC_FILE_MODE = 0o644

M = TypeVar("M", bound=BaseModel)


class KeyAuthorityState(BaseModel):
    model_config = ConfigDict(extra="forbid")

    params: PublicParams
    master_secret: MasterSecret
    issued_users: list[str] = Field(default_factory=list)


def _check_private(path: Path) -> None:
    if os.name != "posix":
        return
    mode = stat.S_IMODE(path.stat().st_mode)
    if mode & 0o077:
        raise InvalidParametersError(
            f"{path} is readable by other users (mode {mode:o}); chmod 600 it first"
        )


def _write(path: str | Path, model: BaseModel, mode: int) -> Path:
    written = atomic_write_text(path, model.model_dump_json(indent=2) + "\n", mode=mode)
    logger.debug("wrote %s (mode %o)", written, mode)
    return written


def _read(path: str | Path, model: type[M], secret: bool) -> M:
    path = Path(path)
    if not path.exists():
        raise InvalidParametersError(f"key file {path} does not exist")
    if secret:
        _check_private(path)
    try:
        return model.model_validate_json(read_text(path))
    except ValidationError as exc:
        raise InvalidParametersError(f"{path} is not a valid {model.__name__} file: {exc}") from exc


def write_public_params(path: str | Path, params: PublicParams) -> Path:
    return _write(path, params, PUBLIC_FILE_MODE)


def read_public_params(path: str | Path) -> PublicParams:
    return _read(path, PublicParams, secret=False)


def write_client_keyset(path: str | Path, keyset: ClientKeySet) -> Path:
    return _write(path, keyset, SECRET_FILE_MODE)


def read_client_keyset(path: str | Path) -> ClientKeySet:
    return _read(path, ClientKeySet, secret=True)


def write_server_keyset(path: str | Path, keyset: ServerKeySet) -> Path:
    return _write(path, keyset, SECRET_FILE_MODE)


def read_server_keyset(path: str | Path) -> ServerKeySet:
    return _read(path, ServerKeySet, secret=True)


def write_authority_state(path: str | Path, state: KeyAuthorityState) -> Path:
    return _write(path, state, SECRET_FILE_MODE)


def read_authority_state(path: str | Path) -> KeyAuthorityState:
    return _read(path, KeyAuthorityState, secret=True)
