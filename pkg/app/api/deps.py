"""
app/api/deps.py

Shared route dependencies: the service container, the operator key check,
the X-Principal hook and the exception → HTTP status translation.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from typing import Optional

from fastapi import Header, HTTPException, Request, status
from pydantic import ValidationError

from app.core.config import get_settings
from app.core.exceptions import (
    EngineNotConfiguredError,
    InvalidAssertionError,
    InvalidParametersError,
    InvalidPolicyError,
    KeyNotFoundError,
    MalformedBundleError,
    MalformedElementError,
    PrincipalMismatchError,
    SnapshotError,
    UnknownPolicyError,
)
from app.services.provider_service import ServiceContainer

logger = logging.getLogger(__name__)

KEY_NOT_FOUND = "key-not-found"

_BAD_REQUEST = (
    InvalidPolicyError,
    InvalidParametersError,
    InvalidAssertionError,
    MalformedBundleError,
    MalformedElementError,
    ValidationError,
)


def get_container(request: Request) -> ServiceContainer:
    return request.app.state.container


def require_admin_key(x_admin_key: Optional[str] = Header(default=None)) -> None:
    """
    Operator endpoints (keys, params, revoke, snapshot, restore). If
    SP_ADMIN_API_KEY is unset the check is skipped with a loud warning.
    """
    expected = get_settings().SP_ADMIN_API_KEY.strip()
    if not expected:
        logger.warning("SP_ADMIN_API_KEY is not set; operator endpoints are UNAUTHENTICATED")
        return
    if x_admin_key != expected:
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="Invalid or missing X-Admin-Key")


def principal_header(x_principal: Optional[str] = Header(default=None)) -> Optional[str]:
    return x_principal


@contextmanager
def translate_errors() -> Iterator[None]:
    try:
        yield
    except KeyNotFoundError as exc:
        raise HTTPException(
            status_code=status.HTTP_403_FORBIDDEN,
            detail={"reason": KEY_NOT_FOUND, "user_id": exc.user_id},
        ) from exc
    except PrincipalMismatchError as exc:
        raise HTTPException(status_code=status.HTTP_403_FORBIDDEN, detail=str(exc)) from exc
    except _BAD_REQUEST as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc)) from exc
    except UnknownPolicyError as exc:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(exc)) from exc
    except EngineNotConfiguredError as exc:
        raise HTTPException(status_code=status.HTTP_503_SERVICE_UNAVAILABLE, detail=str(exc)) from exc
    except SnapshotError as exc:
        logger.error("snapshot operation failed: %s", exc)
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(exc)) from exc
