"""
app/main.py
"""

from __future__ import annotations

import logging
from collections.abc import AsyncGenerator
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from app.api.router import api_router
from app.core.config import Settings, get_settings
from app.core.logging_config import configure_logging
from app.services.provider_service import ServiceContainer, build_container
from app.services.scheduler import is_scheduler_running, start_scheduler, stop_scheduler

logger = logging.getLogger(__name__)


def create_app(
    settings: Optional[Settings] = None,
    container: Optional[ServiceContainer] = None,
) -> FastAPI:
    """
    `container` is for tests and the CLI: when given, the lifespan uses it as-is
    and starts no scheduler.
    """

    # ── Lifespan ──────────────────────────────────────────────────────────────
    @asynccontextmanager
    async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
        cfg = settings or get_settings()
        if container is not None:
            app.state.container = container
            yield
            return

        configure_logging(cfg.SP_LOG_LEVEL)
        logger.info("Starting encrypted RBAC service provider...")
        app.state.container = build_container(cfg)
        sp = app.state.container.sp
        logger.info(
            "Engine %s: %d key set(s), policy digest %s",
            "configured" if sp.configured else "waiting for public parameters",
            len(sp.key_store),
            sp.policy_digest()[:12],
        )

        if not cfg.SP_ENABLE_SCHEDULER:
            logger.warning(
                "SP_ENABLE_SCHEDULER=false; expired sessions are only dropped on "
                "lookup and no autosnapshots are taken."
            )
        else:
            start_scheduler(sp, cfg, app.state.container.broker, app.state.container.repository)

        yield

        # ── Graceful shutdown ─────────────────────────────────────────────────
        stop_scheduler()
        if cfg.SP_AUTOSNAPSHOT_INTERVAL_SEC > 0 and app.state.container.repository is not None:
            try:
                app.state.container.repository.save(sp.snapshot())
            except Exception:
                logger.exception("final snapshot failed")
        logger.info("Service provider stopped.")

    app = FastAPI(title="Encrypted RBAC Service Provider", lifespan=lifespan)
    app.include_router(api_router, prefix="/api/v1")

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:
        logger.exception("Unhandled error on %s %s", request.method, request.url.path)
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    # ── Health endpoints ──────────────────────────────────────────────────────

    @app.get("/health", tags=["ops"])
    async def health() -> dict:
        """Liveness probe: 200 as long as the process is running."""
        return {"status": "ok"}

    @app.get("/health/ready", tags=["ops"])
    async def readiness(request: Request) -> JSONResponse:
        """
        Readiness probe. 503 until public parameters are installed; the
        scheduler is only checked when it is enabled.
        """
        cfg = settings or get_settings()
        checks: dict[str, str] = {}
        c: Optional[ServiceContainer] = getattr(request.app.state, "container", None)
        checks["engine"] = "ok" if c is not None and c.sp.configured else "not-configured"
        if cfg.SP_ENABLE_SCHEDULER and container is None:
            checks["scheduler"] = "ok" if is_scheduler_running() else "stopped"

        overall = "ok" if all(v == "ok" for v in checks.values()) else "degraded"
        return JSONResponse(
            content={"status": overall, "checks": checks},
            status_code=200 if overall == "ok" else 503,
        )

    return app


app = create_app()
