"""
app/services/scheduler.py

Background housekeeping for the service provider:
  • session purge      drops expired active roles and unclaimed PIP batches
  • autosnapshot       periodic save_store (only when the interval is > 0)
"""

from __future__ import annotations

import logging
from typing import Callable, Optional

from apscheduler.schedulers.background import BackgroundScheduler
from apscheduler.triggers.interval import IntervalTrigger

from app.core.config import Settings
from app.services.attribute_broker import AttributeBroker
from app.services.engine import ServiceProvider
from app.services.snapshot_service import SnapshotRepository, save_store

logger = logging.getLogger(__name__)

JOB_SESSION_PURGE = "session_purge"
JOB_AUTOSNAPSHOT = "autosnapshot"

_scheduler: BackgroundScheduler | None = None
_expected_jobs: set[str] = set()


def _run_job(job_fn: Callable[[], object], job_name: str) -> None:
    try:
        job_fn()
    except Exception:
        logger.exception("%s failed unexpectedly", job_name)


def _purge(sp: ServiceProvider, broker: Optional[AttributeBroker]) -> None:
    sp.purge_sessions()
    if broker is not None:
        broker.purge_expired()


# ── Lifecycle ─────────────────────────────────────────────────────────────────


def start_scheduler(
    sp: ServiceProvider,
    settings: Settings,
    broker: Optional[AttributeBroker] = None,
    repository: Optional[SnapshotRepository] = None,
) -> None:
    global _scheduler, _expected_jobs
    _scheduler = BackgroundScheduler(
        timezone="UTC",
        job_defaults={
            "coalesce": True,  # if a job was missed multiple times, run it once
            "max_instances": 1,  # never overlap
            "misfire_grace_time": 300,
        },
    )

    _scheduler.add_job(
        _run_job,
        trigger=IntervalTrigger(seconds=settings.SP_SESSION_PURGE_INTERVAL_SEC),
        args=[lambda: _purge(sp, broker), "Session purge"],
        id=JOB_SESSION_PURGE,
        name="Expired active roles + unclaimed attribute batches",
        replace_existing=True,
    )
    _expected_jobs = {JOB_SESSION_PURGE}

    if settings.SP_AUTOSNAPSHOT_INTERVAL_SEC > 0 and repository is not None:
        _scheduler.add_job(
            _run_job,
            trigger=IntervalTrigger(seconds=settings.SP_AUTOSNAPSHOT_INTERVAL_SEC),
            args=[lambda: save_store(sp, repository), "Autosnapshot"],
            id=JOB_AUTOSNAPSHOT,
            name="Periodic store snapshot",
            replace_existing=True,
        )
        _expected_jobs.add(JOB_AUTOSNAPSHOT)

    _scheduler.start()
    logger.info(
        "Scheduler started: purge every %ds, autosnapshot %s",
        settings.SP_SESSION_PURGE_INTERVAL_SEC,
        f"every {settings.SP_AUTOSNAPSHOT_INTERVAL_SEC}s"
        if JOB_AUTOSNAPSHOT in _expected_jobs
        else "off",
    )
    for job in _scheduler.get_jobs():
        logger.info("Scheduled: %s (next run at %s)", job.name, job.next_run_time)


def stop_scheduler() -> None:
    global _scheduler
    if _scheduler and _scheduler.running:
        _scheduler.shutdown(wait=False)
        logger.info("Scheduler stopped")
    _scheduler = None


def is_scheduler_running() -> bool:
    """For /health/ready: scheduler up and every expected job registered."""
    if _scheduler is None or not _scheduler.running:
        return False
    return _expected_jobs.issubset({job.id for job in _scheduler.get_jobs()})


def scheduled_jobs() -> list[dict]:
    if _scheduler is None:
        return []
    return [
        {
            "id": job.id,
            "name": job.name,
            "next_run_time": job.next_run_time.isoformat() if job.next_run_time else None,
        }
        for job in _scheduler.get_jobs()
    ]
