"""Celery application for distributing sweep cells over workers."""

from __future__ import annotations

from typing import Any

from celery import Celery

from .config import settings

SWEEP_CELL_TASK = "echolab.sweep_cell"


def create_celery(**overrides: Any) -> Celery:
    """Build the worker app; ``overrides`` land on top of the settings-derived conf."""

    app = Celery("echolab", include=["echolab.tasks"])
    app.conf.update(
        broker_url=settings.celery_broker_url,
        result_backend=settings.celery_result_backend,
        task_routes={SWEEP_CELL_TASK: {"queue": settings.celery_task_queue}},
        task_default_queue=settings.celery_task_queue,
        task_time_limit=settings.celery_cell_time_limit_s,
        result_expires=settings.celery_result_expires_s,
        # a cell is seconds of CPU work; one at a time per child
        task_acks_late=True,
        worker_prefetch_multiplier=1,
        task_serializer="json",
        result_serializer="json",
        accept_content=["json"],
    )
    app.conf.update(overrides)
    return app


celery_app = create_celery()
