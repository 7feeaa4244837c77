"""Celery tasks: one sweep cell per task, JSON in and JSON out."""

from __future__ import annotations

from typing import Any

import structlog
from celery import Task

from .celery_app import SWEEP_CELL_TASK, celery_app

logger = structlog.get_logger(__name__)


@celery_app.task(name=SWEEP_CELL_TASK, bind=True)
def sweep_cell(self: Task, payload: dict[str, Any]) -> dict[str, Any]:
    """Estimate one (load, method) cell and return the serialised :class:`ShiftCell`."""

    from .experiments.sweep import CellRequest, run_cell  # local import to avoid cycle

    request = CellRequest.model_validate(payload)
    logger.info(
        "sweep cell accepted",
        task_id=self.request.id,
        method=request.method.value,
        c_load=request.c_load,
    )
    return run_cell(request).model_dump(mode="json")
