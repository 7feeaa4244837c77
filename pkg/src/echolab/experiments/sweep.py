"""Load sweep: resonance per (C_L, method) cell and shifts against the unloaded row.

Cells of the "ac", "chirp" and "bode" columns are independent and go through
an executor. The ringdown column runs in load order, each burst centred on
the previous row's estimate. The PLL column is one loop carried along the
load schedule, locked to the phase the unloaded channel shows at the mean of
the unloaded open-loop estimates.
"""

from __future__ import annotations

from typing import Iterable, Optional, Protocol, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from ..config import settings
from ..dsp.measure import bode_resonance, chirp_measure, ringdown_measure
from ..dsp.pll import calibrate_gains, measure_phase, pll_track
from ..errors import ComputationError, InputError, InvalidParams
from ..models import (
    SWEEP_METHODS,
    CellStatus,
    ChannelConfig,
    Method,
    ResonanceEstimate,
    ShiftCell,
    ShiftRow,
    ShiftTable,
)
from .channel import ChannelBench, sensor_port_resonance

logger = structlog.get_logger(__name__)

BODE_POINTS = 41
PARALLEL_METHODS = (Method.AC, Method.CHIRP, Method.BODE)


class CellRequest(BaseModel):
    """One sweep cell, JSON-serialisable for remote execution."""

    model_config = ConfigDict(frozen=True)

    channel: ChannelConfig
    method: Method
    band: tuple[float, float]
    drive: Optional[float] = Field(default=None, gt=0, description="burst frequency for ringdown")
    bode_points: int = Field(default=BODE_POINTS, ge=5)

    @property
    def c_load(self) -> float:
        return self.channel.load.c_load


def estimate_cell(request: CellRequest) -> ResonanceEstimate:
    cfg, band = request.channel, request.band
    match request.method:
        case Method.AC:
            return sensor_port_resonance(cfg, band)
        case Method.RINGDOWN:
            return ringdown_measure(ChannelBench(cfg), request.drive or cfg.parallel_resonance, band=band)
        case Method.CHIRP:
            return chirp_measure(ChannelBench(cfg), band[0], band[1]).estimate
        case Method.BODE:
            _, estimate = bode_resonance(ChannelBench(cfg), band, request.bode_points)
            return estimate
        case _:
            raise InvalidParams(f"method {request.method.value!r} is not a per-cell measurement")


def run_cell(request: CellRequest) -> ShiftCell:
    """Estimate one cell; measurement errors become a failed marker."""

    try:
        estimate = estimate_cell(request)
    except (ComputationError, InputError) as exc:
        logger.warning(
            "sweep cell failed", method=request.method.value, c_load=request.c_load, error=str(exc)
        )
        return ShiftCell(method=request.method, status=CellStatus.FAILED, error=f"{type(exc).__name__}: {exc}")
    return ShiftCell(method=request.method, f_p=estimate.f_p, f_s=estimate.f_s)


class SweepExecutor(Protocol):
    def map(self, requests: Sequence[CellRequest]) -> list[ShiftCell]: ...


class LocalExecutor:
    """Runs cells in this process, in order."""

    def map(self, requests: Sequence[CellRequest]) -> list[ShiftCell]:
        return [run_cell(request) for request in requests]


class CeleryExecutor:
    """Fans cells out to ``echolab.sweep_cell`` workers and waits for all of them."""

    def __init__(self, timeout: Optional[float] = None) -> None:
        self.timeout = timeout

    def map(self, requests: Sequence[CellRequest]) -> list[ShiftCell]:
        from ..tasks import sweep_cell  # local import to avoid cycle

        pending = [
            sweep_cell.apply_async(args=[request.model_dump(mode="json")])
            for request in requests
        ]
        logger.info("sweep cells dispatched", cells=len(pending))
        return [ShiftCell.model_validate(result.get(timeout=self.timeout)) for result in pending]


def default_executor() -> SweepExecutor:
    return CeleryExecutor() if settings.sweep_backend == "celery" else LocalExecutor()


def _ringdown_column(
    cfg: ChannelConfig, loads: Sequence[float], band: tuple[float, float], executor: SweepExecutor
) -> list[ShiftCell]:
    cells: list[ShiftCell] = []
    drive = cfg.parallel_resonance
    for load in loads:
        request = CellRequest(channel=cfg.with_load(load), method=Method.RINGDOWN, band=band, drive=drive)
        (cell,) = executor.map([request])
        cells.append(cell)
        if cell.f_p is not None:
            drive = cell.f_p
    return cells


def _reference_frequency(columns: dict[Method, list[ShiftCell]], fallback: float) -> float:
    """Mean unloaded estimate of the open-loop columns that have one."""

    unloaded = [
        cells[0].f_p
        for method in (Method.RINGDOWN, Method.CHIRP, Method.BODE)
        if (cells := columns.get(method)) and cells[0].f_p is not None
    ]
    return float(np.mean(unloaded)) if unloaded else fallback


def _pll_column(
    cfg: ChannelConfig, loads: Sequence[float], band: tuple[float, float], reference: float
) -> list[ShiftCell]:
    """Calibrate on the unloaded channel at ``reference`` then follow the loads."""

    bench = ChannelBench(cfg.with_load(loads[0]))
    try:
        setpoint = measure_phase(bench, reference)
        gains = calibrate_gains(bench, reference)
    except ComputationError as exc:
        error = f"{type(exc).__name__}: {exc}"
        return [ShiftCell(method=Method.PLL, status=CellStatus.FAILED, error=error) for _ in loads]

    cells: list[ShiftCell] = []
    start = reference
    for load in loads:
        try:
            state = pll_track(bench.with_load(load), setpoint, gains, start=start, band=band)
        except ComputationError as exc:
            logger.warning("pll cell failed", c_load=load, error=str(exc))
            cells.append(ShiftCell(method=Method.PLL, status=CellStatus.FAILED, error=f"{type(exc).__name__}: {exc}"))
            continue
        start = state.frequency
        cells.append(ShiftCell(method=Method.PLL, f_p=state.frequency))
    return cells


def _with_shifts(cells: list[ShiftCell]) -> list[ShiftCell]:
    reference = cells[0].f_p
    if reference is None:
        return cells
    return [
        cell if cell.f_p is None else cell.model_copy(update={"shift": cell.f_p - reference})
        for cell in cells
    ]


def sweep_load(
    cfg: ChannelConfig,
    loads: Iterable[float],
    methods: Iterable[Method | str] = SWEEP_METHODS,
    *,
    band: Optional[tuple[float, float]] = None,
    executor: Optional[SweepExecutor] = None,
    bode_points: int = BODE_POINTS,
) -> ShiftTable:
    """Resonance of every (load, method) cell and its shift from the ``C_L = 0`` row.

    Loads are deduplicated and sorted; zero must be among them. A failing
    cell is marked and the sweep continues.
    """

    grid = sorted(set(float(load) for load in loads))
    if grid and grid[0] < 0:
        raise InvalidParams("load capacitance must be non-negative")
    if not grid or grid[0] != 0.0:
        raise InvalidParams("load sweep needs C_L = 0 as its reference")
    try:
        chosen = [Method(m) for m in methods]
    except ValueError as exc:
        raise InvalidParams(str(exc)) from exc
    ordered = [m for m in SWEEP_METHODS if m in chosen]
    if len(ordered) != len(set(chosen)):
        raise InvalidParams("the analytic oracle is not a sweep method")
    band = band or cfg.band()
    executor = executor or default_executor()
    logger.info("load sweep started", loads=len(grid), methods=[m.value for m in ordered])

    columns: dict[Method, list[ShiftCell]] = {}
    parallel = [m for m in ordered if m in PARALLEL_METHODS]
    if parallel:
        requests = [
            CellRequest(channel=cfg.with_load(load), method=method, band=band, bode_points=bode_points)
            for method in parallel
            for load in grid
        ]
        cells = executor.map(requests)
        for index, method in enumerate(parallel):
            columns[method] = cells[index * len(grid) : (index + 1) * len(grid)]
    if Method.RINGDOWN in ordered:
        columns[Method.RINGDOWN] = _ringdown_column(cfg, grid, band, executor)
    if Method.PLL in ordered:
        reference = _reference_frequency(columns, cfg.parallel_resonance)
        columns[Method.PLL] = _pll_column(cfg, grid, band, reference)

    columns = {method: _with_shifts(columns[method]) for method in ordered}
    rows = [
        ShiftRow(c_load=load, cells={method: columns[method][k] for method in ordered})
        for k, load in enumerate(grid)
    ]
    table = ShiftTable(methods=ordered, rows=rows)
    logger.info("load sweep finished", succeeded=table.succeeded_cells, failed=table.failed_cells)
    return table
