"""Pydantic models for channel configuration, estimates, sweeps and run manifests."""

from __future__ import annotations

import math
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__
from .config import settings
from .piezo_model import AirChannelParams, LoadConfig, Preset, TransducerParams


class Method(str, Enum):
    """Resonance estimation techniques."""

    AC = "ac"
    RINGDOWN = "ringdown"
    CHIRP = "chirp"
    BODE = "bode"
    PLL = "pll"
    ANALYTIC = "analytic"


OPEN_LOOP_METHODS = (Method.RINGDOWN, Method.CHIRP, Method.BODE)
SWEEP_METHODS = (Method.AC, Method.RINGDOWN, Method.CHIRP, Method.BODE, Method.PLL)


class CellStatus(str, Enum):
    """Outcome of one load x method cell of a sweep."""

    SUCCEEDED = "succeeded"
    FAILED = "failed"


class ChannelConfig(BaseModel):
    """Interrogator, air gap and sensor node with its electrical load."""

    model_config = ConfigDict(frozen=True)

    interrogator: TransducerParams
    usn: TransducerParams
    air: AirChannelParams
    load: LoadConfig = Field(default_factory=LoadConfig)
    z_backing: Optional[float] = Field(
        default=None, ge=0, description="interrogator backing, kg/s; None matches its own Z_c"
    )
    z_backing_ext: float = Field(default=0.0, ge=0, description="sensor backing, kg/s")
    source_resistance: float = Field(default_factory=lambda: settings.source_resistance, gt=0)

    @model_validator(mode="after")
    def validate_area(self) -> "ChannelConfig":
        for params in (self.interrogator, self.usn):
            if not math.isclose(params.area, self.air.area, rel_tol=1e-9):
                raise ValueError(
                    f"air line area {self.air.area:.6g} m^2 differs from transducer "
                    f"{params.name!r} area {params.area:.6g} m^2"
                )
        return self

    @classmethod
    def from_preset(
        cls, preset: Preset, *, c_load: float = 0.0, segments: Optional[int] = None
    ) -> "ChannelConfig":
        """Identical transducers on both sides of the preset's air gap."""

        return cls(
            interrogator=preset.transducer,
            usn=preset.transducer,
            air=preset.air_params(segments),
            load=LoadConfig(c_load=c_load),
        )

    def with_load(self, c_load: float) -> "ChannelConfig":
        return self.model_copy(update={"load": LoadConfig(c_load=c_load)})

    @property
    def interrogator_backing(self) -> float:
        return self.interrogator.zc if self.z_backing is None else self.z_backing

    @property
    def parallel_resonance(self) -> float:
        return self.usn.parallel_resonance

    def band(self, fraction: Optional[float] = None) -> tuple[float, float]:
        """Default measurement band ``[1 - fraction, 1 + fraction] * f_p``."""

        fraction = settings.band_fraction if fraction is None else fraction
        f_p = self.parallel_resonance
        return (f_p * (1.0 - fraction), f_p * (1.0 + fraction))


class ResonanceEstimate(BaseModel):
    """Series and parallel resonance found by one method."""

    model_config = ConfigDict(frozen=True)

    f_p: float = Field(gt=0)
    f_s: Optional[float] = Field(default=None, gt=0)
    method: Method
    band: tuple[float, float]
    magnitude: Optional[float] = None

    @model_validator(mode="after")
    def validate_order(self) -> "ResonanceEstimate":
        if self.f_s is not None and not self.f_s < self.f_p:
            raise ValueError(f"series resonance {self.f_s} must lie below parallel {self.f_p}")
        if not self.band[0] < self.band[1]:
            raise ValueError("band must be increasing")
        return self


class ShiftCell(BaseModel):
    method: Method
    status: CellStatus = CellStatus.SUCCEEDED
    f_p: Optional[float] = None
    f_s: Optional[float] = None
    shift: Optional[float] = None
    error: Optional[str] = None


class ShiftRow(BaseModel):
    c_load: float = Field(ge=0)
    cells: dict[Method, ShiftCell] = Field(default_factory=dict)

    def cell(self, method: Method) -> ShiftCell:
        return self.cells[method]


class ShiftTable(BaseModel):
    """Parallel resonance per load and method; shift = f_p(C_L) - f_p(0)."""

    methods: list[Method]
    rows: list[ShiftRow] = Field(default_factory=list)

    def f_p(self, method: Method) -> list[Optional[float]]:
        return [row.cells[method].f_p for row in self.rows]

    def f_s(self, method: Method) -> list[Optional[float]]:
        return [row.cells[method].f_s for row in self.rows]

    def shifts(self, method: Method) -> list[Optional[float]]:
        return [row.cells[method].shift for row in self.rows]

    @property
    def loads(self) -> list[float]:
        return [row.c_load for row in self.rows]

    @property
    def failed_cells(self) -> int:
        return sum(
            1 for row in self.rows for cell in row.cells.values() if cell.status is CellStatus.FAILED
        )

    @property
    def succeeded_cells(self) -> int:
        return sum(
            1 for row in self.rows for cell in row.cells.values() if cell.status is CellStatus.SUCCEEDED
        )


class RunManifest(BaseModel):
    """Provenance written as the comment header of every output file."""

    command: str
    presets: list[str] = Field(default_factory=list)
    overrides: dict[str, str] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
    tool_version: str = __version__
    input_hash: str = ""
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
