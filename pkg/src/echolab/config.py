"""Configuration for the echolab simulator and measurement toolkit."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime configuration sourced from environment variables."""

    preset_path: Optional[str] = Field(
        default=None,
        description="Extra preset directories, separated by os.pathsep",
    )
    default_preset: str = Field(
        default="pzt-disc-stated", description="Transducer preset used when none is given"
    )

    samples_per_cycle: int = Field(
        default=256,
        ge=16,
        description="Transient time step expressed as samples per cycle of the drive",
    )
    ladder_segments: int = Field(
        default=32, ge=1, description="Section count of the lossy air ladder"
    )
    source_resistance: float = Field(
        default=50.0,
        gt=0.0,
        description="Output resistance of the interrogator pulser in ohm",
    )
    burst_cycles: int = Field(default=10, ge=1, description="Cycles in the ringdown burst")
    ringdown_record_s: float = Field(
        default=400e-6, gt=0.0, description="Echo record captured after the burst"
    )
    chirp_duration_s: float = Field(default=400e-6, gt=0.0)
    chirp_tail_s: float = Field(
        default=200e-6, ge=0.0, description="Record kept after the chirp ends"
    )
    bode_settle_cycles: int = Field(default=60, ge=0)
    bode_integration_cycles: int = Field(default=20, ge=1)
    pll_iterations: int = Field(default=30, ge=1)
    pll_lock_loss_iterations: int = Field(
        default=5,
        ge=1,
        description="Consecutive iterations pinned at a band edge before lock is lost",
    )
    listen_window_s: float = Field(
        default=1.2e-3,
        gt=0.0,
        description="Echo window analysed on pulse-echo benches once the interrogator is quiet",
    )
    listen_time_constants: float = Field(
        default=40.0,
        gt=0.0,
        description="Interrogator RC time constants waited after the drive before listening",
    )
    band_fraction: float = Field(
        default=0.03,
        gt=0.0,
        lt=1.0,
        description="Half width of preset-relative measurement bands",
    )

    sweep_backend: Literal["local", "celery"] = Field(
        default="local", description="Executor for open-loop sweep cells"
    )
    celery_broker_url: str = Field(
        default="redis://localhost:6379/1",
        description="Celery broker connection string",
    )
    celery_result_backend: str = Field(
        default="redis://localhost:6379/2",
        description="Celery result backend connection string",
    )
    celery_task_queue: str = Field(
        default="echolab-sweep",
        description="Celery queue for sweep cells",
    )
    celery_cell_time_limit_s: float = Field(
        default=300.0, gt=0.0, description="Hard limit for one sweep cell on a worker"
    )
    celery_result_expires_s: int = Field(
        default=3600, gt=0, description="Seconds a finished cell stays in the result backend"
    )

    out_dir: Path = Field(default=Path("echolab-out"), description="Output directory")

    log_level: str = Field(default="INFO", description="Application log level")
    log_json: bool = Field(default=False, description="Render log events as JSON")

    model_config = SettingsConfigDict(env_prefix="ECHOLAB_", env_file=None, extra="ignore")


settings = Settings()
