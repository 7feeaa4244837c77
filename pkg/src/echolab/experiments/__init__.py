"""Channel construction, resonance extraction, load sweeps and the analytic oracle."""

from .channel import (
    BackscatterResult,
    ChannelBench,
    SensorPort,
    build_channel,
    run_backscatter,
    sensor_port_resonance,
    sensor_port_response,
)
from .oracle import analytic_impedance, analytic_resonances, effective_coupling
from .resonance import find_resonances, refine_extremum
from .sweep import CellRequest, CeleryExecutor, LocalExecutor, run_cell, sweep_load

__all__ = [
    "BackscatterResult",
    "CeleryExecutor",
    "CellRequest",
    "ChannelBench",
    "LocalExecutor",
    "SensorPort",
    "analytic_impedance",
    "analytic_resonances",
    "build_channel",
    "effective_coupling",
    "find_resonances",
    "refine_extremum",
    "run_backscatter",
    "run_cell",
    "sensor_port_resonance",
    "sensor_port_response",
    "sweep_load",
]
