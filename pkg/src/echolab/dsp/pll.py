"""Discrete phase-locked loop that steers the drive frequency onto a phase setpoint.

Each iteration drives the bench for ``settle + cycles`` periods of a
phase-continuous oscillator, demodulates drive and response over the last
``cycles`` periods, and applies a PI update

    f <- clamp(f + Kp * e + Ki * sum(e)),   e = wrap(setpoint - phase).

The bench keeps its state between iterations; a change of load opens a new
session because the circuit itself changes. A pulse-echo bench cannot be
heard while it is driven, so there every iteration is a fresh burst from
rest and the phase comes from its listen gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import structlog

from ..config import settings
from ..errors import LossOfLock
from ..signals import Trace
from .bench import Bench, BenchSession
from .lockin import lockin_demod
from .measure import steady_state_point, wrap_phase

logger = structlog.get_logger(__name__)

PROPORTIONAL_FRACTION = 0.3
INTEGRAL_RATIO = 0.1


@dataclass(frozen=True, slots=True)
class PllGains:
    kp: float
    ki: float
    slope: float = math.nan

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kp) and math.isfinite(self.ki)):
            raise ValueError("loop gains must be finite")


@dataclass(frozen=True, slots=True)
class PllLogEntry:
    iteration: int
    c_load: float
    frequency: float
    phase: float
    phase_error: float


@dataclass
class PllState:
    frequency: float
    setpoint: float
    gains: PllGains
    band: tuple[float, float]
    integrator: float = 0.0
    pinned: int = 0
    log: list[PllLogEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        lo, hi = self.band
        if not lo < hi:
            raise ValueError("PLL band must be increasing")
        self.frequency = min(max(self.frequency, lo), hi)

    def update(self, error: float) -> float:
        lo, hi = self.band
        self.integrator += error
        proposed = self.frequency + self.gains.kp * error + self.gains.ki * self.integrator
        self.frequency = min(max(proposed, lo), hi)
        self.pinned = self.pinned + 1 if self.frequency in (lo, hi) else 0
        return self.frequency

    @property
    def frequencies(self) -> list[float]:
        return [entry.frequency for entry in self.log]

    @property
    def errors(self) -> list[float]:
        return [entry.phase_error for entry in self.log]


def measure_phase(bench: Bench, f: float, **kwargs: object) -> float:
    """Open-loop phase of response relative to drive at ``f``."""

    point = steady_state_point(bench, f, **kwargs)
    return float(np.angle(point))


def calibrate_gains(
    bench: Bench,
    f_center: float,
    delta: Optional[float] = None,
    **kwargs: object,
) -> PllGains:
    """Gains from the local phase slope measured at ``f_center +- delta``.

    The default step is a tenth of the band half width, or an eighth of a
    spectral bin of the listen gate on a pulse-echo bench, where the phase
    turns once per bin.
    """

    if delta is None:
        listen = bench.listen
        delta = f_center * settings.band_fraction / 10.0 if listen is None else 1.0 / (8.0 * listen.duration)
    upper = measure_phase(bench, f_center + delta, **kwargs)
    lower = measure_phase(bench, f_center - delta, **kwargs)
    slope = wrap_phase(upper - lower) / (2.0 * delta)
    if slope == 0.0 or not math.isfinite(slope):
        raise LossOfLock(f"phase slope at {f_center:.6g} Hz is zero; loop cannot be closed")
    kp = PROPORTIONAL_FRACTION / slope
    logger.debug("pll gains calibrated", slope=slope, kp=kp)
    return PllGains(kp, INTEGRAL_RATIO * kp, slope)


class _Oscillator:
    def __init__(self, dt: float, amplitude: float) -> None:
        self.dt = dt
        self.amplitude = amplitude
        self.phase = 0.0

    def render(self, f: float, count: int) -> np.ndarray:
        phases = self.phase + 2.0 * np.pi * f * self.dt * np.arange(1, count + 1)
        self.phase = float(phases[-1] % (2.0 * np.pi))
        return self.amplitude * np.sin(phases)


def _loop_phase(
    session: BenchSession, oscillator: _Oscillator, f: float, settle: int, cycles: int
) -> float:
    fs = 1.0 / session.dt
    count = int(math.ceil((settle + cycles + 1) * fs / f))
    drive = oscillator.render(f, count)
    response = session.feed(drive)
    ref = lockin_demod(Trace(drive, fs), f, settle, cycles=cycles)
    out = lockin_demod(Trace(response, fs), f, settle, cycles=cycles)
    if ref.phase is None or out.phase is None:
        raise LossOfLock(f"no response at {f:.6g} Hz to lock onto")
    return wrap_phase(out.phase - ref.phase)


def pll_track(
    bench: Bench,
    setpoint: float,
    gains: PllGains,
    iterations: Optional[int] = None,
    load_schedule: Optional[Sequence[float]] = None,
    *,
    start: Optional[float] = None,
    band: Optional[tuple[float, float]] = None,
    lock_loss: Optional[int] = None,
    settle: Optional[int] = None,
    cycles: Optional[int] = None,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
) -> PllState:
    """Run the loop; ``load_schedule[k]`` is the load during iteration ``k``.

    A schedule shorter than ``iterations`` holds its last value. Raises
    :class:`LossOfLock` when the frequency stays pinned at a band edge for
    more than ``lock_loss`` consecutive iterations.
    """

    iterations = iterations or settings.pll_iterations
    lock_loss = settings.pll_lock_loss_iterations if lock_loss is None else lock_loss
    settle = settings.bode_settle_cycles if settle is None else settle
    cycles = cycles or settings.bode_integration_cycles
    start = start or bench.nominal_frequency
    band = band or (start * (1.0 - settings.band_fraction), start * (1.0 + settings.band_fraction))
    schedule = list(load_schedule) if load_schedule else [bench.c_load]

    state = PllState(start, setpoint, gains, band)
    oscillator = _Oscillator(dt or bench.default_dt(), amplitude)
    echo = bench.listen is not None
    session: Optional[BenchSession] = None
    current_load: Optional[float] = None
    loaded = bench
    try:
        for k in range(iterations):
            load = schedule[min(k, len(schedule) - 1)]
            if load != current_load:
                if session is not None:
                    session.close()
                    session = None
                loaded = bench.with_load(load)
                if not echo:
                    session = loaded.open(oscillator.dt)
                current_load = load
            if session is None:
                phase = measure_phase(loaded, state.frequency, settle=settle, amplitude=amplitude, dt=oscillator.dt)
            else:
                phase = _loop_phase(session, oscillator, state.frequency, settle, cycles)
            error = wrap_phase(setpoint - phase)
            state.log.append(PllLogEntry(k, load, state.frequency, phase, error))
            state.update(error)
            if state.pinned > lock_loss:
                logger.warning("pll lost lock", iteration=k, frequency=state.frequency, c_load=load)
                raise LossOfLock(
                    f"frequency pinned at {state.frequency:.6g} Hz for {state.pinned} iterations",
                    state,
                )
    finally:
        if session is not None:
            session.close()
    logger.info("pll finished", iterations=iterations, frequency=state.frequency)
    return state
