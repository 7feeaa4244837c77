"""Backscatter channel: interrogator, air gap and sensor node as one circuit.

Node map::

    drive --RS-- tx = interrogator E+          (echo probe)
    XINT front port  int.f --AIR ladder-- usn.f  XUSN front port
    XINT back port   int.b --RB (Z_B)-- 0
    XUSN back port   usn.b --RBX (Z_B_ext)-- 0
    rx = sensor E+ --CL-- 0,  rx --RLEAK-- 0

Every electrical and acoustic reference is ground. ``RLEAK`` only gives the
otherwise capacitive sensor port a DC path. The interrogator backing defaults
to its own characteristic impedance, so it rings down within a few plate
transits and the port falls quiet before the sensor's echo is analysed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property, lru_cache
from typing import Iterable, Optional

import numpy as np
import structlog

from ..circuit.circuit import Circuit
from ..circuit.elements import (
    GROUND,
    Capacitor,
    Chirp,
    Dc,
    LossyLine,
    Pulse,
    Resistor,
    SineBurst,
    VSource,
    Waveform,
)
from ..circuit.mna import MnaLayout, assemble_ac, port_impedance, solve
from ..circuit.piezo import PiezoPorts, expand_piezo
from ..config import settings
from ..dsp.bench import BenchRecord, BenchSession, CircuitBench, ImpulseResponse, ListenWindow, drive_trace
from ..dsp.spectrum import response_peak
from ..errors import InvalidParams, NoPeak
from ..models import ChannelConfig, Method, ResonanceEstimate
from ..signals import FrequencyResponse, Trace
from ..transient import TransientConfig, run_transient
from .resonance import find_resonances

logger = structlog.get_logger(__name__)

DRIVE_SOURCE = "VS"
TX_NODE = "tx"
RX_NODE = "rx"
PROBE_SOURCE = "VPROBE"
LEAK_RESISTANCE = 1e9
ZOOM_STEPS = 3
IMPULSE_CACHE_SIZE = 32
ONSET_CYCLES = 3
ONSET_FRACTION = 0.05
REFERENCE_LENGTHS = 4


def _transmitter(cfg: ChannelConfig) -> list:
    return [
        VSource(DRIVE_SOURCE, "drive", GROUND, Dc(0.0), ac=1.0),
        Resistor("RS", "drive", TX_NODE, cfg.source_resistance),
        *expand_piezo(cfg.interrogator, PiezoPorts(TX_NODE, GROUND, "int.b", GROUND, "int.f", GROUND), "XINT"),
        Resistor("RB", "int.b", GROUND, cfg.interrogator_backing),
    ]


def build_channel(cfg: ChannelConfig) -> Circuit:
    if cfg.interrogator.c0 <= 0 or cfg.usn.c0 <= 0:
        raise InvalidParams("transducer capacitance must be positive")
    air = cfg.air
    elements = [
        *_transmitter(cfg),
        LossyLine("AIR", "int.f", "usn.f", GROUND, air.r_per_m, air.l_per_m, air.c_per_m, air.d, air.segments),
        *expand_piezo(cfg.usn, PiezoPorts(RX_NODE, GROUND, "usn.b", GROUND, "usn.f", GROUND), "XUSN"),
        Resistor("RBX", "usn.b", GROUND, cfg.z_backing_ext),
        Resistor("RLEAK", RX_NODE, GROUND, LEAK_RESISTANCE),
    ]
    if cfg.load.c_load > 0:
        elements.append(Capacitor("CL", RX_NODE, GROUND, cfg.load.c_load))
    return Circuit.of(elements, f"backscatter channel, C_L = {cfg.load.c_load:.4g} F")


def build_reference(cfg: ChannelConfig, lengths: int = REFERENCE_LENGTHS) -> Circuit:
    """The interrogator facing ``lengths`` air gaps ended in the air impedance, no sensor."""

    if cfg.interrogator.c0 <= 0:
        raise InvalidParams("transducer capacitance must be positive")
    air = cfg.air
    elements = [
        *_transmitter(cfg),
        LossyLine(
            "AIR", "int.f", "air.end", GROUND,
            air.r_per_m, air.l_per_m, air.c_per_m, air.d * lengths, air.segments * lengths,
        ),
        Resistor("RT", "air.end", GROUND, air.impedance),
    ]
    return Circuit.of(elements, "interrogator into open air")


def listen_delay(cfg: ChannelConfig) -> float:
    """Wait after the drive before the interrogator port carries only echoes."""

    settle = max(cfg.source_resistance * cfg.interrogator.c0, 1.0 / cfg.interrogator.parallel_resonance)
    return settings.listen_time_constants * settle


@lru_cache(maxsize=IMPULSE_CACHE_SIZE)
def channel_impulse(cfg: ChannelConfig, dt: float) -> ImpulseResponse:
    """Cached ``tx`` response of the channel to a unit drive sample."""

    bench = CircuitBench(build_channel(cfg), DRIVE_SOURCE, TX_NODE, cfg.parallel_resonance)
    logger.debug("channel impulse response opened", c_load=cfg.load.c_load, dt=dt)
    return ImpulseResponse(bench.open(dt))


@dataclass(frozen=True)
class ChannelBench:
    """The channel as a pulse-echo bench: drive at ``VS``, listen at ``tx``.

    Records come from the cached impulse response of the channel, so every
    drive on the same channel and step costs one FFT convolution.
    """

    config: ChannelConfig
    label: str = "channel"
    listen_s: Optional[float] = None

    @cached_property
    def circuit_bench(self) -> CircuitBench:
        return CircuitBench(build_channel(self.config), DRIVE_SOURCE, TX_NODE, self.nominal_frequency, label=self.label)

    @property
    def nominal_frequency(self) -> float:
        return self.config.parallel_resonance

    @property
    def c_load(self) -> float:
        return self.config.load.c_load

    @property
    def listen(self) -> ListenWindow:
        return ListenWindow(listen_delay(self.config), self.listen_s or settings.listen_window_s)

    def with_load(self, c_load: float) -> "ChannelBench":
        return replace(self, config=self.config.with_load(c_load))

    def default_dt(self) -> float:
        return self.circuit_bench.default_dt()

    def impulse(self, dt: Optional[float] = None) -> ImpulseResponse:
        return channel_impulse(self.config, dt or self.default_dt())

    def run(self, drive: Waveform, duration: float, dt: Optional[float] = None) -> BenchRecord:
        dt = dt or self.default_dt()
        steps = TransientConfig(dt=dt, duration=duration).steps
        source = drive_trace(drive, dt, steps, DRIVE_SOURCE)
        response = self.impulse(dt).respond(source.samples)
        return BenchRecord(source, Trace(response, 1.0 / dt, 0.0, TX_NODE))

    def open(self, dt: Optional[float] = None) -> BenchSession:
        return self.circuit_bench.open(dt)


def excitation_end(waveform: Waveform) -> float:
    """End of the drive plus one period."""

    match waveform:
        case SineBurst():
            return waveform.end + 1.0 / waveform.frequency
        case Chirp():
            return waveform.start + waveform.duration + 1.0 / max(waveform.f0, waveform.f1)
        case Pulse() if np.isfinite(waveform.width):
            return waveform.delay + waveform.rise + waveform.width + waveform.fall
        case _:
            return 0.0


@dataclass(frozen=True, slots=True, eq=False)
class BackscatterResult:
    drive: Trace
    tx: Trace
    echo: Trace
    usn: Trace


def run_backscatter(
    cfg: ChannelConfig,
    excitation: Waveform,
    *,
    duration: Optional[float] = None,
    dt: Optional[float] = None,
) -> BackscatterResult:
    """Transmit ``excitation`` and record both electrical ports.

    ``echo`` is the listen gate of the interrogator record; the default
    duration ends with it.
    """

    bench = ChannelBench(cfg)
    dt = dt or bench.default_dt()
    start, stop = bench.listen.gate(excitation_end(excitation))
    duration = duration or stop
    tcfg = TransientConfig(dt=dt, duration=duration, probes=(TX_NODE, RX_NODE))
    traces = run_transient(bench.circuit_bench.driven_by(excitation), tcfg)
    tx = traces[TX_NODE]
    drive = drive_trace(excitation, dt, tcfg.steps, DRIVE_SOURCE)
    logger.info("backscatter run", c_load=cfg.load.c_load, duration=duration, dt=dt)
    return BackscatterResult(drive, tx, tx.window(start, stop), traces[RX_NODE])


@dataclass(frozen=True, slots=True, eq=False)
class EchoOnset:
    component: Trace
    onset: float
    round_trip: float


def echo_onset(
    cfg: ChannelConfig,
    *,
    cycles: int = ONSET_CYCLES,
    fraction: float = ONSET_FRACTION,
    dt: Optional[float] = None,
) -> EchoOnset:
    """Arrival time of the sensor's reflection at the interrogator port.

    The backscatter component is the channel's ``tx`` record minus that of
    the interrogator radiating into open air; the onset is its first sample
    at ``fraction`` of its peak magnitude.
    """

    round_trip = 2.0 * cfg.air.delay
    f = cfg.interrogator.parallel_resonance
    burst = SineBurst(1.0, f, cycles)
    dt = dt or ChannelBench(cfg).default_dt()
    tcfg = TransientConfig(dt=dt, duration=2.0 * round_trip + burst.end, probes=(TX_NODE,))
    channel = run_transient(CircuitBench(build_channel(cfg), DRIVE_SOURCE, TX_NODE, f).driven_by(burst), tcfg)
    reference = run_transient(CircuitBench(build_reference(cfg), DRIVE_SOURCE, TX_NODE, f).driven_by(burst), tcfg)
    samples = channel[TX_NODE].samples - reference[TX_NODE].samples
    component = Trace(samples, 1.0 / dt, 0.0, "backscatter")
    peak = float(np.max(np.abs(samples)))
    if peak == 0.0:
        raise NoPeak("channel and open-air records are identical")
    first = int(np.argmax(np.abs(samples) >= fraction * peak))
    onset = float(component.times[first])
    logger.debug("echo onset", onset=onset, round_trip=round_trip)
    return EchoOnset(component, onset, round_trip)


class SensorPort:
    """In-situ impedance of the sensor's electrical port, load included."""

    def __init__(self, cfg: ChannelConfig) -> None:
        self.config = cfg
        circuit = build_channel(cfg)
        self.circuit = circuit.with_elements([VSource(PROBE_SOURCE, RX_NODE, GROUND, Dc(0.0))])
        self.layout = MnaLayout(self.circuit)

    def impedance(self, f: float) -> complex:
        system = assemble_ac(self.circuit, 2.0 * np.pi * f, excite=PROBE_SOURCE, layout=self.layout)
        current = -solve(system).current(PROBE_SOURCE)
        return complex(np.inf) if current == 0 else 1.0 / current

    def response(self, freqs: Iterable[float]) -> FrequencyResponse:
        return port_impedance(self.circuit, PROBE_SOURCE, freqs, label="Z(rx)")


def sensor_port_response(cfg: ChannelConfig, freqs: Iterable[float]) -> FrequencyResponse:
    return SensorPort(cfg).response(freqs)


def sensor_port_resonance(
    cfg: ChannelConfig, band: Optional[tuple[float, float]] = None, points: int = 201
) -> ResonanceEstimate:
    """The "ac" method: refined extrema of the in-situ sensor port impedance.

    The band is scanned once, then again with the same point count over
    ``ZOOM_STEPS`` coarse steps either side of the coarse peak, so that the
    series and parallel resonances land on separate fine grid points.
    """

    port = SensorPort(cfg)
    band = band or cfg.band()
    coarse = port.response(np.linspace(band[0], band[1], points))
    peak = response_peak(coarse.freqs, coarse.magnitude, band)
    reach = ZOOM_STEPS * (band[1] - band[0]) / (points - 1)
    window = (max(band[0], peak.f_peak - reach), min(band[1], peak.f_peak + reach))
    response = port.response(np.linspace(window[0], window[1], points))
    estimate = find_resonances(
        response, window, method=Method.AC, refine=lambda f: abs(port.impedance(f))
    ).model_copy(update={"band": band})
    logger.debug("sensor port resonance", c_load=cfg.load.c_load, f_p=estimate.f_p, f_s=estimate.f_s)
    return estimate
