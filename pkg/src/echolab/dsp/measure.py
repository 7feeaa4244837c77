"""Open-loop resonance measurements: ringdown, chirp spectroscopy and Bode sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
import structlog
from scipy import signal
from scipy.fft import rfft, rfftfreq

from ..circuit.elements import Chirp, SineBurst, Waveform
from ..config import settings
from ..errors import TooShort
from ..models import Method, ResonanceEstimate
from ..signals import FrequencyResponse, Spectrum, Trace
from .bench import Bench, BenchRecord, ListenWindow
from .lockin import lockin_demod
from .spectrum import compute_spectrum, estimate_peak, padded_length, response_peak

logger = structlog.get_logger(__name__)

MIN_ECHO_SAMPLES = 16


def default_band(center: float, fraction: Optional[float] = None) -> tuple[float, float]:
    fraction = settings.band_fraction if fraction is None else fraction
    return (center * (1.0 - fraction), center * (1.0 + fraction))


def _detrended(trace: Trace) -> Trace:
    return Trace(signal.detrend(trace.samples), trace.sample_rate, trace.t0, trace.label)


def wrap_phase(phase: float) -> float:
    """Map to ``(-pi, pi]``."""

    wrapped = math.remainder(phase, 2.0 * math.pi)
    return math.pi if wrapped <= -math.pi else wrapped


@dataclass(frozen=True, slots=True, eq=False)
class RingdownCapture:
    echo: Trace
    spectrum: Spectrum
    burst_end: float


def ringdown_capture(
    bench: Bench,
    f: float,
    *,
    cycles: Optional[int] = None,
    record: Optional[float] = None,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
) -> RingdownCapture:
    """Burst at ``f``, then the gated free decay and its windowed spectrum.

    Direct benches keep everything after the burst under a Hann window. On a
    pulse-echo bench only its listen gate is kept, detrended and tapered with
    the gate's window.
    """

    burst = SineBurst(amplitude, f, cycles or settings.burst_cycles)
    listen = bench.listen
    start, stop = burst.end + 1.0 / f, None
    taper = "hann"
    if listen is not None:
        start, stop = listen.gate(start)
        taper = listen.taper
    record = record or stop or settings.ringdown_record_s
    result = bench.run(burst, record, dt)
    echo = result.response.window(start, stop)
    if len(echo) < MIN_ECHO_SAMPLES:
        raise TooShort(f"record of {record:.4g} s leaves {len(echo)} samples after the burst")
    if listen is not None:
        echo = _detrended(echo)
    spectrum = compute_spectrum(echo, window=taper, nfft=padded_length(len(echo)))
    return RingdownCapture(echo, spectrum, burst.end)


def ringdown_measure(
    bench: Bench,
    f: float,
    *,
    band: Optional[tuple[float, float]] = None,
    cycles: Optional[int] = None,
    record: Optional[float] = None,
    dt: Optional[float] = None,
) -> ResonanceEstimate:
    band = band or default_band(bench.nominal_frequency)
    capture = ringdown_capture(bench, f, cycles=cycles, record=record, dt=dt)
    peak = estimate_peak(capture.spectrum, band)
    logger.debug("ringdown measured", drive=f, f_p=peak.f_peak, c_load=bench.c_load)
    return ResonanceEstimate(f_p=peak.f_peak, method=Method.RINGDOWN, band=band, magnitude=peak.mag)


@dataclass(frozen=True, slots=True, eq=False)
class ChirpResult:
    spectrum: Spectrum
    estimate: ResonanceEstimate


def chirp_measure(
    bench: Bench,
    f0: float,
    f1: float,
    duration: Optional[float] = None,
    *,
    tail: Optional[float] = None,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
) -> ChirpResult:
    """Sweep ``f0 -> f1`` and return the response spectrum inside the sweep span.

    On a direct bench both records are transformed whole with a rectangular
    window and the response is divided by the drive; the drive is zero outside
    the sweep and the tail must be long enough for the response to decay. A
    pulse-echo bench is analysed in its listen gate instead, where the drive
    is silent and only the echo spectrum is left.
    """

    duration = duration or settings.chirp_duration_s
    lo, hi = min(f0, f1), max(f0, f1)
    chirp = Chirp(f0, f1, duration, amplitude)
    if bench.listen is not None:
        spectrum = _gated_spectrum(bench, bench.listen, chirp, duration + 1.0 / hi, dt)
    else:
        tail = settings.chirp_tail_s if tail is None else tail
        spectrum = _ratio_spectrum(bench.run(chirp, duration + tail, dt), lo, hi)
    inside = (spectrum.freqs >= lo) & (spectrum.freqs <= hi)
    spectrum = replace(
        spectrum,
        freqs=spectrum.freqs[inside],
        magnitude=spectrum.magnitude[inside],
        meta={**spectrum.meta, "f0": f0, "f1": f1, "duration": duration},
    )
    peak = estimate_peak(spectrum, (lo, hi))
    logger.debug("chirp measured", f0=f0, f1=f1, f_p=peak.f_peak, c_load=bench.c_load)
    estimate = ResonanceEstimate(f_p=peak.f_peak, method=Method.CHIRP, band=(lo, hi), magnitude=peak.mag)
    return ChirpResult(spectrum, estimate)


def _gated_spectrum(
    bench: Bench, listen: ListenWindow, drive: Waveform, end: float, dt: Optional[float]
) -> Spectrum:
    start, stop = listen.gate(end)
    echo = bench.run(drive, stop, dt).response.window(start, stop)
    if len(echo) < MIN_ECHO_SAMPLES:
        raise TooShort(f"listen gate of {listen.duration:.4g} s holds {len(echo)} samples")
    return compute_spectrum(_detrended(echo), window=listen.taper, nfft=padded_length(len(echo)))


def _ratio_spectrum(result: BenchRecord, lo: float, hi: float) -> Spectrum:
    x, y = result.drive.samples, result.response.samples
    size = padded_length(len(x), 4)
    freqs = rfftfreq(size, result.drive.dt)
    drive, response = rfft(x, n=size), rfft(y, n=size)
    inside = (freqs >= lo) & (freqs <= hi) & (np.abs(drive) > 0)
    magnitude = np.abs(response[inside] / drive[inside])
    return Spectrum(freqs[inside], magnitude, None, window="boxcar", source_length=len(y), meta={})


def steady_state_point(
    bench: Bench,
    f: float,
    *,
    settle: Optional[int] = None,
    cycles: Optional[int] = None,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
) -> complex:
    """Response/drive phasor ratio at ``f`` after ``settle`` cycles of drive.

    A pulse-echo bench is driven by a burst of ``settle`` cycles instead and
    its listen gate is demodulated against the drive's continued phase.
    """

    settle = settings.bode_settle_cycles if settle is None else settle
    if bench.listen is not None:
        return echo_point(bench, bench.listen, f, max(settle, 1), amplitude=amplitude, dt=dt)
    cycles = cycles or settings.bode_integration_cycles
    total = settle + cycles + 1
    record = bench.run(SineBurst(amplitude, f, total), total / f, dt)
    ref = lockin_demod(record.drive, f, settle, cycles=cycles)
    out = lockin_demod(record.response, f, settle, cycles=cycles)
    if out.phase is None or ref.phase is None:
        return 0j
    return out.amplitude / ref.amplitude * np.exp(1j * wrap_phase(out.phase - ref.phase))


def echo_point(
    bench: Bench,
    listen: ListenWindow,
    f: float,
    cycles: int,
    *,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
) -> complex:
    burst = SineBurst(amplitude, f, cycles)
    start, stop = listen.gate(burst.end + 1.0 / f)
    echo = bench.run(burst, stop, dt).response.window(start, stop)
    out = lockin_demod(_detrended(echo), f, window=listen.taper)
    if out.phase is None:
        return 0j
    return out.amplitude / amplitude * np.exp(1j * out.phase)


def bode_measure(
    bench: Bench,
    f_grid: Iterable[float],
    *,
    settle: Optional[int] = None,
    cycles: Optional[int] = None,
    dt: Optional[float] = None,
) -> FrequencyResponse:
    """Lock-in magnitude and phase of the response at every grid frequency."""

    grid = np.asarray(list(f_grid), dtype=float)
    values = np.array(
        [steady_state_point(bench, f, settle=settle, cycles=cycles, dt=dt) for f in grid],
        dtype=complex,
    )
    logger.debug("bode measured", points=len(grid), c_load=bench.c_load)
    return FrequencyResponse(grid, values, "bode")


def bode_resonance(
    bench: Bench,
    band: tuple[float, float],
    points: int = 21,
    *,
    settle: Optional[int] = None,
    cycles: Optional[int] = None,
    dt: Optional[float] = None,
) -> tuple[FrequencyResponse, ResonanceEstimate]:
    response = bode_measure(bench, np.linspace(band[0], band[1], points), settle=settle, cycles=cycles, dt=dt)
    peak = response_peak(response.freqs, response.magnitude, band)
    estimate = ResonanceEstimate(f_p=peak.f_peak, method=Method.BODE, band=band, magnitude=peak.mag)
    return response, estimate
