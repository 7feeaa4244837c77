"""Excitation generators: gated sine bursts and linear chirps."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import signal

from ..circuit.elements import Chirp, SineBurst
from ..errors import InvalidParams, NyquistViolation
from ..signals import Trace

MIN_SAMPLES_PER_CYCLE = 10


def _check_rate(fs: float, f_max: float) -> None:
    if not fs > MIN_SAMPLES_PER_CYCLE * f_max:
        raise NyquistViolation(
            f"sample rate {fs:.6g} Hz must exceed {MIN_SAMPLES_PER_CYCLE}x the highest "
            f"frequency {f_max:.6g} Hz"
        )


def _sample_count(seconds: float, fs: float) -> int:
    return int(math.ceil(seconds * fs - 1e-9))


def gen_sine_burst(
    f: float,
    cycles: float,
    fs: float,
    amp: float = 1.0,
    *,
    duration: Optional[float] = None,
) -> Trace:
    """``cycles`` zero-phase periods at ``f`` followed by silence up to ``duration``."""

    if f <= 0 or cycles <= 0:
        raise InvalidParams("burst frequency and cycle count must be positive")
    _check_rate(fs, f)
    burst = SineBurst(amp, f, cycles)
    length = _sample_count(duration if duration is not None else burst.end, fs)
    t = np.arange(length) / fs
    return Trace(burst.values(t), fs, 0.0, f"burst {f:.6g} Hz x {cycles:g}")


def gen_chirp(
    f0: float,
    f1: float,
    duration: float,
    fs: float,
    amp: float = 1.0,
    *,
    total: Optional[float] = None,
) -> Trace:
    """Linear sweep ``f0 -> f1`` starting at zero phase, zero after ``duration``."""

    if duration <= 0 or f0 <= 0 or f1 <= 0:
        raise InvalidParams("chirp frequencies and duration must be positive")
    _check_rate(fs, max(f0, f1))
    t = np.arange(_sample_count(total if total is not None else duration, fs)) / fs
    sweep = amp * signal.chirp(t, f0=f0, t1=duration, f1=f1, method="linear", phi=-90)
    return Trace(np.where(t < duration, sweep, 0.0), fs, 0.0, f"chirp {f0:.6g}-{f1:.6g} Hz")


def chirp_instantaneous_frequency(f0: float, f1: float, duration: float, t: np.ndarray) -> np.ndarray:
    return Chirp(f0, f1, duration).instantaneous_frequency(t)


def spectrogram_ridge(trace: Trace, segment: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Time centres and peak frequency of each short-time FFT column."""

    segment = min(segment, len(trace))
    freqs, times, power = signal.spectrogram(
        trace.samples, fs=trace.sample_rate, window="hann", nperseg=segment, noverlap=segment // 2
    )
    return trace.t0 + times, freqs[np.argmax(power, axis=0)]
