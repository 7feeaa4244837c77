"""Synchronous (lock-in) demodulation against a sine reference."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal

from ..errors import TooShort
from ..signals import Trace


@dataclass(frozen=True, slots=True)
class LockinResult:
    amplitude: float
    phase: Optional[float]
    in_phase: float
    quadrature: float


def lockin_demod(
    trace: Trace,
    f_ref: float,
    settle: float = 0.0,
    *,
    cycles: Optional[int] = None,
    window: Optional[str] = None,
) -> LockinResult:
    """Amplitude and phase of the ``f_ref`` component of ``trace``.

    The first ``settle`` reference cycles are discarded, then the products
    with ``sin`` and ``cos`` references are averaged over a whole number of
    cycles (``cycles`` if given, otherwise every full cycle left). The
    reference is ``sin(2 pi f_ref t)`` on the trace's absolute time base, so
    an input ``A sin(2 pi f t + phi)`` yields ``(A, phi)``. A ``window`` name
    weights the products with that taper, which keeps a decaying echo from
    leaking neighbouring lines into the average.
    """

    samples_per_cycle = trace.sample_rate / f_ref
    start = int(math.ceil(settle * samples_per_cycle - 1e-9))
    available = int(math.floor((len(trace) - start) / samples_per_cycle + 1e-9))
    needed = cycles if cycles is not None else 1
    if available < needed:
        raise TooShort(
            f"trace {trace.label!r} holds {max(available, 0)} whole cycles at {f_ref:.6g} Hz after "
            f"{settle:g} settle cycles, need {needed}"
        )
    used = cycles if cycles is not None else available
    stop = start + int(round(used * samples_per_cycle))
    x = trace.samples[start:stop]
    t = trace.times[start:stop]
    arg = 2.0 * np.pi * f_ref * t
    weights = signal.get_window(window, len(x), fftbins=False) if window and len(x) > 1 else np.ones(len(x))
    norm = 2.0 / np.sum(weights)
    i = float(norm * np.sum(weights * x * np.sin(arg)))
    q = float(norm * np.sum(weights * x * np.cos(arg)))
    amplitude = math.hypot(i, q)
    if amplitude == 0.0:
        return LockinResult(0.0, None, 0.0, 0.0)
    phase = math.atan2(q, i)
    if phase <= -math.pi:
        phase = math.pi
    return LockinResult(amplitude, phase, i, q)
