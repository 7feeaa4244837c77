"""Windowed FFT spectra and interpolated peak picking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal
from scipy.fft import next_fast_len, rfft, rfftfreq

from ..errors import NoPeak
from ..signals import Spectrum, Trace

_FLOOR = 1e-300


@dataclass(frozen=True, slots=True)
class PeakEstimate:
    f_peak: float
    mag: float


def compute_spectrum(
    trace: Trace,
    *,
    window: str = "hann",
    nfft: Optional[int] = None,
    with_phase: bool = False,
) -> Spectrum:
    """One-sided amplitude spectrum; a full-scale tone reads its amplitude."""

    n = len(trace)
    if n == 0:
        raise NoPeak(f"trace {trace.label!r} is empty")
    taper = signal.get_window(window, n, fftbins=False) if n > 1 else np.ones(1)
    size = max(n, nfft or 0)
    coeffs = rfft(trace.samples * taper, n=size)
    scale = 2.0 / np.sum(taper)
    return Spectrum(
        rfftfreq(size, trace.dt),
        np.abs(coeffs) * scale,
        np.angle(coeffs) if with_phase else None,
        window=window,
        source_length=n,
        meta={"label": trace.label, "nfft": size},
    )


def padded_length(n: int, factor: int = 8) -> int:
    return next_fast_len(n * factor, real=True)


def spectral_energy(trace: Trace) -> float:
    """Energy ``sum(x^2) dt`` evaluated in the frequency domain."""

    n = len(trace)
    power = np.abs(rfft(trace.samples)) ** 2
    weights = np.full(power.shape, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum(weights * power) / n * trace.dt)


def parabolic_vertex(x: np.ndarray, y: np.ndarray, k: int) -> tuple[float, float]:
    """Vertex of the parabola through points ``k-1, k, k+1`` of a uniform grid."""

    alpha, beta, gamma = y[k - 1], y[k], y[k + 1]
    denom = alpha - 2.0 * beta + gamma
    offset = 0.0 if denom == 0 else 0.5 * (alpha - gamma) / denom
    step = 0.5 * (x[k + 1] - x[k - 1])
    return float(x[k] + offset * step), float(beta - 0.25 * (alpha - gamma) * offset)


def estimate_peak(spec: Spectrum, band: tuple[float, float]) -> PeakEstimate:
    """Largest in-band bin, refined on log magnitude; edge maxima are rejected."""

    if not np.any(spec.magnitude > 0):
        raise NoPeak("spectrum is identically zero")
    return response_peak(spec.freqs, spec.magnitude, band)


def response_peak(
    freqs: np.ndarray, magnitude: np.ndarray, band: tuple[float, float], *, minimum: bool = False
) -> PeakEstimate:
    """Interior extremum of a sampled magnitude curve, refined on its logarithm."""

    lo, hi = band
    idx = np.flatnonzero((freqs >= lo) & (freqs <= hi))
    if idx.size < 3:
        raise NoPeak(f"band {lo:.6g}-{hi:.6g} Hz holds {idx.size} points, need at least 3")
    logs = np.log(np.maximum(np.asarray(magnitude, dtype=float)[idx], _FLOOR))
    if minimum:
        logs = -logs
    if np.all(logs == logs[0]):
        raise NoPeak(f"response is flat in band {lo:.6g}-{hi:.6g} Hz")
    k = int(np.argmax(logs))
    if k == 0 or k == idx.size - 1:
        kind = "minimum" if minimum else "maximum"
        raise NoPeak(f"no interior {kind} in band {lo:.6g}-{hi:.6g} Hz")
    f_peak, value = parabolic_vertex(np.asarray(freqs, dtype=float)[idx], logs, k)
    return PeakEstimate(f_peak, float(np.exp(-value if minimum else value)))
