"""Series and parallel resonance extraction from sampled magnitude responses."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from ..dsp.spectrum import response_peak
from ..errors import NoPeak
from ..models import Method, ResonanceEstimate
from ..signals import FrequencyResponse

Magnitude = Callable[[float], float]

_FLOOR = 1e-300


def _bracket(freqs: np.ndarray, f: float) -> tuple[float, float]:
    k = int(np.clip(np.searchsorted(freqs, f), 1, len(freqs) - 1))
    lo = freqs[max(k - 2, 0)]
    hi = freqs[min(k + 1, len(freqs) - 1)]
    return float(lo), float(hi)


def refine_extremum(
    magnitude: Magnitude, bracket: tuple[float, float], *, minimum: bool, xatol: float = 1e-4
) -> float:
    """Bounded scalar search of ``log|magnitude|`` inside ``bracket``."""

    sign = 1.0 if minimum else -1.0
    result = minimize_scalar(
        lambda f: sign * np.log(max(magnitude(f), _FLOOR)),
        bounds=bracket,
        method="bounded",
        options={"xatol": xatol},
    )
    return float(result.x)


def find_resonances(
    resp: FrequencyResponse,
    band: Optional[tuple[float, float]] = None,
    *,
    method: Method = Method.AC,
    refine: Optional[Magnitude] = None,
) -> ResonanceEstimate:
    """Parallel resonance at the largest magnitude, series at the smallest below it.

    Both extrema are interpolated on the log-magnitude grid; with ``refine``
    (the magnitude as a function of frequency) each is then polished by a
    bounded search between its neighbouring grid points. A response without
    an interior series minimum reports ``f_s = None``.
    """

    freqs = resp.freqs
    band = band or (float(freqs[0]), float(freqs[-1]))
    peak = response_peak(freqs, resp.magnitude, band)
    f_p = peak.f_peak
    if refine is not None:
        f_p = refine_extremum(refine, _bracket(freqs, f_p), minimum=False)

    f_s: Optional[float]
    try:
        dip = response_peak(freqs, resp.magnitude, (band[0], f_p), minimum=True)
        f_s = dip.f_peak
        if refine is not None:
            f_s = refine_extremum(refine, _bracket(freqs, f_s), minimum=True)
    except NoPeak:
        f_s = None
    if f_s is not None and f_s >= f_p:
        f_s = None

    magnitude = refine(f_p) if refine is not None else peak.mag
    return ResonanceEstimate(f_p=f_p, f_s=f_s, method=method, band=band, magnitude=magnitude)
