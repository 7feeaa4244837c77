"""Closed-form thickness-mode input impedance, used to check the circuit model.

For a plate with both faces free,

    Z(w) = (1 / (j w C0)) * (1 - k^2 tan(theta) / theta),   theta = w T / (2 v).

By default ``k^2`` is the coupling implied by the parameter set,
``h^2 C0 T / (Zc v)``, which is what the Leach circuit realises. Passing
``kt`` evaluates the textbook form with a stated coupling factor instead.
"""

from __future__ import annotations

import math
from typing import Optional

from scipy.optimize import brentq

from ..errors import PoleProximity
from ..models import Method, ResonanceEstimate
from ..piezo_model import TransducerParams

POLE_THRESHOLD = 1e-9


def effective_coupling(params: TransducerParams) -> float:
    return params.effective_coupling


def analytic_impedance(params: TransducerParams, omega: float, kt: Optional[float] = None) -> complex:
    if not omega > 0:
        raise ValueError("omega must be positive")
    theta = omega * params.T / (2.0 * params.v)
    if abs(math.cos(theta)) < POLE_THRESHOLD:
        raise PoleProximity(f"theta = {theta:.12g} rad sits on a half-wave pole")
    k = effective_coupling(params) if kt is None else kt
    return (1.0 - k * k * math.tan(theta) / theta) / (1j * omega * params.c0)


def analytic_resonances(params: TransducerParams, kt: Optional[float] = None) -> ResonanceEstimate:
    """Fundamental series and parallel resonance of the closed form.

    The parallel resonance is the first pole, ``theta = pi/2``; the series
    resonance is the root of ``tan(theta)/theta = 1/k^2`` below it.
    """

    k = effective_coupling(params) if kt is None else kt
    if not 0.0 < k < 1.0:
        raise ValueError(f"coupling {k:.6g} must lie in (0, 1)")
    target = 1.0 / (k * k)
    theta_s = brentq(lambda th: math.tan(th) / th - target, 1e-9, math.pi / 2.0 - 1e-12, xtol=1e-15)
    to_hz = params.v / (math.pi * params.T)
    f_p = params.parallel_resonance
    return ResonanceEstimate(
        f_p=f_p, f_s=theta_s * to_hz, method=Method.ANALYTIC, band=(0.0, 2.0 * f_p)
    )
