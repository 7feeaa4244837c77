"""Leach controlled-source model of a thickness-mode transducer.

Wiring, with every internal node and element name prefixed by the instance
name (``XPZT.V1``, ``XPZT.e1`` ...)::

    E+ --V1--> e1 --C0-- E-          F1 = hC0 * I(V2) injected into e1
    F2 = h * I(V1) into n4, R1 = 1k || C1 = 1F from n4 to E-
    B+ ==T1== F+   (line return conductor at node c)
    c --V2--> d --E1[V(n4) - V(E-)]-- F-

With these orientations the electrical-port impedance is
``(1/jwC0) * (1 - 2 h^2 C0 tan(wT/2v) / (w Zc))``, the two-sided
free-plate thickness-mode result. The backing and front ports share the
acoustic reference node, so ``B-`` must equal ``F-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParams, PortArityMismatch
from ..piezo_model import TransducerParams
from .elements import Capacitor, Cccs, Dc, Element, LosslessLine, Resistor, VSource, Vcvs

INTEGRATOR_R = 1e3
INTEGRATOR_C = 1.0


@dataclass(frozen=True, slots=True)
class PiezoPorts:
    e: str
    e_ref: str
    b: str
    b_ref: str
    f: str
    f_ref: str

    @classmethod
    def from_nodes(cls, nodes: list[str] | tuple[str, ...]) -> "PiezoPorts":
        if len(nodes) != 6:
            raise PortArityMismatch(f"piezo macro needs 6 port nodes, got {len(nodes)}")
        return cls(*nodes)


def expand_piezo(params: TransducerParams, ports: PiezoPorts, name: str = "XPZT") -> list[Element]:
    for label in ("c0", "h", "zc", "tau_c"):
        if not math.isfinite(getattr(params, label)):
            raise InvalidParams(f"{name}: {label} must be finite")
    if ports.b_ref != ports.f_ref:
        raise PortArityMismatch(
            f"{name}: backing reference {ports.b_ref!r} must be the front reference {ports.f_ref!r}"
        )

    def local(suffix: str) -> str:
        return f"{name}.{suffix}"

    e1, n4, c, d = local("e1"), local("n4"), local("c"), local("d")
    return [
        VSource(local("V1"), ports.e, e1, Dc(0.0)),
        Capacitor(local("C0"), e1, ports.e_ref, params.c0),
        Cccs(local("F1"), ports.e_ref, e1, local("V2"), params.h * params.c0),
        Cccs(local("F2"), ports.e_ref, n4, local("V1"), params.h),
        Capacitor(local("C1"), n4, ports.e_ref, INTEGRATOR_C),
        Resistor(local("R1"), n4, ports.e_ref, INTEGRATOR_R),
        LosslessLine(local("T1"), ports.b, c, ports.f, c, params.zc, params.tau_c),
        VSource(local("V2"), c, d, Dc(0.0)),
        Vcvs(local("E1"), d, ports.f_ref, n4, ports.e_ref, 1.0),
    ]
