"""Turn a parsed document into a flat :class:`Circuit`, expanding macros."""

from __future__ import annotations

from typing import Mapping

import structlog
from pydantic import ValidationError

from ..circuit.circuit import Circuit
from ..circuit.elements import (
    Capacitor,
    Cccs,
    Element,
    Inductor,
    LosslessLine,
    LossyLine,
    Resistor,
    VSource,
    Vcvs,
)
from ..circuit.piezo import PiezoPorts, expand_piezo
from ..errors import InvalidParams, PortArityMismatch, UnknownPreset
from ..piezo_model import TransducerParams
from .parser import ElementDecl, NetlistDocument

logger = structlog.get_logger(__name__)

_OVERRIDE_FIELDS = {"C0": "c0", "h": "h", "Zc": "zc", "tau_c": "tau_c"}


def _primitive(decl: ElementDecl) -> Element:
    nodes = decl.nodes
    match decl.kind:
        case "R":
            return Resistor(decl.name, *nodes, decl.value)
        case "C":
            return Capacitor(decl.name, *nodes, decl.value)
        case "L":
            return Inductor(decl.name, *nodes, decl.value)
        case "V":
            return VSource(decl.name, *nodes, decl.waveform.build(), decl.ac)
        case "E":
            return Vcvs(decl.name, *nodes, decl.value)
        case "F":
            return Cccs(decl.name, *nodes, decl.sense, decl.value)
        case "T":
            return LosslessLine(decl.name, *nodes, decl.param("Z"), decl.param("TD"))
        case "O":
            return LossyLine(
                decl.name,
                *nodes,
                decl.param("R"),
                decl.param("L"),
                decl.param("C"),
                decl.param("LEN"),
                int(decl.param("N")),
            )
    raise ValueError(f"not a primitive element: {decl.kind}")


def _macro(decl: ElementDecl, registry: Mapping[str, TransducerParams]) -> list[Element]:
    preset = str(decl.param("preset"))
    if preset not in registry:
        raise UnknownPreset(
            f"{decl.name}: unknown preset {preset!r}; known: {', '.join(sorted(registry))}",
            span=decl.span,
        )
    params = registry[preset]
    overrides = {_OVERRIDE_FIELDS[key]: value for key, value in decl.params if key in _OVERRIDE_FIELDS}
    if overrides:
        try:
            params = TransducerParams.model_validate({**params.model_dump(), **overrides})
        except ValidationError as exc:
            raise InvalidParams(f"{decl.name}: {exc}", span=decl.span) from exc
    try:
        return expand_piezo(params, PiezoPorts.from_nodes(decl.nodes), decl.name)
    except (PortArityMismatch, InvalidParams) as exc:
        raise type(exc)(f"{decl.name}: {exc.message}", span=decl.span) from exc


def elaborate(doc: NetlistDocument, registry: Mapping[str, TransducerParams]) -> Circuit:
    """Replace every macro by its primitive expansion, keeping document order."""

    elements: list[Element] = []
    for decl in doc.elements:
        if decl.kind == "X":
            elements.extend(_macro(decl, registry))
        else:
            elements.append(_primitive(decl))
    logger.debug("netlist elaborated", declarations=len(doc.elements), elements=len(elements))
    return Circuit.of(elements)
