"""Circuit container, node table and structural validation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator

from .elements import (
    GROUND,
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


class DiagnosticKind(str, Enum):
    """Categories of structural problems reported by :func:`validate`."""

    DUPLICATE_NAME = "DuplicateName"
    UNRESOLVED_SENSED_SOURCE = "UnresolvedSensedSource"
    FLOATING_NODE = "FloatingNode"
    INVALID_VALUE = "InvalidValue"
    MISSING_GROUND = "MissingGround"


@dataclass(frozen=True, slots=True)
class Diagnostic:
    kind: DiagnosticKind
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.subject}: {self.message}"


@dataclass(frozen=True)
class Circuit:
    """Flat element graph; ground is node ``"0"`` at index 0."""

    elements: tuple[Element, ...]
    title: str = ""

    @classmethod
    def of(cls, elements: Iterable[Element], title: str = "") -> "Circuit":
        return cls(tuple(elements), title)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    @cached_property
    def flat(self) -> tuple[Element, ...]:
        """Elements with every lossy line replaced by its ladder."""

        out: list[Element] = []
        for element in self.elements:
            if isinstance(element, LossyLine):
                out.extend(element.ladder())
            else:
                out.append(element)
        return tuple(out)

    @cached_property
    def nodes(self) -> dict[str, int]:
        table = {GROUND: 0}
        for element in self.flat:
            for node in element.nodes:
                if node not in table:
                    table[node] = len(table)
        return table

    @cached_property
    def by_name(self) -> dict[str, Element]:
        return {element.name: element for element in self.flat}

    def element(self, name: str) -> Element:
        return self.by_name[name]

    def with_elements(self, extra: Iterable[Element]) -> "Circuit":
        return Circuit(self.elements + tuple(extra), self.title)

    def without(self, names: Iterable[str]) -> "Circuit":
        drop = set(names)
        return Circuit(tuple(e for e in self.elements if e.name not in drop), self.title)

    def min_line_delay(self) -> float:
        delays = [e.delay for e in self.flat if isinstance(e, LosslessLine)]
        return min(delays) if delays else math.inf


def _value_problems(element: Element) -> list[str]:
    problems: list[str] = []

    def finite(label: str, value: float) -> bool:
        if not math.isfinite(value):
            problems.append(f"{label} must be finite")
            return False
        return True

    match element:
        case Resistor(resistance=r):
            if finite("resistance", r) and r < 0:
                problems.append("resistance must be >= 0")
        case Capacitor(capacitance=c, initial_voltage=v0):
            if finite("capacitance", c) and c <= 0:
                problems.append("capacitance must be > 0")
            finite("initial voltage", v0)
        case Inductor(inductance=l, initial_current=i0):
            if finite("inductance", l) and l <= 0:
                problems.append("inductance must be > 0")
            finite("initial current", i0)
        case Vcvs(gain=g) | Cccs(gain=g):
            finite("gain", g)
        case LosslessLine(impedance=z, delay=td):
            if finite("impedance", z) and z <= 0:
                problems.append("impedance must be > 0")
            if finite("delay", td) and td <= 0:
                problems.append("delay must be > 0")
        case LossyLine():
            for label, value in (
                ("R'", element.r_per_m),
                ("L'", element.l_per_m),
                ("C'", element.c_per_m),
                ("length", element.length),
            ):
                finite(label, value)
            if element.r_per_m < 0:
                problems.append("R' must be >= 0")
            if element.l_per_m <= 0 or element.c_per_m <= 0 or element.length <= 0:
                problems.append("L', C' and length must be > 0")
            if element.segments < 1:
                problems.append("segments must be >= 1")
        case _:
            pass
    return problems


def _floating_nodes(circuit: Circuit) -> list[str]:
    """Nodes without a DC path to ground.

    Resistors, inductors, voltage-defined branches and the conductors of a
    lossless line carry DC; capacitor plates and current-source terminals
    do not.
    """

    adjacency: dict[str, set[str]] = {}

    def join(a: str, b: str) -> None:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    for element in circuit.flat:
        match element:
            case Resistor() | Inductor() | VSource() | Vcvs():
                join(element.p, element.n)
            case LosslessLine():
                join(element.p1, element.p2)
                join(element.r1, element.r2)
            case _:
                pass

    seen = {GROUND}
    stack = [GROUND]
    while stack:
        node = stack.pop()
        for other in adjacency.get(node, ()):
            if other not in seen:
                seen.add(other)
                stack.append(other)

    floating = []
    for node in circuit.nodes:
        if node == GROUND:
            continue
        if node not in seen:
            floating.append(node)
    return floating


def validate(circuit: Circuit) -> list[Diagnostic]:
    """Return every structural problem of ``circuit``; empty means valid."""

    diagnostics: list[Diagnostic] = []

    counts = Counter(element.name for element in circuit.flat)
    for name, count in counts.items():
        if count > 1:
            diagnostics.append(
                Diagnostic(DiagnosticKind.DUPLICATE_NAME, name, f"defined {count} times")
            )

    for element in circuit.elements:
        for problem in _value_problems(element):
            diagnostics.append(Diagnostic(DiagnosticKind.INVALID_VALUE, element.name, problem))

    sources = {e.name for e in circuit.flat if isinstance(e, VSource)}
    for element in circuit.flat:
        if isinstance(element, Cccs) and element.sense not in sources:
            diagnostics.append(
                Diagnostic(
                    DiagnosticKind.UNRESOLVED_SENSED_SOURCE,
                    element.name,
                    f"sensed source {element.sense!r} is not a V element",
                )
            )

    if circuit.flat and not any(GROUND in e.nodes for e in circuit.flat):
        diagnostics.append(Diagnostic(DiagnosticKind.MISSING_GROUND, GROUND, "no element touches ground"))

    for node in _floating_nodes(circuit):
        diagnostics.append(
            Diagnostic(DiagnosticKind.FLOATING_NODE, node, "node has no path to ground")
        )
    return diagnostics
