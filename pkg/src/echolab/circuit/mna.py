"""Modified nodal analysis: unknown layout, AC stamping and dense LU solves.

Sign conventions
----------------
* Node rows hold the sum of currents leaving the node.
* A voltage-defined branch (V, E, L, zero-ohm R) carries its current from
  ``p`` through the element to ``n``.
* A CCCS drives ``gain * I(sense)`` from ``p`` through itself to ``n``, so the
  current is injected into ``n``.
* Each lossless-line port has a branch current flowing into the line at its
  signal terminal and out at its reference terminal. In AC the line is
  stamped with its ABCD chain parameters, which stay finite at the half-wave
  frequencies where the admittance form blows up.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
import structlog
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from ..errors import SingularSystem
from ..signals import FrequencyResponse
from .circuit import Circuit
from .elements import (
    GROUND,
    Capacitor,
    Cccs,
    Inductor,
    LosslessLine,
    Resistor,
    VSource,
    Vcvs,
)

logger = structlog.get_logger(__name__)


def port_branch(line: str, port: int) -> str:
    return f"{line}:{port}"


@dataclass(frozen=True)
class MnaLayout:
    """Unknown map: node voltages first, then branch currents."""

    circuit: Circuit

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {name: idx - 1 for name, idx in self.circuit.nodes.items() if name != GROUND}

    @cached_property
    def branch_index(self) -> dict[str, int]:
        index: dict[str, int] = {}
        offset = len(self.node_index)
        for element in self.circuit.flat:
            match element:
                case VSource() | Vcvs() | Inductor():
                    index[element.name] = offset + len(index)
                case Resistor(resistance=r) if r == 0.0:
                    index[element.name] = offset + len(index)
                case LosslessLine():
                    index[port_branch(element.name, 1)] = offset + len(index)
                    index[port_branch(element.name, 2)] = offset + len(index)
                case _:
                    pass
        return index

    @property
    def size(self) -> int:
        return len(self.node_index) + len(self.branch_index)

    @cached_property
    def labels(self) -> list[str]:
        out = [f"V({name})" for name in self.node_index]
        out.extend(f"I({name})" for name in self.branch_index)
        return out

    def node(self, name: str) -> Optional[int]:
        """Row/column of a node, ``None`` for ground."""

        if name == GROUND:
            return None
        return self.node_index[name]


class Stamper:
    """Accumulates entries into a dense matrix, skipping ground."""

    def __init__(self, layout: MnaLayout, dtype: type) -> None:
        self.layout = layout
        self.matrix = np.zeros((layout.size, layout.size), dtype=dtype)

    def add(self, row: Optional[int], col: Optional[int], value: complex) -> None:
        if row is None or col is None:
            return
        self.matrix[row, col] += value

    def conductance(self, p: str, n: str, g: complex) -> None:
        a, b = self.layout.node(p), self.layout.node(n)
        self.add(a, a, g)
        self.add(b, b, g)
        self.add(a, b, -g)
        self.add(b, a, -g)

    def branch_incidence(self, p: str, n: str, col: int) -> None:
        """KCL entries of a branch current and the ``v_p - v_n`` term of its row."""

        a, b = self.layout.node(p), self.layout.node(n)
        self.add(a, col, 1.0)
        self.add(b, col, -1.0)
        self.add(col, a, 1.0)
        self.add(col, b, -1.0)

    def voltage_term(self, row: int, p: str, n: str, coeff: complex) -> None:
        self.add(row, self.layout.node(p), coeff)
        self.add(row, self.layout.node(n), -coeff)

    def controlled_current(self, elem: Cccs) -> None:
        col = self.layout.branch_index[elem.sense]
        self.add(self.layout.node(elem.p), col, elem.gain)
        self.add(self.layout.node(elem.n), col, -elem.gain)

    def line_port_incidence(self, p: str, r: str, col: int) -> None:
        self.add(self.layout.node(p), col, 1.0)
        self.add(self.layout.node(r), col, -1.0)


def stamp_static(stamper: Stamper) -> None:
    """Entries that do not depend on frequency or time step."""

    layout = stamper.layout
    for element in layout.circuit.flat:
        match element:
            case Resistor(resistance=r) if r == 0.0:
                stamper.branch_incidence(element.p, element.n, layout.branch_index[element.name])
            case Resistor():
                stamper.conductance(element.p, element.n, 1.0 / element.resistance)
            case VSource():
                stamper.branch_incidence(element.p, element.n, layout.branch_index[element.name])
            case Vcvs():
                col = layout.branch_index[element.name]
                stamper.branch_incidence(element.p, element.n, col)
                stamper.voltage_term(col, element.cp, element.cn, -element.gain)
            case Inductor():
                stamper.branch_incidence(element.p, element.n, layout.branch_index[element.name])
            case Cccs():
                stamper.controlled_current(element)
            case LosslessLine():
                stamper.line_port_incidence(
                    element.p1, element.r1, layout.branch_index[port_branch(element.name, 1)]
                )
                stamper.line_port_incidence(
                    element.p2, element.r2, layout.branch_index[port_branch(element.name, 2)]
                )
            case _:
                pass


@dataclass(frozen=True, slots=True, eq=False)
class AcSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    layout: MnaLayout
    omega: float


def _excitation(source: VSource, excite: Optional[str]) -> complex:
    if excite is None:
        return complex(source.ac)
    return 1.0 if source.name == excite else 0.0


def assemble_ac(
    circuit: Circuit,
    omega: float,
    *,
    excite: Optional[str] = None,
    layout: Optional[MnaLayout] = None,
) -> AcSystem:
    """Assemble the complex MNA system at angular frequency ``omega``.

    With ``excite`` set, that source is a unit phasor and every other
    independent source is zero; otherwise each source uses its ``ac`` value.
    """

    if not omega > 0:
        raise ValueError("omega must be positive")
    layout = layout or MnaLayout(circuit)
    stamper = Stamper(layout, complex)
    stamp_static(stamper)
    rhs = np.zeros(layout.size, dtype=complex)

    for element in circuit.flat:
        match element:
            case Capacitor():
                stamper.conductance(element.p, element.n, 1j * omega * element.capacitance)
            case Inductor():
                col = layout.branch_index[element.name]
                stamper.add(col, col, -1j * omega * element.inductance)
            case VSource():
                rhs[layout.branch_index[element.name]] = _excitation(element, excite)
            case LosslessLine():
                phi = omega * element.delay
                row1 = layout.branch_index[port_branch(element.name, 1)]
                row2 = layout.branch_index[port_branch(element.name, 2)]
                # v1 - cos(phi) v2 + jZ sin(phi) i2 = 0
                stamper.voltage_term(row1, element.p1, element.r1, 1.0)
                stamper.voltage_term(row1, element.p2, element.r2, -np.cos(phi))
                stamper.add(row1, row2, 1j * element.impedance * np.sin(phi))
                # i1 - (j sin(phi)/Z) v2 + cos(phi) i2 = 0
                stamper.add(row2, row1, 1.0)
                stamper.voltage_term(row2, element.p2, element.r2, -1j * np.sin(phi) / element.impedance)
                stamper.add(row2, row2, np.cos(phi))
            case _:
                pass

    return AcSystem(stamper.matrix, rhs, layout, omega)


def factorize(matrix: np.ndarray, layout: MnaLayout) -> tuple[np.ndarray, np.ndarray]:
    """Dense LU with partial pivoting; zero pivots raise :class:`SingularSystem`."""

    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            lu, piv = lu_factor(matrix, check_finite=True)
        except LinAlgWarning:
            lu = None
    if lu is not None:
        diag = np.abs(np.diag(lu))
        bad = np.flatnonzero(~np.isfinite(diag) | (diag == 0.0))
        if bad.size == 0:
            return lu, piv
        pivot = int(bad[0])
    else:
        pivot = int(np.argmin(np.abs(np.diag(np.linalg.qr(matrix, mode="r")))))
    label = layout.labels[pivot] if pivot < len(layout.labels) else None
    logger.warning("singular mna system", pivot=pivot, unknown=label)
    raise SingularSystem(pivot, label)


@dataclass(frozen=True, slots=True, eq=False)
class AcSolution:
    x: np.ndarray
    layout: MnaLayout

    def voltage(self, node: str) -> complex:
        idx = self.layout.node(node)
        return 0j if idx is None else complex(self.x[idx])

    def current(self, branch: str) -> complex:
        return complex(self.x[self.layout.branch_index[branch]])


def solve(system: AcSystem) -> AcSolution:
    lu, piv = factorize(system.matrix, system.layout)
    return AcSolution(lu_solve((lu, piv), system.rhs), system.layout)


def solve_ac(circuit: Circuit, omega: float, *, excite: Optional[str] = None) -> AcSolution:
    return solve(assemble_ac(circuit, omega, excite=excite))


def port_impedance(
    circuit: Circuit, source: str, freqs: Iterable[float], *, label: str = ""
) -> FrequencyResponse:
    """Impedance seen by voltage source ``source`` looking into the circuit."""

    layout = MnaLayout(circuit)
    grid = np.asarray(list(freqs), dtype=float)
    values = np.empty(grid.shape, dtype=complex)
    for k, f in enumerate(grid):
        sol = solve(assemble_ac(circuit, 2.0 * np.pi * f, excite=source, layout=layout))
        current = -sol.current(source)
        values[k] = np.inf if current == 0 else 1.0 / current
    return FrequencyResponse(grid, values, label or f"Z({source})")


def transfer(
    circuit: Circuit, source: str, probe: str, freqs: Iterable[float], *, label: str = ""
) -> FrequencyResponse:
    """Node voltage ``probe`` per unit phasor on ``source``."""

    layout = MnaLayout(circuit)
    grid = np.asarray(list(freqs), dtype=float)
    values = np.array(
        [
            solve(assemble_ac(circuit, 2.0 * np.pi * f, excite=source, layout=layout)).voltage(probe)
            for f in grid
        ],
        dtype=complex,
    )
    return FrequencyResponse(grid, values, label or f"V({probe})/V({source})")
