from __future__ import annotations

import math

import numpy as np
import pytest

from echolab.circuit.circuit import Circuit, DiagnosticKind, validate
from echolab.circuit.elements import (
    GROUND,
    Capacitor,
    Cccs,
    Dc,
    Inductor,
    LosslessLine,
    LossyLine,
    Resistor,
    VSource,
)
from echolab.circuit.mna import MnaLayout, assemble_ac, factorize, port_impedance, solve_ac, transfer
from echolab.errors import SingularSystem


def rc_lowpass(r: float = 1e3, c: float = 1e-6) -> Circuit:
    return Circuit.of(
        [
            VSource("V1", "in", GROUND, Dc(0.0), ac=1.0),
            Resistor("R1", "in", "out", r),
            Capacitor("C1", "out", GROUND, c),
        ]
    )


def test_valid_circuit_has_no_diagnostics() -> None:
    assert validate(rc_lowpass()) == []


def test_capacitor_only_node_is_floating() -> None:
    circuit = Circuit.of(
        [
            VSource("V1", "a", GROUND, Dc(1.0)),
            Capacitor("C1", "a", "b", 1e-9),
            Capacitor("C2", "b", GROUND, 1e-9),
        ]
    )

    diagnostics = validate(circuit)
    assert [(d.kind, d.subject) for d in diagnostics] == [(DiagnosticKind.FLOATING_NODE, "b")]


def test_duplicate_and_invalid_values_are_reported() -> None:
    circuit = Circuit.of(
        [
            Resistor("R1", "a", GROUND, 1.0),
            Resistor("R1", "a", GROUND, -5.0),
            Cccs("F1", "a", GROUND, "VX", 2.0),
        ]
    )

    kinds = {d.kind for d in validate(circuit)}
    assert DiagnosticKind.DUPLICATE_NAME in kinds
    assert DiagnosticKind.INVALID_VALUE in kinds
    assert DiagnosticKind.UNRESOLVED_SENSED_SOURCE in kinds


def test_ladder_segment_values() -> None:
    line = LossyLine("AIR", "a", "b", GROUND, 0.123, 184.8e-6, 46e-3, 2e-3, 32)
    ladder = line.ladder()

    resistors = [e for e in ladder if isinstance(e, Resistor)]
    inductors = [e for e in ladder if isinstance(e, Inductor)]
    capacitors = [e for e in ladder if isinstance(e, Capacitor)]
    assert len(resistors) == len(inductors) == len(capacitors) == 32
    assert resistors[0].resistance == pytest.approx(0.123 * 2e-3 / 32)
    assert inductors[0].inductance == pytest.approx(184.8e-6 * 2e-3 / 32)
    assert capacitors[-1].capacitance == pytest.approx(46e-3 * 2e-3 / 32)
    assert capacitors[-1].p == "b"


def test_rc_transfer_matches_first_order_pole() -> None:
    r, c = 1e3, 1e-6
    freqs = np.array([10.0, 159.15494309189535, 1e4])
    resp = transfer(rc_lowpass(r, c), "V1", "out", freqs)

    expected = 1.0 / (1.0 + 1j * 2.0 * np.pi * freqs * r * c)
    np.testing.assert_allclose(resp.values, expected, rtol=1e-12)
    assert resp.magnitude[1] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-9)


def rlc_network() -> list:
    return [
        VSource("V1", "in", GROUND, Dc(0.0), ac=1.0),
        Resistor("R1", "in", "a", 120.0),
        Inductor("L1", "a", "b", 1e-3),
        Capacitor("C1", "b", GROUND, 2.2e-9),
        Resistor("R2", "b", "c", 470.0),
        Capacitor("C2", "c", GROUND, 1e-9),
        Inductor("L2", "c", GROUND, 4.7e-3),
        Resistor("R3", "a", "c", 1e4),
    ]


def test_element_order_does_not_change_the_solution() -> None:
    elements = rlc_network()
    omega = 2.0 * np.pi * 95e3
    reference = solve_ac(Circuit.of(elements), omega)

    rng = np.random.default_rng(3)
    for _ in range(5):
        shuffled = [elements[i] for i in rng.permutation(len(elements))]
        sol = solve_ac(Circuit.of(shuffled), omega)
        for node in ("in", "a", "b", "c"):
            assert sol.voltage(node) == pytest.approx(reference.voltage(node), rel=1e-10)


def test_node_block_is_symmetric_without_controlled_sources() -> None:
    circuit = Circuit.of(rlc_network())
    system = assemble_ac(circuit, 2.0 * np.pi * 95e3)

    n = len(system.layout.node_index)
    block = system.matrix[:n, :n]
    np.testing.assert_array_equal(block, block.T)


def lossless_ladder_error(segments: int) -> float:
    z, td, f = 50.0, 1e-6, 100e3
    circuit = Circuit.of(
        [
            VSource("V1", "in", GROUND, Dc(0.0), ac=1.0),
            Resistor("RS", "in", "a", z),
            LossyLine("O1", "a", "b", GROUND, 0.0, 5e-5, 2e-8, 1.0, segments),
            Resistor("RL", "b", GROUND, z),
        ]
    )
    sol = solve_ac(circuit, 2.0 * np.pi * f)
    return abs(sol.voltage("b") / sol.voltage("a") - np.exp(-2j * np.pi * f * td))


def test_lossless_ladder_converges_to_the_ideal_line() -> None:
    coarse, fine = lossless_ladder_error(32), lossless_ladder_error(64)

    assert coarse < 0.05
    assert fine < 0.75 * coarse


def test_port_impedance_of_series_rc() -> None:
    r, c = 50.0, 10e-9
    freqs = np.array([1e3, 1e5])
    resp = port_impedance(rc_lowpass(r, c), "V1", freqs)

    expected = r + 1.0 / (1j * 2.0 * np.pi * freqs * c)
    np.testing.assert_allclose(resp.values, expected, rtol=1e-12)


def test_zero_ohm_resistor_is_a_short() -> None:
    circuit = Circuit.of(
        [
            VSource("V1", "a", GROUND, Dc(0.0), ac=2.0),
            Resistor("R0", "a", "b", 0.0),
            Resistor("R1", "b", GROUND, 4.0),
        ]
    )

    sol = solve_ac(circuit, 1.0)
    assert sol.voltage("b") == pytest.approx(2.0)
    assert sol.current("R0") == pytest.approx(0.5)


def test_matched_line_has_unit_delay_phase() -> None:
    z, td = 50.0, 1e-6
    circuit = Circuit.of(
        [
            VSource("V1", "in", GROUND, Dc(0.0), ac=1.0),
            Resistor("RS", "in", "a", z),
            LosslessLine("T1", "a", GROUND, "b", GROUND, z, td),
            Resistor("RL", "b", GROUND, z),
        ]
    )
    f = 123e3
    sol = solve_ac(circuit, 2.0 * np.pi * f)

    ratio = sol.voltage("b") / sol.voltage("a")
    assert abs(ratio) == pytest.approx(1.0, rel=1e-12)
    assert ratio == pytest.approx(np.exp(-2j * np.pi * f * td), rel=1e-9)


def test_singular_system_names_unknown() -> None:
    circuit = Circuit.of(
        [
            VSource("V1", "a", GROUND, Dc(1.0)),
            VSource("V2", "a", GROUND, Dc(2.0)),
        ]
    )
    layout = MnaLayout(circuit)
    system = assemble_ac(circuit, 1.0, layout=layout)

    with pytest.raises(SingularSystem):
        factorize(system.matrix, layout)


def test_excite_selects_one_source() -> None:
    circuit = Circuit.of(
        [
            VSource("V1", "a", GROUND, Dc(0.0), ac=5.0),
            Resistor("R1", "a", "b", 1.0),
            VSource("V2", "b", GROUND, Dc(0.0), ac=7.0),
        ]
    )

    system = assemble_ac(circuit, 1.0, excite="V2")
    layout = system.layout
    assert system.rhs[layout.branch_index["V1"]] == 0
    assert system.rhs[layout.branch_index["V2"]] == 1
