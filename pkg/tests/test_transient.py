from __future__ import annotations

import numpy as np
import pytest

from echolab.circuit.circuit import Circuit
from echolab.circuit.elements import (
    GROUND,
    Capacitor,
    Dc,
    External,
    Inductor,
    LosslessLine,
    Pulse,
    Resistor,
    SineBurst,
    VSource,
)
from echolab.errors import InvalidCircuit, SessionClosed, StepTooCoarse, UnresolvedNode
from echolab.transient import (
    TransientConfig,
    TransientSession,
    open_session,
    run_transient,
    step_external,
    step_times,
)

R, C = 1e3, 1e-6
TAU = R * C
RISE = 0.1 * TAU


def ramp_rc(waveform=None) -> Circuit:
    return Circuit.of(
        [
            VSource("V1", "in", GROUND, waveform or Pulse(0.0, 1.0, rise=RISE)),
            Resistor("R1", "in", "out", R),
            Capacitor("C1", "out", GROUND, C),
        ]
    )


def ramp_response(t: np.ndarray) -> np.ndarray:
    """RC low-pass response to a unit ramp of length RISE that then holds."""

    during = (t - TAU * (1.0 - np.exp(-t / TAU))) / RISE
    after = 1.0 - (TAU / RISE) * (np.exp(RISE / TAU) - 1.0) * np.exp(-t / TAU)
    return np.where(t <= RISE, during, after)


def rc_error(steps_per_tau: int) -> float:
    dt = TAU / steps_per_tau
    trace = run_transient(ramp_rc(), TransientConfig(dt=dt, duration=5 * TAU, probes=("out",)))["out"]
    return float(np.max(np.abs(trace.samples - ramp_response(trace.times))))


def test_rc_step_accuracy() -> None:
    assert rc_error(1000) < 1e-3


def test_rc_second_order_convergence() -> None:
    ratio = rc_error(250) / rc_error(500)
    assert 3.0 <= ratio <= 5.0


def test_first_sample_is_zero_state() -> None:
    cfg = TransientConfig(dt=TAU / 100, duration=TAU, probes=("out", "in"))
    traces = run_transient(ramp_rc(), cfg)

    assert len(traces["out"]) == cfg.steps + 1
    assert traces["out"].samples[0] == 0.0
    assert traces["in"].samples[1] == pytest.approx(Pulse(0.0, 1.0, rise=RISE).values(step_times(cfg.dt, 1))[0])


def test_matched_line_delays_without_reflection() -> None:
    z, td = 50.0, 1e-6
    dt = td / 100
    pulse = Pulse(0.0, 2.0, rise=50 * dt, fall=50 * dt, width=0.0)
    circuit = Circuit.of(
        [
            VSource("VS", "in", GROUND, pulse),
            Resistor("RS", "in", "a", z),
            LosslessLine("T1", "a", GROUND, "b", GROUND, z, td),
            Resistor("RL", "b", GROUND, z),
        ]
    )
    traces = run_transient(circuit, TransientConfig(dt=dt, duration=4 * td, probes=("in", "a", "b")))
    source, near, far = (traces[k].samples for k in ("in", "a", "b"))

    np.testing.assert_allclose(near, source / 2.0, atol=1e-3)
    np.testing.assert_allclose(far[100:], near[:-100], atol=1e-3)
    assert np.max(np.abs(far[:100])) < 1e-3
    assert np.max(np.abs(near[200:])) < 1e-3


def test_open_line_doubles_at_far_end() -> None:
    z, td = 50.0, 1e-6
    dt = td / 100
    circuit = Circuit.of(
        [
            VSource("VS", "in", GROUND, Pulse(0.0, 1.0, rise=20 * dt)),
            Resistor("RS", "in", "a", z),
            LosslessLine("T1", "a", GROUND, "b", GROUND, z, td),
            Resistor("RL", "b", GROUND, 1e9),
        ]
    )
    far = run_transient(circuit, TransientConfig(dt=dt, duration=1.5 * td, probes=("b",)))["b"]

    assert far.samples[-1] == pytest.approx(1.0, rel=1e-3)


def test_step_rule_against_line_delay() -> None:
    circuit = Circuit.of(
        [
            VSource("VS", "a", GROUND, Dc(1.0)),
            LosslessLine("T1", "a", GROUND, "b", GROUND, 50.0, 1e-6),
            Resistor("RL", "b", GROUND, 50.0),
        ]
    )
    with pytest.raises(StepTooCoarse):
        TransientSession(circuit, 1e-7)
    TransientSession(circuit, 2e-8).close()


def test_invalid_circuit_is_rejected() -> None:
    circuit = Circuit.of(
        [
            VSource("V1", "a", GROUND, Dc(1.0)),
            Capacitor("C1", "a", "b", 1e-9),
            Capacitor("C2", "b", GROUND, 1e-9),
        ]
    )
    with pytest.raises(InvalidCircuit) as info:
        TransientSession(circuit, 1e-9)
    assert info.value.diagnostics[0].subject == "b"


def test_unknown_probe() -> None:
    with pytest.raises(UnresolvedNode):
        TransientSession(ramp_rc(), 1e-6, ("nowhere",))
    with pytest.raises(UnresolvedNode):
        TransientSession(ramp_rc(), 1e-6, ("I(R1)",))


def test_branch_current_probe() -> None:
    cfg = TransientConfig(dt=TAU / 200, duration=3 * TAU, probes=("I(V1)", "out"))
    traces = run_transient(ramp_rc(Dc(1.0)), cfg)

    # the source branch current flows from + through the source, so it is negative when delivering
    expected = -(1.0 - traces["out"].samples[1:]) / R
    np.testing.assert_allclose(traces["I(V1)"].samples[1:], expected, rtol=1e-9, atol=1e-12)


def test_closed_session_refuses_steps() -> None:
    session = TransientSession(ramp_rc(), 1e-6, ("out",))
    session.step()
    session.close()
    assert session.closed
    with pytest.raises(SessionClosed):
        session.step()


def test_external_feed_is_bit_identical() -> None:
    drive = SineBurst(1.0, 2e3, 3)
    dt, steps = TAU / 200, 600
    reference = run_transient(ramp_rc(drive), TransientConfig(dt=dt, duration=steps * dt, probes=("out",)))

    samples = drive.values(step_times(dt, steps))
    cfg = TransientConfig(dt=dt, duration=steps * dt, probes=("out",))
    with open_session(ramp_rc(External()), cfg) as session:
        fed = session.feed({"V1": samples})["out"]

    assert np.array_equal(fed, reference["out"].samples[1:])
    assert session.time == pytest.approx(steps * dt)


def test_single_steps_match_block_feed() -> None:
    drive = SineBurst(1.0, 2e3, 3)
    dt, steps = TAU / 200, 300
    reference = run_transient(ramp_rc(drive), TransientConfig(dt=dt, duration=steps * dt, probes=("out",)))

    samples = drive.values(step_times(dt, steps))
    with TransientSession(ramp_rc(External()), dt, ("out",)) as session:
        stepped = [step_external(session, {"V1": float(x)})["out"] for x in samples]

    np.testing.assert_allclose(stepped, reference["out"].samples[1:], rtol=1e-9, atol=1e-12)


def test_external_source_needs_a_sample() -> None:
    with TransientSession(ramp_rc(External()), 1e-6, ("out",)) as session:
        with pytest.raises(ValueError):
            session.step()


def test_run_transient_rejects_external_sources() -> None:
    with pytest.raises(ValueError):
        run_transient(ramp_rc(External()), TransientConfig(dt=1e-6, duration=1e-5))


def test_lc_tank_oscillates_at_resonance() -> None:
    l, c = 1e-3, 1e-9
    f0 = 1.0 / (2.0 * np.pi * np.sqrt(l * c))
    circuit = Circuit.of(
        [
            VSource("V1", "in", GROUND, Pulse(0.0, 1.0, rise=1e-7, width=1e-6, fall=1e-7)),
            Resistor("R1", "in", "t", 1e5),
            Inductor("L1", "t", GROUND, l),
            Capacitor("C1", "t", GROUND, c),
        ]
    )
    dt = 1.0 / (f0 * 400)
    trace = run_transient(circuit, TransientConfig(dt=dt, duration=40 / f0, probes=("t",)))["t"]
    tail = trace.window(5 / f0).samples
    crossings = np.flatnonzero(np.diff(np.signbit(tail)))

    period = 2.0 * np.mean(np.diff(crossings)) * dt
    assert 1.0 / period == pytest.approx(f0, rel=5e-3)


def test_undriven_tank_rings_down() -> None:
    l, c = 1e-3, 2.533e-9
    f0 = 1.0 / (2.0 * np.pi * np.sqrt(l * c))
    circuit = Circuit.of(
        [
            VSource("V1", "in", GROUND, External()),
            Resistor("RS", "in", "t", 2e4),
            Inductor("L1", "t", GROUND, l),
            Capacitor("C1", "t", GROUND, c),
            Resistor("RP", "t", GROUND, 3e5),
        ]
    )
    period = 64
    dt = 1.0 / (f0 * period)
    kick = np.sin(2.0 * np.pi * np.arange(1, 4 * period + 1) / period)
    with TransientSession(circuit, dt, ("t",)) as session:
        for x in kick:
            step_external(session, {"V1": float(x)})
        tail = np.array([step_external(session, {"V1": 0.0})["t"] for _ in range(16 * period)])

    envelope = np.abs(tail).reshape(8, 2 * period).max(axis=1)
    assert envelope[0] > 0.0
    assert np.all(np.diff(envelope) < 0.0)
    assert envelope[-1] < 0.5 * envelope[0]
