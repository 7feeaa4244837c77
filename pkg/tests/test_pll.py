from __future__ import annotations

import math

import pytest

from conftest import TANK_C, TANK_F0
from echolab.dsp.measure import bode_resonance
from echolab.dsp.pll import PllGains, PllState, calibrate_gains, measure_phase, pll_track
from echolab.errors import LossOfLock
from echolab.experiments.channel import ChannelBench
from echolab.models import ChannelConfig

DT = 1.0 / (64 * TANK_F0)
LOOP = dict(settle=30, cycles=10, dt=DT)


@pytest.fixture()
def gains(tank_bench) -> PllGains:
    return calibrate_gains(tank_bench, TANK_F0, **LOOP)


def test_update_clamps_to_band() -> None:
    state = PllState(100.0, 0.0, PllGains(kp=10.0, ki=0.0), (90.0, 110.0))

    assert state.update(0.5) == 105.0
    assert state.update(5.0) == 110.0
    assert state.pinned == 1
    assert state.update(-1.0) == 100.0
    assert state.pinned == 0


def test_start_outside_band_is_clamped() -> None:
    state = PllState(200.0, 0.0, PllGains(1.0, 0.1), (90.0, 110.0))

    assert state.frequency == 110.0
    with pytest.raises(ValueError):
        PllState(100.0, 0.0, PllGains(1.0, 0.1), (110.0, 90.0))
    with pytest.raises(ValueError):
        PllGains(math.nan, 0.0)


def test_tank_phase_falls_through_resonance(tank_bench) -> None:
    below = measure_phase(tank_bench, 0.97 * TANK_F0, **LOOP)
    above = measure_phase(tank_bench, 1.03 * TANK_F0, **LOOP)

    assert below > 0.0 > above


def test_gains_follow_phase_slope(gains: PllGains) -> None:
    assert gains.slope < 0.0
    assert gains.kp == pytest.approx(0.3 / gains.slope)
    assert gains.ki == pytest.approx(0.1 * gains.kp)


def test_loop_locks_onto_tank_resonance(tank_bench, gains: PllGains) -> None:
    state = pll_track(tank_bench, 0.0, gains, 40, start=0.98 * TANK_F0, **LOOP)

    assert len(state.log) == 40
    assert state.frequency == pytest.approx(TANK_F0, rel=2e-3)
    assert abs(state.errors[-1]) < 0.02


def test_loop_follows_a_load_step(tank_bench, gains: PllGains) -> None:
    c_load = 0.2e-9
    loaded = TANK_F0 / math.sqrt(1.0 + c_load / TANK_C)
    schedule = [0.0] * 15 + [c_load] * 35
    band = (0.9 * TANK_F0, 1.1 * TANK_F0)

    state = pll_track(tank_bench, 0.0, gains, 50, schedule, start=TANK_F0, band=band, **LOOP)

    assert state.log[14].frequency == pytest.approx(TANK_F0, rel=2e-3)
    assert state.log[15].c_load == c_load
    assert state.frequency == pytest.approx(loaded, rel=3e-3)


def test_loop_loses_lock_outside_band(tank_bench, gains: PllGains) -> None:
    with pytest.raises(LossOfLock) as info:
        pll_track(
            tank_bench, 0.0, gains, 20, start=120.5e3, band=(120e3, 121e3), lock_loss=2, **LOOP
        )

    state = info.value.state
    assert isinstance(state, PllState)
    assert state.frequency == 120e3
    assert len(state.log) < 20


@pytest.fixture(scope="module")
def channel_loop(channel_cfg: ChannelConfig) -> tuple[ChannelBench, float, PllGains]:
    bench = ChannelBench(channel_cfg)
    reference = bench.nominal_frequency
    return bench, measure_phase(bench, reference), calibrate_gains(bench, reference)


def test_channel_gains_come_from_the_listen_gate(channel_loop) -> None:
    bench, _, gains = channel_loop

    assert gains.slope < 0.0
    assert abs(gains.slope) > 2.0 * math.pi * bench.listen.delay


def test_unloaded_channel_holds_its_setpoint(channel_loop) -> None:
    bench, setpoint, gains = channel_loop

    state = pll_track(bench, setpoint, gains, 5, start=bench.nominal_frequency)

    assert max(abs(e) for e in state.errors) < 0.01
    assert state.frequency == pytest.approx(bench.nominal_frequency, abs=1e-6)


def test_channel_loop_follows_a_small_load_step(channel_loop) -> None:
    bench, setpoint, gains = channel_loop
    c_load = 0.25e-9
    schedule = [0.0] * 5 + [c_load] * 25

    state = pll_track(bench, setpoint, gains, 30, schedule, start=bench.nominal_frequency)

    _, bode = bode_resonance(bench.with_load(c_load), bench.config.band())
    assert state.frequency < state.log[4].frequency
    assert state.frequency == pytest.approx(bode.f_p, rel=0.01)
    assert abs(state.errors[-1]) < 0.01
