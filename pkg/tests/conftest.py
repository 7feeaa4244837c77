from __future__ import annotations

import math
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from echolab.circuit.circuit import Circuit
from echolab.circuit.elements import GROUND, Capacitor, Dc, Inductor, Resistor, VSource
from echolab.dsp.bench import CircuitBench
from echolab.models import ChannelConfig
from echolab.piezo_model import Preset, PresetRegistry, TransducerParams

TANK_F0 = 100e3
TANK_L = 1e-3
TANK_C = 1.0 / ((2.0 * math.pi * TANK_F0) ** 2 * TANK_L)
TANK_RS = 20e3
TANK_R = 300e3


def tank_circuit() -> Circuit:
    """Parallel RLC tank fed through a series resistor; Q is about 30."""

    return Circuit.of(
        [
            VSource("VS", "in", GROUND, Dc(0.0), ac=1.0),
            Resistor("RS", "in", "out", TANK_RS),
            Inductor("LT", "out", GROUND, TANK_L),
            Capacitor("CT", "out", GROUND, TANK_C),
            Resistor("RT", "out", GROUND, TANK_R),
        ],
        "rlc tank",
    )


@pytest.fixture(scope="session")
def registry() -> PresetRegistry:
    return PresetRegistry()


@pytest.fixture(scope="session")
def stated_preset(registry: PresetRegistry) -> Preset:
    return registry.get("pzt-disc-stated")


@pytest.fixture(scope="session")
def stated_params(stated_preset: Preset) -> TransducerParams:
    return stated_preset.transducer


@pytest.fixture(scope="session")
def channel_cfg(stated_preset: Preset) -> ChannelConfig:
    return ChannelConfig.from_preset(stated_preset)


@pytest.fixture()
def tank_bench() -> CircuitBench:
    return CircuitBench(tank_circuit(), "VS", "out", TANK_F0, load_node="out", label="tank")
