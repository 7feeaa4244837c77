from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from echolab.circuit.circuit import Circuit, validate
from echolab.circuit.elements import GROUND, Dc, Resistor, VSource
from echolab.circuit.mna import port_impedance
from echolab.circuit.piezo import PiezoPorts, expand_piezo
from echolab.errors import InvalidParams, MalformedValue, PoleProximity, PortArityMismatch, UnknownPreset
from echolab.experiments.oracle import analytic_impedance, analytic_resonances
from echolab.experiments.resonance import find_resonances
from echolab.piezo_model import PresetRegistry, consistency_report, derive_air, derive_transducer
from echolab.signals import FrequencyResponse

BASE = dict(rho=7500.0, v=3850.0, eps33=30e-9, e33=23.3, kt=0.5, D=14e-3, T=8e-3)


def free_plate(params) -> Circuit:
    """Leach model with both faces short-circuited, driven by VP."""

    return Circuit.of(
        [
            VSource("VP", "e", GROUND, Dc(0.0), ac=1.0),
            *expand_piezo(params, PiezoPorts("e", GROUND, "b", GROUND, "f", GROUND)),
            Resistor("RB", "b", GROUND, 0.0),
            Resistor("RF", "f", GROUND, 0.0),
        ]
    )


def test_air_line_constants_match_published_values() -> None:
    air = derive_air(rho_a=1.2, v_a=343.0, alpha=0.97, d=2e-3, area=154e-6)

    assert air.r_per_m == pytest.approx(0.124, rel=0.01)
    assert air.l_per_m == pytest.approx(184e-6, rel=0.01)
    assert air.c_per_m == pytest.approx(46e-3, rel=0.01)
    assert air.delay == pytest.approx(2e-3 / 343.0, rel=1e-12)
    assert air.impedance == pytest.approx(1.2 * 343.0 * 154e-6, rel=1e-12)


def test_derived_geometry() -> None:
    params = derive_transducer(**BASE)

    assert params.area == pytest.approx(153.938e-6, rel=1e-5)
    assert params.parallel_resonance == pytest.approx(240_625.0)
    assert params.tau_c == pytest.approx(8e-3 / 3850.0)
    assert params.zc == pytest.approx(4445.0, rel=1e-3)
    assert params.h == pytest.approx(23.3 / 30e-9)


def test_stated_preset_keeps_published_c0_and_h(stated_params) -> None:
    assert stated_params.c0 == pytest.approx(58e-9)
    assert stated_params.h == pytest.approx(7.86e6)
    assert stated_params.effective_coupling**2 == pytest.approx(0.00168, rel=0.01)


def test_consistency_report_flags_capacitance_and_h() -> None:
    report = {row.field: row for row in consistency_report(derive_transducer(**BASE))}

    assert report["C0"].flagged
    assert report["h"].flagged
    assert not report["A"].flagged
    assert not report["Zc"].flagged
    assert not report["N"].flagged
    assert report["tau_c"].relative_gap == pytest.approx(0.0390, abs=1e-3)


def test_registry_lists_builtin_presets(registry) -> None:
    assert {"pzt-disc-derived", "pzt-disc-stated"} <= set(registry.names())
    assert "pzt-disc" in registry
    assert registry.get("pzt-disc").name == "pzt-disc-stated"
    assert registry.get("tableI").name == "pzt-disc-stated"
    assert registry.get("tableI-stated").name == "pzt-disc-stated"
    assert registry.get("tableI-derived").name == "pzt-disc-derived"
    assert {"tableI", "tableI-stated", "tableI-derived"} <= set(registry.transducers())
    with pytest.raises(UnknownPreset):
        registry.get("missing")


def test_user_preset_directory(tmp_path: Path) -> None:
    (tmp_path / "thin.preset").write_text(
        "rho=7500\nv=3850\neps33=30n\ne33=23.3\nkt=0.5\nD=14m\nT=4m\n"
        "rho_a=1.2\nv_a=343\nalpha=0.97\nd=1m\n"
    )
    registry = PresetRegistry([tmp_path])

    preset = registry.get("thin")
    assert preset.transducer.parallel_resonance == pytest.approx(481_250.0)
    assert preset.air.d == pytest.approx(1e-3)
    assert preset.air_params(4).segments == 4


def test_preset_missing_key(tmp_path: Path) -> None:
    (tmp_path / "broken.preset").write_text("rho=7500\nv=3850\n")
    with pytest.raises(InvalidParams):
        PresetRegistry([tmp_path]).get("broken")


def test_preset_bad_number(tmp_path: Path) -> None:
    (tmp_path / "bad.preset").write_text(
        "rho=lots\nv=3850\neps33=30n\ne33=23.3\nkt=0.5\nD=14m\nT=4m\n"
        "rho_a=1.2\nv_a=343\nalpha=0.97\nd=1m\n"
    )
    with pytest.raises(MalformedValue):
        PresetRegistry([tmp_path]).get("bad")


def test_expansion_names_and_count(stated_params) -> None:
    elements = expand_piezo(stated_params, PiezoPorts("e", GROUND, "b", GROUND, "f", GROUND), "XA")

    assert len(elements) == 9
    assert [e.name for e in elements] == [
        "XA.V1", "XA.C0", "XA.F1", "XA.F2", "XA.C1", "XA.R1", "XA.T1", "XA.V2", "XA.E1",
    ]


def test_port_arity() -> None:
    with pytest.raises(PortArityMismatch):
        PiezoPorts.from_nodes(["a", "0", "b", "0"])


def test_backing_reference_must_match_front(stated_params) -> None:
    with pytest.raises(PortArityMismatch):
        expand_piezo(stated_params, PiezoPorts("e", GROUND, "b", "x", "f", GROUND))


def test_free_plate_is_valid(stated_params) -> None:
    assert validate(free_plate(stated_params)) == []


def test_uncoupled_plate_is_a_bare_capacitor(stated_params) -> None:
    params = stated_params.model_copy(update={"h": 0.0})
    freqs = np.linspace(0.5, 1.5, 41) * params.parallel_resonance
    resp = port_impedance(free_plate(params), "VP", freqs)

    np.testing.assert_allclose(resp.values, 1.0 / (2j * np.pi * freqs * params.c0), rtol=1e-7)


def test_air_line_identities_hold_for_any_medium() -> None:
    rng = np.random.default_rng(11)
    for rho_a, v_a, alpha, area in rng.uniform([0.5, 200.0, 0.1, 1e-5], [2.0, 400.0, 3.0, 1e-3], size=(20, 4)):
        air = derive_air(rho_a=rho_a, v_a=v_a, alpha=alpha, d=2e-3, area=area)
        z = rho_a * v_a * area

        assert air.l_per_m * air.c_per_m * v_a**2 == pytest.approx(1.0, rel=1e-12)
        assert math.sqrt(air.l_per_m / air.c_per_m) == pytest.approx(z, rel=1e-12)
        assert air.r_per_m == pytest.approx(2.0 * alpha * z, rel=1e-12)


def test_air_line_scales_with_area() -> None:
    small = derive_air(rho_a=1.2, v_a=343.0, alpha=0.97, d=2e-3, area=154e-6)
    large = derive_air(rho_a=1.2, v_a=343.0, alpha=0.97, d=2e-3, area=3 * 154e-6)

    assert large.l_per_m == pytest.approx(3 * small.l_per_m, rel=1e-12)
    assert large.r_per_m == pytest.approx(3 * small.r_per_m, rel=1e-12)
    assert large.c_per_m == pytest.approx(small.c_per_m / 3, rel=1e-12)
    assert large.delay == pytest.approx(small.delay, rel=1e-12)


@pytest.mark.parametrize("preset", ["pzt-disc-stated", "pzt-disc-derived"])
def test_leach_impedance_matches_closed_form(registry, preset: str) -> None:
    params = registry.transducer(preset)
    f_p = params.parallel_resonance
    freqs = np.concatenate([np.linspace(0.7, 0.97, 40), np.linspace(1.03, 1.2, 30)]) * f_p
    resp = port_impedance(free_plate(params), "VP", freqs)

    expected = np.array([analytic_impedance(params, 2.0 * np.pi * f) for f in freqs])
    np.testing.assert_allclose(np.abs(resp.values), np.abs(expected), rtol=0.02)


def test_leach_parallel_resonance_is_half_wave(stated_params) -> None:
    f_p = stated_params.parallel_resonance
    freqs = np.linspace(0.7, 1.05, 2001) * f_p
    resp = port_impedance(free_plate(stated_params), "VP", freqs)

    estimate = find_resonances(resp)
    assert estimate.f_p == pytest.approx(f_p, rel=0.01)


def test_oracle_low_frequency_limit(stated_params) -> None:
    omega = 2.0 * np.pi * 10.0
    z = analytic_impedance(stated_params, omega, kt=0.5)

    assert abs(z) * omega * stated_params.c0 == pytest.approx(0.75, rel=1e-6)


def test_oracle_pole_at_half_wave(stated_params) -> None:
    omega = math.pi * stated_params.v / stated_params.T
    with pytest.raises(PoleProximity):
        analytic_impedance(stated_params, omega)


def test_oracle_series_resonance_ratio(stated_params) -> None:
    estimate = analytic_resonances(stated_params, kt=0.5)

    assert estimate.f_p == pytest.approx(240_625.0)
    assert estimate.f_s / estimate.f_p == pytest.approx(0.887, abs=1e-3)


def test_oracle_samples_locate_parallel_resonance(stated_params) -> None:
    f_p = stated_params.parallel_resonance
    freqs = np.linspace(0.7, 1.05, 2001) * f_p
    values = [analytic_impedance(stated_params, 2.0 * np.pi * f) for f in freqs]

    estimate = find_resonances(FrequencyResponse(freqs, values, "oracle"))
    assert estimate.f_p == pytest.approx(f_p, rel=1e-3)
    assert estimate.f_s is not None and estimate.f_s < f_p


def test_effective_coupling_series_resonance_sits_just_below_f_p(stated_params) -> None:
    estimate = analytic_resonances(stated_params)
    k2 = stated_params.effective_coupling**2

    gap = (estimate.f_p - estimate.f_s) / estimate.f_p
    assert gap == pytest.approx(4.0 * k2 / math.pi**2, rel=0.05)
