from __future__ import annotations

from pathlib import Path

import pytest

from echolab.main import EXIT_COMPUTATION, EXIT_INPUT, EXIT_OK, main

RC_NETLIST = """\
* RC step
.TRAN 10u 2m
V1 in 0 PULSE(0 1) AC 1
R1 in out 1k
C1 out 0 1u
"""


def csv_rows(path: Path) -> list[str]:
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_tran_writes_traces(tmp_path: Path) -> None:
    netlist = tmp_path / "rc.cir"
    netlist.write_text(RC_NETLIST)

    code = main(["tran", str(netlist), "--out-dir", str(tmp_path / "out"), "--format", "csv"])

    assert code == EXIT_OK
    rows = csv_rows(tmp_path / "out" / "rc.tran.csv")
    assert rows[0] == "t,in,out"
    assert len(rows) == 202
    header = (tmp_path / "out" / "rc.tran.csv").read_text().splitlines()
    assert "# command: echolab tran " + str(netlist) in header
    assert not (tmp_path / "out" / "rc.tran.svg").exists()


def test_tran_ac_sweep_per_probe(tmp_path: Path) -> None:
    netlist = tmp_path / "rc.cir"
    netlist.write_text(RC_NETLIST.replace(".TRAN 10u 2m", ".AC 10 10k 31 log"))

    code = main(["tran", str(netlist), "--probe", "out", "--out-dir", str(tmp_path), "--format", "both"])

    assert code == EXIT_OK
    assert csv_rows(tmp_path / "rc.ac.out.csv")[0] == "f_hz,mag,phase_rad"
    assert (tmp_path / "rc.ac.out.svg").read_text().startswith("<?xml")


@pytest.mark.parametrize(
    "text",
    ["R1 a 0 1k\nQ1 a b c\n.TRAN 1u 1m\n", "R1 a 0 1k\nV1 a 0 DC 1\n", "R1 a 0 1x\n.TRAN 1u 1m\n"],
)
def test_tran_input_errors(tmp_path: Path, text: str, capsys) -> None:
    netlist = tmp_path / "bad.cir"
    netlist.write_text(text)

    assert main(["tran", str(netlist), "--out-dir", str(tmp_path)]) == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_missing_netlist(tmp_path: Path) -> None:
    assert main(["tran", str(tmp_path / "nowhere.cir")]) == EXIT_INPUT


def test_presets_lists_consistency(capsys) -> None:
    assert main(["presets"]) == EXIT_OK

    out = capsys.readouterr().out
    assert "pzt-disc-stated" in out
    assert "MISMATCH" in out


def test_sweep_writes_shift_table(tmp_path: Path) -> None:
    code = main(
        ["sweep", "--methods", "ac", "--loads", "0,1n", "--segments", "8", "--out-dir", str(tmp_path)]
    )

    assert code == EXIT_OK
    text = (tmp_path / "shift_table.csv").read_text()
    assert "# shift = f_p(C_L) - f_p(0)" in text
    rows = csv_rows(tmp_path / "shift_table.csv")
    assert rows[0] == "C_L_F,f_p_ac,shift_ac,f_s_ac,status_ac"
    assert float(rows[2].split(",")[2]) < 0.0
    assert (tmp_path / "shift_table.svg").exists()


def test_sweep_with_only_failed_cells(tmp_path: Path, mocker) -> None:
    from echolab.errors import NoPeak

    mocker.patch("echolab.experiments.sweep.estimate_cell", side_effect=NoPeak("nothing"))

    code = main(["sweep", "--methods", "chirp", "--loads", "0", "--out-dir", str(tmp_path)])
    assert code == EXIT_COMPUTATION
    assert "failed" in csv_rows(tmp_path / "shift_table.csv")[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--cl", "abc"],
        ["sweep", "--loads", "1n,2n", "--methods", "ac"],
        ["sweep", "--methods", "sonar"],
        ["measure", "ac", "--span", "1.1,0.9"],
        ["measure", "ac", "--preset", "missing"],
    ],
)
def test_bad_channel_arguments(tmp_path: Path, argv: list[str]) -> None:
    assert main([*argv, "--out-dir", str(tmp_path)]) == EXIT_INPUT


def test_measure_ac_prints_estimate(tmp_path: Path, capsys) -> None:
    code = main(
        ["measure", "ac", "--cl", "2n", "--segments", "8", "--format", "csv", "--out-dir", str(tmp_path)]
    )

    assert code == EXIT_OK
    assert capsys.readouterr().out.startswith("ac f_p = ")
    assert csv_rows(tmp_path / "ac.impedance.csv")[0] == "f_hz,mag,phase_rad"


def test_airborne_profile_has_no_resonance_in_band(tmp_path: Path, capsys) -> None:
    code = main(["measure", "ac", "--profile", "airborne40k", "--segments", "8", "--out-dir", str(tmp_path)])

    assert code == EXIT_COMPUTATION
    assert "no interior maximum" in capsys.readouterr().err


@pytest.mark.parametrize(
    ("method", "artifact"),
    [("bode", "bode.csv"), ("chirp", "chirp.spectrum.csv"), ("ringdown", "ringdown.spectrum.csv")],
)
def test_measure_open_loop_prints_estimate(tmp_path: Path, capsys, method: str, artifact: str) -> None:
    code = main(["measure", method, "--cl", "1n", "--format", "csv", "--out-dir", str(tmp_path)])

    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith(f"{method} f_p = ")
    f_p = float(out.split("=")[1].split()[0])
    assert f_p == pytest.approx(240_625.0, rel=0.01)
    assert csv_rows(tmp_path / artifact)[0] == "f_hz,mag,phase_rad"


def test_measure_pll_writes_the_loop_log(tmp_path: Path, capsys) -> None:
    code = main(["measure", "pll", "--cl", "1n", "--out-dir", str(tmp_path)])

    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("pll f_p = ")
    assert len(csv_rows(tmp_path / "pll.csv")) > 1
    assert (tmp_path / "pll.svg").read_text().startswith("<?xml")


def test_sweep_over_the_default_grid(tmp_path: Path, capsys) -> None:
    code = main(["sweep", "--methods", "ac,ringdown,chirp,bode", "--format", "csv", "--out-dir", str(tmp_path)])

    assert code == EXIT_OK
    assert capsys.readouterr().out.startswith("32 cells succeeded, 0 failed")
    rows = csv_rows(tmp_path / "shift_table.csv")
    assert len(rows) == 9
    shifts = [float(row.split(",")[7]) for row in rows[1:]]
    assert shifts[0] == 0.0
    assert all(a > b for a, b in zip(shifts, shifts[1:]))
