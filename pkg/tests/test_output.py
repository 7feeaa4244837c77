from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from echolab.models import CellStatus, Method, RunManifest, ShiftCell, ShiftRow, ShiftTable
from echolab.output import (
    SHIFT_SIGN_NOTE,
    ArtifactWriter,
    header_lines,
    input_digest,
    manifest_digest,
    response_csv,
    response_figure,
    shift_figure,
    shift_table_csv,
    svg_document,
    traces_csv,
)
from echolab.signals import FrequencyResponse, Trace


def manifest(**kwargs) -> RunManifest:
    return RunManifest(command="echolab sweep", presets=["pzt-disc-stated"], **kwargs)


def shift_table() -> ShiftTable:
    return ShiftTable(
        methods=[Method.AC, Method.CHIRP],
        rows=[
            ShiftRow(
                c_load=0.0,
                cells={
                    Method.AC: ShiftCell(method=Method.AC, f_p=240e3, f_s=239.8e3, shift=0.0),
                    Method.CHIRP: ShiftCell(method=Method.CHIRP, status=CellStatus.FAILED, error="NoPeak: x"),
                },
            ),
            ShiftRow(
                c_load=1e-9,
                cells={
                    Method.AC: ShiftCell(method=Method.AC, f_p=239_997.0, f_s=239.8e3, shift=-3.0),
                    Method.CHIRP: ShiftCell(method=Method.CHIRP, f_p=240e3),
                },
            ),
        ],
    )


def data_lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_manifest_hash_ignores_timestamp() -> None:
    early = manifest(created_at=datetime(2020, 1, 1, tzinfo=timezone.utc))
    late = manifest(created_at=datetime(2030, 1, 1, tzinfo=timezone.utc))

    assert manifest_digest(early) == manifest_digest(late)
    assert manifest_digest(early) != manifest_digest(manifest(overrides={"C_L": "1n"}))


def test_input_digest_separates_parts() -> None:
    assert input_digest("ab", "c") != input_digest("a", "bc")
    assert input_digest("ab", "c") == input_digest(b"ab", "c")


def test_header_lines() -> None:
    lines = header_lines(manifest(overrides={"seg": "8", "C_L": "1n"}), [SHIFT_SIGN_NOTE])

    assert lines[0].startswith("echolab ")
    assert "overrides: C_L=1n,seg=8" in lines
    assert lines[-1] == SHIFT_SIGN_NOTE


def test_traces_csv_columns() -> None:
    traces = {"in": Trace(np.ones(3), 10.0), "out": Trace(np.arange(3.0), 10.0)}

    lines = data_lines(traces_csv(traces, ["hello"]))
    assert lines[0] == "t,in,out"
    assert [float(v) for v in lines[2].split(",")] == pytest.approx([0.1, 1.0, 1.0])
    with pytest.raises(ValueError):
        traces_csv({"a": Trace(np.ones(3), 10.0), "b": Trace(np.ones(4), 10.0)})


def test_response_csv_columns() -> None:
    resp = FrequencyResponse(np.array([1.0, 2.0]), np.array([1j, 2.0]), "h")
    no_phase = FrequencyResponse(np.array([1.0, 2.0]), np.array([1.0, 2.0]), "s", has_phase=False)

    assert data_lines(response_csv(resp))[0] == "f_hz,mag,phase_rad"
    assert float(data_lines(response_csv(resp))[1].split(",")[2]) == pytest.approx(np.pi / 2)
    header, first, _ = data_lines(response_csv(no_phase))
    assert header == "f_hz,mag,phase_rad"
    assert first.endswith(",")


def test_shift_table_csv_marks_failed_cells() -> None:
    text = shift_table_csv(shift_table(), [SHIFT_SIGN_NOTE])

    assert text.startswith(f"# {SHIFT_SIGN_NOTE}\n")
    header, first, second = data_lines(text)
    assert header == "C_L_F,f_p_ac,f_p_chirp,shift_ac,shift_chirp,f_s_ac,f_s_chirp,status_ac,status_chirp"
    fields = first.split(",")
    assert fields[2] == ""
    assert fields[-2:] == ["succeeded", "failed"]
    assert float(second.split(",")[3]) == -3.0


def test_svg_is_deterministic_and_carries_header() -> None:
    resp = FrequencyResponse(np.linspace(1.0, 10.0, 20), np.linspace(1.0, 2.0, 20) + 0.5j, "h")

    first = svg_document(response_figure(resp), ["input_hash: abc", "a -- b"])
    second = svg_document(response_figure(resp), ["input_hash: abc", "a -- b"])
    assert first == second
    assert first.startswith("<?xml")
    assert "<!--\ninput_hash: abc\na - - b\n-->" in first
    assert "<svg" in first


def test_shift_figure_skips_failed_cells() -> None:
    fig = shift_figure(shift_table())
    lines = fig.axes[0].get_lines()

    assert [line.get_label() for line in lines] == ["ac"]
    assert list(lines[0].get_ydata()) == [0.0, -3.0]


def test_writer_filters_by_format(tmp_path: Path) -> None:
    writer = ArtifactWriter(tmp_path / "out", manifest(), "csv")
    writer.add("a.csv", lambda header: "\n".join(header) + "\n")
    writer.add("a.svg", lambda header: "<svg/>")

    written = writer.flush()
    assert [p.name for p in written] == ["a.csv"]
    content = (tmp_path / "out" / "a.csv").read_text()
    assert "outputs: a.csv" in content
    assert writer.manifest.outputs == ["a.csv"]
