"""CSV renderings of traces, frequency responses, PLL logs and shift tables."""

from __future__ import annotations

import csv
import io
from typing import Mapping, Optional, Sequence

import numpy as np

from ..dsp.pll import PllState
from ..models import ShiftTable
from ..signals import FrequencyResponse, Trace

FLOAT_FORMAT = "%.12e"


def _preamble(header: Sequence[str], columns: Sequence[str]) -> io.StringIO:
    buffer = io.StringIO()
    for line in header:
        buffer.write(f"# {line}\n")
    buffer.write(",".join(columns) + "\n")
    return buffer


def _rows(buffer: io.StringIO, data: np.ndarray) -> str:
    if data.size:
        np.savetxt(buffer, data, delimiter=",", fmt=FLOAT_FORMAT)
    return buffer.getvalue()


def traces_csv(traces: Mapping[str, Trace], header: Sequence[str] = ()) -> str:
    """``t`` plus one column per probe; all traces share one time base."""

    if not traces:
        raise ValueError("no traces to write")
    first = next(iter(traces.values()))
    for name, trace in traces.items():
        if len(trace) != len(first) or trace.sample_rate != first.sample_rate or trace.t0 != first.t0:
            raise ValueError(f"trace {name!r} is not on the common time base")
    buffer = _preamble(header, ["t", *traces])
    data = np.column_stack([first.times, *(trace.samples for trace in traces.values())])
    return _rows(buffer, data)


def response_csv(resp: FrequencyResponse, header: Sequence[str] = ()) -> str:
    """``f_hz,mag,phase_rad``; the phase column is empty for magnitude-only responses."""

    buffer = _preamble(header, ["f_hz", "mag", "phase_rad"])
    if resp.has_phase:
        return _rows(buffer, np.column_stack([resp.freqs, resp.magnitude, resp.phase]))
    for f, mag in zip(resp.freqs, resp.magnitude):
        buffer.write(f"{FLOAT_FORMAT % f},{FLOAT_FORMAT % mag},\n")
    return buffer.getvalue()


def pll_log_csv(state: PllState, header: Sequence[str] = ()) -> str:
    buffer = _preamble(header, ["iteration", "c_load_F", "frequency_hz", "phase_rad", "phase_error_rad"])
    data = np.array(
        [[e.iteration, e.c_load, e.frequency, e.phase, e.phase_error] for e in state.log], dtype=float
    )
    return _rows(buffer, data.reshape(-1, 5))


def _cell(value: Optional[float]) -> str:
    return "" if value is None else FLOAT_FORMAT % value


def shift_table_csv(table: ShiftTable, header: Sequence[str] = ()) -> str:
    """Wide table: f_p, shift, f_s and status per method; failed cells are empty with status ``failed``."""

    names = [m.value for m in table.methods]
    columns = [
        "C_L_F",
        *(f"f_p_{n}" for n in names),
        *(f"shift_{n}" for n in names),
        *(f"f_s_{n}" for n in names),
        *(f"status_{n}" for n in names),
    ]
    buffer = io.StringIO()
    for line in header:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in table.rows:
        cells = [row.cells[m] for m in table.methods]
        writer.writerow(
            [
                FLOAT_FORMAT % row.c_load,
                *(_cell(c.f_p) for c in cells),
                *(_cell(c.shift) for c in cells),
                *(_cell(c.f_s) for c in cells),
                *(c.status.value for c in cells),
            ]
        )
    return buffer.getvalue()
