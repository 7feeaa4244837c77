"""Static SVG line plots rendered with matplotlib's SVG backend."""

from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib
from matplotlib.figure import Figure

from ..dsp.pll import PllState
from ..models import ShiftTable
from ..signals import FrequencyResponse, Trace

HASH_SALT = "echolab"
FIGSIZE = (7.0, 4.2)


def _figure(title: str, xlabel: str, ylabel: str) -> tuple[Figure, object]:
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def traces_figure(traces: Mapping[str, Trace], title: str = "transient") -> Figure:
    fig, ax = _figure(title, "time (s)", "voltage (V)")
    for name, trace in traces.items():
        ax.plot(trace.times, trace.samples, linewidth=0.8, label=name)
    ax.legend(loc="upper right")
    return fig


def response_figure(resp: FrequencyResponse, title: str = "") -> Figure:
    fig, ax = _figure(title or resp.label, "frequency (Hz)", "|H|")
    ax.semilogy(resp.freqs, resp.magnitude, linewidth=1.0, label=resp.label or "magnitude")
    if resp.has_phase:
        phase_ax = ax.twinx()
        phase_ax.plot(resp.freqs, resp.phase, linewidth=0.8, linestyle="--", color="tab:orange")
        phase_ax.set_ylabel("phase (rad)")
    ax.legend(loc="upper left")
    return fig


def pll_figure(state: PllState, title: str = "PLL frequency") -> Figure:
    fig, ax = _figure(title, "iteration", "frequency (Hz)")
    ax.plot(range(len(state.log)), state.frequencies, marker="o", markersize=3)
    return fig


def shift_figure(table: ShiftTable, title: str = "parallel resonance shift") -> Figure:
    fig, ax = _figure(title, "C_L (F)", "shift (Hz)")
    for method in table.methods:
        points = [(c, s) for c, s in zip(table.loads, table.shifts(method)) if s is not None]
        if points:
            loads, shifts = zip(*points)
            ax.plot(loads, shifts, marker="o", markersize=3, label=method.value)
    ax.legend(loc="lower left")
    return fig


def svg_document(fig: Figure, header: Sequence[str] = ()) -> str:
    """Render ``fig`` to SVG with the header as a leading comment.

    Element ids come from a fixed salt and the date stamp is dropped, so equal
    figures give equal bytes.
    """

    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "path"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    text = buffer.getvalue()
    if not header:
        return text
    comment = "<!--\n" + "\n".join(line.replace("--", "- -") for line in header) + "\n-->\n"
    declaration, sep, body = text.partition("?>\n")
    if not sep:
        return comment + text
    return declaration + sep + comment + body
