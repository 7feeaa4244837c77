"""Artifact rendering: manifest headers, CSV tables and SVG plots."""

from .manifest import SHIFT_SIGN_NOTE, header_lines, input_digest, manifest_digest
from .plots import pll_figure, response_figure, shift_figure, svg_document, traces_figure
from .tables import pll_log_csv, response_csv, shift_table_csv, traces_csv
from .writer import ArtifactWriter

__all__ = [
    "SHIFT_SIGN_NOTE",
    "ArtifactWriter",
    "header_lines",
    "input_digest",
    "manifest_digest",
    "pll_figure",
    "pll_log_csv",
    "response_csv",
    "response_figure",
    "shift_figure",
    "shift_table_csv",
    "svg_document",
    "traces_csv",
    "traces_figure",
]
