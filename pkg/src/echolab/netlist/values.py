"""Numeric literals with engineering scale suffixes.

Suffix matching is case-insensitive and longest-first, so ``meg`` (1e6) is
never read as ``m`` (1e-3). Any trailing letters after the suffix are a free
unit annotation (``2nF``, ``50ohm``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from ..errors import MalformedValue, SourceSpan

SUFFIXES: dict[str, float] = {
    "meg": 1e6,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "g": 1e9,
}

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


@dataclass(frozen=True, slots=True)
class ValueLiteral:
    magnitude: float
    suffix: Optional[str] = None
    unit: str = ""

    @property
    def value(self) -> float:
        return self.magnitude * (SUFFIXES[self.suffix] if self.suffix else 1.0)


def parse_literal(text: str, span: Optional[SourceSpan] = None) -> ValueLiteral:
    match = _NUMBER.match(text)
    if match is None:
        raise MalformedValue(f"not a number: {text!r}", span=span)
    rest = text[match.end():]
    lowered = rest.lower()
    suffix = None
    for candidate in SUFFIXES:
        if lowered.startswith(candidate):
            suffix = candidate
            rest = rest[len(candidate):]
            break
    if rest and not rest.isalpha():
        raise MalformedValue(f"unexpected characters in {text!r}", span=span)
    literal = ValueLiteral(float(match.group()), suffix, rest)
    if not math.isfinite(literal.value):
        raise MalformedValue(f"value {text!r} is not finite", span=span)
    return literal


def parse_value(text: str, span: Optional[SourceSpan] = None) -> float:
    """Resolve ``text`` to a float, e.g. ``"2n"`` -> ``2e-9``."""

    return parse_literal(text, span).value


def format_value(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""

    return repr(float(value))
