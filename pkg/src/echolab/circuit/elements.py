"""Element and source waveform records.

Elements are immutable; node references are plain names and ``"0"`` is
ground. A lossy line is kept as a single record and expanded into its
R-L-C ladder when a circuit is flattened for analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np

GROUND = "0"


@dataclass(frozen=True, slots=True)
class Dc:
    value: float = 0.0

    def values(self, t: np.ndarray) -> np.ndarray:
        return np.full(np.shape(t), float(self.value))


@dataclass(frozen=True, slots=True)
class SineBurst:
    """``cycles`` periods of a zero-phase sine starting at ``start``, then zero."""

    amplitude: float
    frequency: float
    cycles: float
    start: float = 0.0

    @property
    def end(self) -> float:
        return self.start + self.cycles / self.frequency

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        local = t - self.start
        gate = (local >= 0.0) & (local < self.cycles / self.frequency)
        return np.where(gate, self.amplitude * np.sin(2.0 * np.pi * self.frequency * local), 0.0)


@dataclass(frozen=True, slots=True)
class Chirp:
    """Linear frequency sweep from ``f0`` to ``f1`` over ``duration``."""

    f0: float
    f1: float
    duration: float
    amplitude: float = 1.0
    start: float = 0.0

    def instantaneous_frequency(self, t: np.ndarray) -> np.ndarray:
        local = np.clip(np.asarray(t, dtype=float) - self.start, 0.0, self.duration)
        return self.f0 + (self.f1 - self.f0) * local / self.duration

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        local = t - self.start
        gate = (local >= 0.0) & (local < self.duration)
        rate = (self.f1 - self.f0) / self.duration
        phase = 2.0 * np.pi * (self.f0 * local + 0.5 * rate * local**2)
        return np.where(gate, self.amplitude * np.sin(phase), 0.0)


@dataclass(frozen=True, slots=True)
class Pulse:
    """Trapezoidal pulse with the usual v1/v2/delay/rise/fall/width/period fields."""

    v1: float
    v2: float
    delay: float = 0.0
    rise: float = 0.0
    fall: float = 0.0
    width: float = math.inf
    period: float = math.inf

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float) - self.delay
        if math.isfinite(self.period):
            t = np.where(t >= 0.0, np.mod(t, self.period), t)
        out = np.full(t.shape, float(self.v1))
        span = self.v2 - self.v1
        if self.rise > 0.0:
            rising = (t >= 0.0) & (t < self.rise)
            out = np.where(rising, self.v1 + span * t / self.rise, out)
        top_start = self.rise
        top_end = self.rise + self.width
        out = np.where((t >= top_start) & (t < top_end), self.v2, out)
        if self.fall > 0.0 and math.isfinite(top_end):
            falling = (t >= top_end) & (t < top_end + self.fall)
            out = np.where(falling, self.v2 - span * (t - top_end) / self.fall, out)
        return out


@dataclass(frozen=True, slots=True)
class External:
    """Source whose samples are supplied step by step by a transient session."""

    def values(self, t: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(t))


Waveform = Union[Dc, SineBurst, Chirp, Pulse, External]


@dataclass(frozen=True, slots=True)
class Resistor:
    kind: ClassVar[str] = "R"
    name: str
    p: str
    n: str
    resistance: float

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n)


@dataclass(frozen=True, slots=True)
class Capacitor:
    kind: ClassVar[str] = "C"
    name: str
    p: str
    n: str
    capacitance: float
    initial_voltage: float = 0.0

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n)


@dataclass(frozen=True, slots=True)
class Inductor:
    kind: ClassVar[str] = "L"
    name: str
    p: str
    n: str
    inductance: float
    initial_current: float = 0.0

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n)


@dataclass(frozen=True, slots=True)
class VSource:
    """Independent voltage source; a ``Dc(0)`` source is an ammeter."""

    kind: ClassVar[str] = "V"
    name: str
    p: str
    n: str
    waveform: Waveform = field(default_factory=Dc)
    ac: float = 0.0

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n)


@dataclass(frozen=True, slots=True)
class Vcvs:
    kind: ClassVar[str] = "E"
    name: str
    p: str
    n: str
    cp: str
    cn: str
    gain: float

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n, self.cp, self.cn)


@dataclass(frozen=True, slots=True)
class Cccs:
    """Current ``gain * I(sense)`` flowing from ``p`` through the source to ``n``."""

    kind: ClassVar[str] = "F"
    name: str
    p: str
    n: str
    sense: str
    gain: float

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p, self.n)


@dataclass(frozen=True, slots=True)
class LosslessLine:
    kind: ClassVar[str] = "T"
    name: str
    p1: str
    r1: str
    p2: str
    r2: str
    impedance: float
    delay: float

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p1, self.r1, self.p2, self.r2)


@dataclass(frozen=True, slots=True)
class LossyLine:
    """Per-unit-length R', L', C' line of ``length`` discretised in ``segments``."""

    kind: ClassVar[str] = "O"
    name: str
    p1: str
    p2: str
    ref: str
    r_per_m: float
    l_per_m: float
    c_per_m: float
    length: float
    segments: int

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.p1, self.p2, self.ref)

    def ladder(self) -> list["Element"]:
        """Series R then L, shunt C at the far end of every section."""

        n = self.segments
        r = self.r_per_m * self.length / n
        l = self.l_per_m * self.length / n
        c = self.c_per_m * self.length / n
        out: list[Element] = []
        left = self.p1
        for k in range(1, n + 1):
            mid = f"{self.name}.m{k}"
            right = self.p2 if k == n else f"{self.name}.n{k}"
            out.append(Resistor(f"{self.name}.R{k}", left, mid, r))
            out.append(Inductor(f"{self.name}.L{k}", mid, right, l))
            out.append(Capacitor(f"{self.name}.C{k}", right, self.ref, c))
            left = right
        return out


Element = Union[Resistor, Capacitor, Inductor, VSource, Vcvs, Cccs, LosslessLine, LossyLine]

ELEMENT_KINDS: dict[str, type] = {
    cls.kind: cls
    for cls in (Resistor, Capacitor, Inductor, VSource, Vcvs, Cccs, LosslessLine, LossyLine)
}
