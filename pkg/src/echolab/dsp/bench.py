"""Measurement benches: something to drive with a waveform and record from."""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Optional, Protocol

import numpy as np
from scipy import signal

from ..circuit.circuit import Circuit
from ..circuit.elements import GROUND, Capacitor, External, VSource, Waveform
from ..config import settings
from ..signals import Trace
from ..transient import TransientConfig, TransientSession, default_step, run_transient, step_times

LOAD_NAME = "CLOAD"
ECHO_WINDOW = "blackmanharris"


@dataclass(frozen=True, slots=True, eq=False)
class BenchRecord:
    drive: Trace
    response: Trace


@dataclass(frozen=True, slots=True)
class ListenWindow:
    """Echo gate of a pulse-echo bench.

    The response is analysed from ``delay`` after the excitation ends, once the
    interrogator has rung down, for ``duration`` seconds.
    """

    delay: float
    duration: float
    taper: str = ECHO_WINDOW

    def gate(self, excitation_end: float) -> tuple[float, float]:
        start = excitation_end + self.delay
        return start, start + self.duration


class BenchSession:
    """Sample-by-sample drive of a bench whose source is an external input."""

    def __init__(self, session: TransientSession, source: str, probe: str) -> None:
        self._session = session
        self._source = source
        self._probe = probe

    @property
    def dt(self) -> float:
        return self._session.dt

    def feed(self, samples: np.ndarray) -> np.ndarray:
        return self._session.feed({self._source: np.asarray(samples, dtype=float)})[self._probe]

    def close(self) -> None:
        self._session.close()


class ImpulseResponse:
    """Probe samples after a unit source sample, grown on demand.

    The bench is linear and starts at rest, so the record for drive samples
    ``u[1..N]`` is ``y[n] = sum_k g[n - k + 1] u[k]`` with ``g`` the samples
    kept here.
    """

    def __init__(self, session: BenchSession) -> None:
        self._session = session
        self._samples = np.zeros(1)
        self._lock = threading.Lock()

    @property
    def dt(self) -> float:
        return self._session.dt

    @property
    def steps(self) -> int:
        return len(self._samples) - 1

    def extend(self, steps: int) -> np.ndarray:
        with self._lock:
            missing = steps - self.steps
            if missing > 0:
                kick = np.zeros(missing)
                if self.steps == 0:
                    kick[0] = 1.0
                self._samples = np.concatenate((self._samples, self._session.feed(kick)))
            return self._samples[: steps + 1]

    def respond(self, drive: np.ndarray) -> np.ndarray:
        """Response samples ``0..N`` to source samples ``0..N``; sample 0 is the rest state."""

        steps = len(drive) - 1
        out = np.zeros(steps + 1)
        if steps > 0:
            g = self.extend(steps)
            out[1:] = signal.fftconvolve(drive[1:], g[1:])[:steps]
        return out


class Bench(Protocol):
    label: str

    @property
    def nominal_frequency(self) -> float: ...

    @property
    def c_load(self) -> float: ...

    @property
    def listen(self) -> Optional[ListenWindow]: ...

    def with_load(self, c_load: float) -> "Bench": ...

    def run(self, drive: Waveform, duration: float, dt: Optional[float] = None) -> BenchRecord: ...

    def open(self, dt: Optional[float] = None) -> BenchSession: ...

    def default_dt(self) -> float: ...


def drive_trace(drive: Waveform, dt: float, steps: int, label: str) -> Trace:
    """The source samples exactly as the transient engine applies them."""

    samples = np.concatenate(([0.0], drive.values(step_times(dt, steps))))
    return Trace(samples, 1.0 / dt, 0.0, label)


@dataclass(frozen=True)
class CircuitBench:
    """Any circuit with a named drive source, a probe node and a load node.

    The load is a capacitor from ``load_node`` to ground added when
    ``c_load > 0``.
    """

    circuit: Circuit
    source: str
    probe: str
    nominal: float
    load_node: Optional[str] = None
    load: float = 0.0
    label: str = "circuit"

    @property
    def nominal_frequency(self) -> float:
        return self.nominal

    @property
    def c_load(self) -> float:
        return self.load

    @property
    def listen(self) -> Optional[ListenWindow]:
        return None

    def with_load(self, c_load: float) -> "CircuitBench":
        if self.load_node is None and c_load:
            raise ValueError(f"bench {self.label!r} has no load node")
        return replace(self, load=c_load)

    def default_dt(self) -> float:
        return default_step(self.nominal, settings.samples_per_cycle)

    def driven_by(self, waveform: Waveform) -> Circuit:
        elements = [
            replace(e, waveform=waveform) if isinstance(e, VSource) and e.name == self.source else e
            for e in self.circuit.elements
        ]
        if self.load > 0 and self.load_node is not None:
            elements.append(Capacitor(LOAD_NAME, self.load_node, GROUND, self.load))
        return Circuit.of(elements, self.circuit.title)

    def run(self, drive: Waveform, duration: float, dt: Optional[float] = None) -> BenchRecord:
        dt = dt or self.default_dt()
        cfg = TransientConfig(dt=dt, duration=duration, probes=(self.probe,))
        traces = run_transient(self.driven_by(drive), cfg)
        return BenchRecord(drive_trace(drive, dt, cfg.steps, self.source), traces[self.probe])

    def open(self, dt: Optional[float] = None) -> BenchSession:
        session = TransientSession(self.driven_by(External()), dt or self.default_dt(), (self.probe,))
        return BenchSession(session, self.source, self.probe)
