"""Fixed-step trapezoidal transient engine.

Reactive elements use their trapezoidal companion models, so the MNA matrix
only depends on the step and is factored once per session. Lossless lines use
the method of characteristics: each port is a conductance 1/Z in parallel
with a history current built from the far port one delay earlier, read from
a ring buffer with linear interpolation.

With the matrix fixed, one step is a linear map of the companion state, the
delayed line waves and the source samples. The session precomputes that map
and, for bulk feeds, its composition over blocks no longer than the shortest
line delay: every wave a block needs was launched before the block started,
so a block is a single matrix product.

The state at t = 0 is zero (element initial conditions only seed the
companion histories) and sample ``n`` of every trace is the solution at
``n * dt``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import lu_solve

from .circuit.circuit import Circuit, validate
from .circuit.elements import GROUND, Capacitor, External, Inductor, LosslessLine, VSource
from .circuit.mna import MnaLayout, Stamper, factorize, port_branch, stamp_static
from .errors import InvalidCircuit, SessionClosed, StepTooCoarse, UnresolvedNode
from .signals import Trace

logger = structlog.get_logger(__name__)

STEPS_PER_MIN_DELAY = 50
MAX_BLOCK = 64
_SNAP = 1e-9


class TransientConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0)
    duration: float = Field(gt=0)
    probes: tuple[str, ...] = ()

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))


def default_step(frequency: float, samples_per_cycle: int = 256) -> float:
    return 1.0 / (samples_per_cycle * frequency)


def step_times(dt: float, steps: int, first: int = 1) -> np.ndarray:
    """Times of the solved samples ``first..first + steps - 1``; sample 0 is the zero state."""

    return np.arange(first, first + steps) * dt


def _index(layout: MnaLayout, node: str) -> int:
    """Position in the solution vector extended by one trailing ground slot."""

    idx = layout.node(node)
    return layout.size if idx is None else idx


def _difference(layout: MnaLayout, pairs: list[tuple[str, str]]) -> np.ndarray:
    """Rows picking ``v_p - v_n`` out of the solution vector."""

    out = np.zeros((len(pairs), layout.size + 1))
    for k, (p, n) in enumerate(pairs):
        out[k, _index(layout, p)] += 1.0
        out[k, _index(layout, n)] -= 1.0
    return out[:, : layout.size]


@dataclass(frozen=True, slots=True, eq=False)
class _StepMap:
    """``s' = A s + B w`` and ``o = C s + D w`` for ``w = (line waves, sources)``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


@dataclass(frozen=True, slots=True, eq=False)
class _BlockMap:
    """The step map composed over ``size`` steps with block-stacked inputs and outputs."""

    size: int
    phi: np.ndarray
    gamma: np.ndarray
    psi: np.ndarray
    omega: np.ndarray


def _compose(step: _StepMap, size: int) -> _BlockMap:
    ns = step.a.shape[0]
    no, nw = step.d.shape
    phi = np.empty((size * no, ns))
    observed = step.c
    driven = [step.b]
    for k in range(size):
        phi[k * no : (k + 1) * no] = observed
        observed = observed @ step.a
        if k < size - 1:
            driven.append(step.a @ driven[-1])
    markov = [step.c @ m for m in driven]
    power = np.linalg.matrix_power(step.a, size) if ns else step.a
    gamma = np.zeros((size * no, size * nw))
    for k in range(size):
        rows = slice(k * no, (k + 1) * no)
        gamma[rows, k * nw : (k + 1) * nw] = step.d
        for j in range(k):
            gamma[rows, j * nw : (j + 1) * nw] = markov[k - 1 - j]
    omega = np.hstack([driven[size - 1 - j] for j in range(size)]) if size else np.zeros((ns, 0))
    return _BlockMap(size, phi, gamma, power, omega)


@dataclass(frozen=True, slots=True)
class _LineTap:
    """Where one line reads its far-end waves in the ring buffer."""

    columns: slice
    whole: int
    frac: float


class TransientSession:
    """Stateful stepper over one circuit; one instance per simulation.

    Sources with an :class:`External` waveform must be given samples on
    every :meth:`step` or :meth:`feed`; other sources follow their waveform
    unless samples are supplied explicitly.
    """

    def __init__(self, circuit: Circuit, dt: float, probes: tuple[str, ...] | list[str] = ()) -> None:
        diagnostics = validate(circuit)
        if diagnostics:
            raise InvalidCircuit(diagnostics)
        if not dt > 0:
            raise StepTooCoarse(f"time step must be positive, got {dt!r}")
        min_delay = circuit.min_line_delay()
        if dt > min_delay / STEPS_PER_MIN_DELAY * (1.0 + 1e-12):
            raise StepTooCoarse(
                f"time step {dt:.4g} s exceeds 1/{STEPS_PER_MIN_DELAY} of the shortest line delay "
                f"{min_delay:.4g} s"
            )

        self.circuit = circuit
        self.dt = dt
        self.layout = layout = MnaLayout(circuit)
        self.probes = tuple(probes)
        probe_index = [self._resolve_probe(p) for p in self.probes]
        self._closed = False
        self.steps_taken = 0

        stamper = Stamper(layout, float)
        stamp_static(stamper)
        size = layout.size

        capacitors = [e for e in circuit.flat if isinstance(e, Capacitor)]
        inductors = [e for e in circuit.flat if isinstance(e, Inductor)]
        lines = [e for e in circuit.flat if isinstance(e, LosslessLine)]
        self._sources = [e for e in circuit.flat if isinstance(e, VSource)]
        self._external = {s.name for s in self._sources if isinstance(s.waveform, External)}
        nc, nl, nq = len(capacitors), len(inductors), 2 * len(lines)
        ns = 2 * nc + 2 * nl

        # state: capacitor voltages, capacitor currents, inductor voltages, inductor currents
        cap_g = np.array([2.0 * c.capacitance / dt for c in capacitors])
        ind_r = np.array([2.0 * l.inductance / dt for l in inductors])
        ind_row = [layout.branch_index[l.name] for l in inductors]
        for cap, g in zip(capacitors, cap_g):
            stamper.conductance(cap.p, cap.n, g)
        for row, r in zip(ind_row, ind_r):
            stamper.add(row, row, -r)

        cap_diff = _difference(layout, [(c.p, c.n) for c in capacitors])
        ind_diff = _difference(layout, [(l.p, l.n) for l in inductors])
        rhs_state = np.zeros((size, ns))
        rhs_state[:, :nc] = cap_diff.T * cap_g
        rhs_state[:, nc : 2 * nc] = cap_diff.T
        for k, row in enumerate(ind_row):
            rhs_state[row, 2 * nc + k] = -1.0
            rhs_state[row, 2 * nc + nl + k] = -ind_r[k]

        # each line port pushes a = v / Z + i; the far port reads i - v / Z = -a(t - delay)
        rhs_wave = np.zeros((size, nq))
        wave_out = np.zeros((nq, size))
        self._taps: list[_LineTap] = []
        for k, line in enumerate(lines):
            row1 = layout.branch_index[port_branch(line.name, 1)]
            row2 = layout.branch_index[port_branch(line.name, 2)]
            g = 1.0 / line.impedance
            stamper.add(row1, row1, 1.0)
            stamper.voltage_term(row1, line.p1, line.r1, -g)
            stamper.add(row2, row2, 1.0)
            stamper.voltage_term(row2, line.p2, line.r2, -g)
            rhs_wave[row1, 2 * k + 1] = -1.0
            rhs_wave[row2, 2 * k] = -1.0
            ports = _difference(layout, [(line.p1, line.r1), (line.p2, line.r2)])
            wave_out[2 * k] = g * ports[0]
            wave_out[2 * k, row1] += 1.0
            wave_out[2 * k + 1] = g * ports[1]
            wave_out[2 * k + 1, row2] += 1.0
            lag = line.delay / dt
            if abs(lag - round(lag)) < _SNAP:
                lag = float(round(lag))
            whole = int(math.floor(lag))
            self._taps.append(_LineTap(slice(2 * k, 2 * k + 2), whole, lag - whole))

        rhs_source = np.zeros((size, len(self._sources)))
        for k, source in enumerate(self._sources):
            rhs_source[layout.branch_index[source.name], k] = 1.0

        lu = factorize(stamper.matrix, layout)
        solve_state = lu_solve(lu, rhs_state)
        solve_input = lu_solve(lu, np.hstack([rhs_wave, rhs_source]))

        update = np.vstack([cap_diff, cap_diff * cap_g[:, None], ind_diff, np.zeros((nl, size))])
        for k, row in enumerate(ind_row):
            update[2 * nc + nl + k, row] = 1.0
        carry = np.zeros((ns, ns))
        carry[nc : 2 * nc, :nc] = -np.diag(cap_g)
        carry[nc : 2 * nc, nc : 2 * nc] = -np.eye(nc)
        probe_rows = np.zeros((len(self.probes), size + 1))
        for k, idx in enumerate(probe_index):
            probe_rows[k, idx] = 1.0
        output = np.vstack([wave_out, probe_rows[:, :size]])

        self._step = _StepMap(
            a=update @ solve_state + carry,
            b=update @ solve_input,
            c=output @ solve_state,
            d=output @ solve_input,
        )
        self._state = np.concatenate(
            [
                np.array([c.initial_voltage for c in capacitors], dtype=float),
                np.zeros(nc + nl),
                np.array([l.initial_current for l in inductors], dtype=float),
            ]
        )
        self._nq = nq
        shortest = min((tap.whole for tap in self._taps), default=MAX_BLOCK)
        self._block_size = max(1, min(MAX_BLOCK, shortest))
        self._blocks: Optional[_BlockMap] = None
        longest = max((tap.whole for tap in self._taps), default=0)
        self._ring = np.zeros((longest + 2 + self._block_size, nq))
        logger.debug(
            "transient session opened",
            unknowns=size,
            states=ns,
            dt=dt,
            lines=len(lines),
            block=self._block_size,
            external=sorted(self._external),
        )

    def _resolve_probe(self, probe: str) -> int:
        if probe.startswith("I(") and probe.endswith(")"):
            branch = probe[2:-1]
            if branch not in self.layout.branch_index:
                raise UnresolvedNode(f"probe {probe!r} names no branch current")
            return self.layout.branch_index[branch]
        if probe != GROUND and probe not in self.layout.node_index:
            raise UnresolvedNode(f"probe {probe!r} names no node")
        return _index(self.layout, probe)

    @property
    def external_sources(self) -> frozenset[str]:
        return frozenset(self._external)

    @property
    def sources(self) -> tuple[VSource, ...]:
        return tuple(self._sources)

    @property
    def closed(self) -> bool:
        return self._closed

    @property
    def time(self) -> float:
        return self.steps_taken * self.dt

    def close(self) -> None:
        self._closed = True

    def __enter__(self) -> "TransientSession":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def _inputs(self, supplied: Mapping[str, np.ndarray], count: int) -> np.ndarray:
        """Source samples for the next ``count`` steps, one column per source."""

        unknown = set(supplied) - {s.name for s in self._sources}
        if unknown:
            raise ValueError(f"no sources named {sorted(unknown)}")
        times = step_times(self.dt, count, self.steps_taken + 1)
        columns = []
        for source in self._sources:
            if source.name in supplied:
                values = np.asarray(supplied[source.name], dtype=float).reshape(-1)
                if len(values) != count:
                    raise ValueError(f"source {source.name!r} got {len(values)} samples for {count} steps")
                columns.append(values)
            elif source.name in self._external:
                raise ValueError(f"external source {source.name!r} needs a sample every step")
            else:
                columns.append(source.waveform.values(times))
        return np.column_stack(columns) if columns else np.zeros((count, 0))

    def _waves(self, first: int, count: int) -> np.ndarray:
        """Delayed far-end waves seen by steps ``first..first + count - 1``."""

        out = np.zeros((count, self._nq))
        size = len(self._ring)
        steps = np.arange(first, first + count)
        for tap in self._taps:
            launched = steps - tap.whole
            rows = np.where((launched >= 1)[:, None], self._ring[launched % size, tap.columns], 0.0)
            if tap.frac:
                earlier = launched - 1
                prior = np.where((earlier >= 1)[:, None], self._ring[earlier % size, tap.columns], 0.0)
                rows = (1.0 - tap.frac) * rows + tap.frac * prior
            out[:, tap.columns] = rows
        return out

    def _advance(self, inputs: np.ndarray, block: int) -> np.ndarray:
        """Solve ``len(inputs)`` steps in chunks of ``block``; returns the probe rows."""

        count = len(inputs)
        probes = np.empty((count, len(self.probes)))
        done = 0
        while done < count:
            first = self.steps_taken + 1
            if block > 1 and count - done >= block:
                if self._blocks is None:
                    self._blocks = _compose(self._step, block)
                blk = self._blocks
                w = np.hstack([self._waves(first, block), inputs[done : done + block]]).ravel()
                out = (blk.phi @ self._state + blk.gamma @ w).reshape(block, -1)
                self._state = blk.psi @ self._state + blk.omega @ w
                taken = block
            else:
                w = np.concatenate([self._waves(first, 1)[0], inputs[done]])
                out = (self._step.c @ self._state + self._step.d @ w)[None, :]
                self._state = self._step.a @ self._state + self._step.b @ w
                taken = 1
            if self._nq:
                self._ring[np.arange(first, first + taken) % len(self._ring)] = out[:, : self._nq]
            probes[done : done + taken] = out[:, self._nq :]
            self.steps_taken += taken
            done += taken
        return probes

    def step(self, sources: Optional[Mapping[str, float]] = None) -> dict[str, float]:
        """Advance one step and return the probe values at the new time."""

        if self._closed:
            raise SessionClosed("transient session is closed")
        supplied = {name: np.array([value], dtype=float) for name, value in (sources or {}).items()}
        row = self._advance(self._inputs(supplied, 1), 1)[0]
        return {probe: float(v) for probe, v in zip(self.probes, row)}

    def feed(self, samples: Mapping[str, np.ndarray], count: Optional[int] = None) -> dict[str, np.ndarray]:
        """Advance one step per supplied sample, block-wise, and return every probe column.

        ``count`` is only needed when no samples are supplied.
        """

        if self._closed:
            raise SessionClosed("transient session is closed")
        lengths = {len(np.atleast_1d(v)) for v in samples.values()}
        if len(lengths) > 1:
            raise ValueError("supplied sample arrays differ in length")
        count = lengths.pop() if lengths else count
        if count is None:
            raise ValueError("feed needs samples or an explicit count")
        columns = self._advance(self._inputs(samples, count), self._block_size)
        return {probe: columns[:, k] for k, probe in enumerate(self.probes)}


def open_session(circuit: Circuit, cfg: TransientConfig) -> TransientSession:
    return TransientSession(circuit, cfg.dt, cfg.probes)


def step_external(session: TransientSession, samples: Mapping[str, float]) -> dict[str, float]:
    """Feed one sample per external source and advance exactly one step."""

    return session.step(samples)


def run_transient(circuit: Circuit, cfg: TransientConfig) -> dict[str, Trace]:
    """Simulate ``cfg.duration`` seconds and sample every probe each step."""

    started = time.perf_counter()
    steps = cfg.steps
    with open_session(circuit, cfg) as session:
        if session.external_sources:
            raise ValueError(
                f"run_transient cannot drive external sources {sorted(session.external_sources)}; "
                "use a session"
            )
        columns = session.feed({}, steps)

    logger.info(
        "transient finished",
        steps=steps,
        unknowns=session.layout.size,
        seconds=round(time.perf_counter() - started, 3),
    )
    return {
        probe: Trace(np.concatenate(([0.0], columns[probe])), 1.0 / cfg.dt, 0.0, probe)
        for probe in cfg.probes
    }
