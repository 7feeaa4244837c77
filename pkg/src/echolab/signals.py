"""Sampled signal and frequency-domain records shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True, slots=True, eq=False)
class Trace:
    """Uniformly sampled real time series."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        data = np.array(self.samples, dtype=float)
        if not np.all(np.isfinite(data)):
            raise ValueError(f"trace {self.label!r} contains non-finite samples")
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.sample_rate

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def window(self, start: float, stop: Optional[float] = None) -> "Trace":
        """Samples with ``start <= t < stop``, keeping the absolute time base."""

        first = max(0, int(np.ceil((start - self.t0) * self.sample_rate - 1e-9)))
        last = len(self.samples)
        if stop is not None:
            last = min(last, int(np.ceil((stop - self.t0) * self.sample_rate - 1e-9)))
        return Trace(
            self.samples[first:last],
            self.sample_rate,
            self.t0 + first / self.sample_rate,
            self.label,
        )

    def energy(self) -> float:
        return float(np.sum(self.samples**2) / self.sample_rate)

    def equals(self, other: "Trace") -> bool:
        return (
            self.sample_rate == other.sample_rate
            and self.t0 == other.t0
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, slots=True, eq=False)
class FrequencyResponse:
    """Ordered (frequency, complex value) pairs."""

    freqs: np.ndarray
    values: np.ndarray
    label: str = ""
    has_phase: bool = True

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if freqs.shape != values.shape:
            raise ValueError("freqs and values must have the same shape")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.freqs)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)


@dataclass(frozen=True, slots=True, eq=False)
class Spectrum:
    """One-sided magnitude spectrum of a Trace."""

    freqs: np.ndarray
    magnitude: np.ndarray
    phase: Optional[np.ndarray] = None
    window: str = "hann"
    source_length: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=float)
        if len(freqs) > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("spectrum grid must be strictly increasing")
        magnitude = np.asarray(self.magnitude, dtype=float)
        if np.any(magnitude < 0):
            raise ValueError("spectrum magnitude must be non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "magnitude", magnitude)

    def as_response(self, label: str = "") -> FrequencyResponse:
        values = self.magnitude if self.phase is None else self.magnitude * np.exp(1j * self.phase)
        return FrequencyResponse(self.freqs, values, label, has_phase=self.phase is not None)
