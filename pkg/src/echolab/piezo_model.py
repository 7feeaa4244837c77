"""Transducer and air-channel parameter sets.

Derived quantities follow the thickness-mode formulas

    A = pi (D/2)^2,  C0 = A eps33 / T,  tau_c = T / v,  N = A e33 / T,
    h = N / C0,      Z0 = rho v,        Zc = Z0 A

and the air line constants per metre

    R' = 2 rho_a v_a A alpha,  L' = A rho_a,  C' = 1 / (A rho_a v_a^2).

The stated preset keeps the published C0 and h, which disagree with the
formula values by about a factor of 100; :func:`consistency_report` surfaces
that gap instead of hiding it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

import structlog
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field

from .config import settings
from .errors import InvalidParams, MalformedValue, UnknownPreset

logger = structlog.get_logger(__name__)

PRESET_SUFFIX = ".preset"
BUILTIN_PRESET_DIR = Path(__file__).resolve().parent / "presets"
PRESET_ALIASES = {
    "pzt-disc": "pzt-disc-stated",
    "tableI": "pzt-disc-stated",
    "tableI-stated": "pzt-disc-stated",
    "tableI-derived": "pzt-disc-derived",
}

BASE_KEYS = ("rho", "v", "eps33", "e33", "kt", "D", "T")
STATED_KEYS = ("A", "C0", "tau_c", "N", "h", "Zc")
AIR_KEYS = ("rho_a", "v_a", "alpha", "d")


class TransducerParams(BaseModel):
    """Base material/geometry constants plus derived electro-acoustic quantities."""

    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    rho: float = Field(gt=0, description="density kg/m^3")
    v: float = Field(gt=0, description="wave velocity m/s")
    eps33: float = Field(gt=0, description="clamped permittivity F/m")
    e33: float = Field(gt=0, description="piezoelectric stress constant C/m^2")
    kt: float = Field(gt=0, lt=1, description="thickness coupling factor")
    D: float = Field(gt=0, description="diameter m")
    T: float = Field(gt=0, description="thickness m")

    area: float = Field(gt=0)
    c0: float = Field(gt=0)
    tau_c: float = Field(gt=0)
    n_turn: float = Field(gt=0)
    h: float = Field(ge=0)
    z0: float = Field(gt=0)
    zc: float = Field(gt=0)

    @property
    def parallel_resonance(self) -> float:
        """Half-wave frequency v / (2T) of the free plate."""

        return self.v / (2.0 * self.T)

    @property
    def effective_coupling(self) -> float:
        """Coupling implied by h, C0 and Zc: k^2 = h^2 C0 T / (Zc v)."""

        return self.h * math.sqrt(self.c0 * self.T / (self.zc * self.v))


class AirChannelParams(BaseModel):
    """Lossy acoustic line constants of the air gap."""

    model_config = ConfigDict(frozen=True)

    rho_a: float = Field(gt=0)
    v_a: float = Field(gt=0)
    alpha: float = Field(ge=0, description="attenuation Np/m")
    d: float = Field(gt=0, description="gap length m")
    area: float = Field(gt=0)
    r_per_m: float = Field(ge=0)
    l_per_m: float = Field(gt=0)
    c_per_m: float = Field(gt=0)
    segments: int = Field(default=32, ge=1)

    @property
    def impedance(self) -> float:
        return math.sqrt(self.l_per_m / self.c_per_m)

    @property
    def delay(self) -> float:
        return self.d * math.sqrt(self.l_per_m * self.c_per_m)


class LoadConfig(BaseModel):
    """Shunt capacitance across the sensor node's electrical port (0 = open)."""

    model_config = ConfigDict(frozen=True)

    c_load: float = Field(default=0.0, ge=0)


def derive_transducer(
    *,
    rho: float,
    v: float,
    eps33: float,
    e33: float,
    kt: float,
    D: float,
    T: float,
    name: str = "custom",
) -> TransducerParams:
    """Compute every derived field from the base constants."""

    area = math.pi * (D / 2.0) ** 2
    c0 = area * eps33 / T
    n_turn = area * e33 / T
    return TransducerParams(
        name=name,
        rho=rho,
        v=v,
        eps33=eps33,
        e33=e33,
        kt=kt,
        D=D,
        T=T,
        area=area,
        c0=c0,
        tau_c=T / v,
        n_turn=n_turn,
        h=n_turn / c0,
        z0=rho * v,
        zc=rho * v * area,
    )


def derive_air(
    *, rho_a: float, v_a: float, alpha: float, d: float, area: float, segments: int = 32
) -> AirChannelParams:
    return AirChannelParams(
        rho_a=rho_a,
        v_a=v_a,
        alpha=alpha,
        d=d,
        area=area,
        r_per_m=2.0 * rho_a * v_a * area * alpha,
        l_per_m=area * rho_a,
        c_per_m=1.0 / (area * rho_a * v_a**2),
        segments=segments,
    )


@dataclass(frozen=True, slots=True)
class ConsistencyRow:
    field: str
    formula_value: float
    stated_value: float
    relative_gap: float
    flagged: bool


PUBLISHED_VALUES: dict[str, float] = {
    "A": 154e-6,
    "C0": 58e-9,
    "tau_c": 2e-6,
    "N": 0.4483,
    "h": 7.86e6,
    "Zc": 4445.0,
}


def consistency_report(
    params: TransducerParams,
    stated: Mapping[str, float] = PUBLISHED_VALUES,
    *,
    threshold: float = 0.05,
) -> list[ConsistencyRow]:
    """Compare formula values from the base constants with a stated column."""

    formula = derive_transducer(
        rho=params.rho,
        v=params.v,
        eps33=params.eps33,
        e33=params.e33,
        kt=params.kt,
        D=params.D,
        T=params.T,
    )
    computed = {
        "A": formula.area,
        "C0": formula.c0,
        "tau_c": formula.tau_c,
        "N": formula.n_turn,
        "h": formula.h,
        "Zc": formula.zc,
    }
    rows = []
    for key in STATED_KEYS:
        if key not in stated:
            continue
        value, reference = computed[key], float(stated[key])
        gap = abs(value - reference) / abs(reference)
        rows.append(ConsistencyRow(key, value, reference, gap, gap > threshold))
    return rows


@dataclass(frozen=True, slots=True)
class AirBase:
    rho_a: float
    v_a: float
    alpha: float
    d: float


@dataclass(frozen=True, slots=True)
class Preset:
    name: str
    transducer: TransducerParams
    air: AirBase
    source: str

    def air_params(self, segments: Optional[int] = None) -> AirChannelParams:
        return derive_air(
            rho_a=self.air.rho_a,
            v_a=self.air.v_a,
            alpha=self.air.alpha,
            d=self.air.d,
            area=self.transducer.area,
            segments=segments or settings.ladder_segments,
        )


def _parse_number(key: str, raw: Optional[str], origin: str) -> float:
    from .netlist.values import parse_value

    if raw is None:
        raise MalformedValue(f"{origin}: key {key!r} has no value")
    try:
        return parse_value(raw.strip())
    except MalformedValue as exc:
        raise MalformedValue(f"{origin}: key {key!r}: {exc.message}") from exc


def preset_from_mapping(name: str, values: Mapping[str, Optional[str]], origin: str) -> Preset:
    missing = [key for key in BASE_KEYS + AIR_KEYS if key not in values]
    if missing:
        raise InvalidParams(f"{origin}: missing keys {', '.join(missing)}")
    base = {key: _parse_number(key, values[key], origin) for key in BASE_KEYS}
    try:
        params = derive_transducer(name=name, **base)
        overrides = {
            field: _parse_number(key, values[key], origin)
            for key, field in (("C0", "c0"), ("h", "h"))
            if key in values
        }
        if overrides:
            params = TransducerParams.model_validate({**params.model_dump(), **overrides})
    except ValueError as exc:
        if isinstance(exc, MalformedValue):
            raise
        raise InvalidParams(f"{origin}: {exc}") from exc
    air = AirBase(**{key: _parse_number(key, values[key], origin) for key in AIR_KEYS})
    return Preset(name, params, air, origin)


def preset_dirs() -> list[Path]:
    dirs = [BUILTIN_PRESET_DIR]
    if settings.preset_path:
        dirs.extend(Path(item) for item in settings.preset_path.split(os.pathsep) if item)
    return dirs


class PresetRegistry:
    """Presets discovered from ``*.preset`` files; later directories win."""

    def __init__(self, directories: Optional[Iterable[Path]] = None) -> None:
        self._files: dict[str, Path] = {}
        for directory in directories if directories is not None else preset_dirs():
            if not directory.is_dir():
                logger.warning("preset directory missing", path=str(directory))
                continue
            for path in sorted(directory.glob(f"*{PRESET_SUFFIX}")):
                self._files[path.name[: -len(PRESET_SUFFIX)]] = path
        self._cache: dict[str, Preset] = {}

    def names(self) -> list[str]:
        return sorted(self._files)

    def __contains__(self, name: str) -> bool:
        return PRESET_ALIASES.get(name, name) in self._files

    def get(self, name: str) -> Preset:
        key = PRESET_ALIASES.get(name, name)
        if key not in self._files:
            raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(self.names())}")
        if key not in self._cache:
            path = self._files[key]
            self._cache[key] = preset_from_mapping(key, dotenv_values(path), str(path))
        return self._cache[key]

    def transducer(self, name: str) -> TransducerParams:
        return self.get(name).transducer

    def transducers(self) -> dict[str, TransducerParams]:
        out = {name: self.transducer(name) for name in self.names()}
        for alias, target in PRESET_ALIASES.items():
            if target in out:
                out[alias] = out[target]
        return out
