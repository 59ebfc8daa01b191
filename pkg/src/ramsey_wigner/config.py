"""Run configuration: TOML files with unit-suffixed physical quantities.

Example::

    [system]
    trap = "lattice"
    wavelength = "866 nm"
    base_depth = "18 uK"
    peak_up = "27 uK"
    peak_down = "22 uK"

    [sequence]
    t_ramp = "15 us"
    t_hold = "auto"
    t_switch = "300 ns"

Every physical scalar is a string with an explicit unit; unknown keys are
rejected with their dotted key path.  Any key can be overridden from the
environment as ``RAMSEY_WIGNER__SECTION__KEY=value`` (value parsed as TOML,
falling back to a plain string).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import core, potentials
from .errors import ConfigurationError
from .units import UnitSystem, energy_from_text, parse_quantity

ENV_PREFIX = "RAMSEY_WIGNER__"


def _quantity(kind: str, allow_auto: bool = False):
    def check(value):
        if allow_auto and value == "auto":
            return value
        if not isinstance(value, str):
            raise ValueError(f"expected a string with a {kind} unit, e.g. '15 us'")
        if kind == "depth":
            energy_from_text(value, UnitSystem())
        else:
            parse_quantity(value, kind)
        return value

    return check


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SystemConfig(_Section):
    trap: Literal["lattice", "harmonic", "tweezer"] = "lattice"
    mass: str = "132.905451961 u"
    wavelength: str = "866 nm"
    base_depth: str = "18 uK"
    peak_up: str = "27 uK"
    peak_down: str = "22 uK"
    waist: str = "1 um"

    _mass = field_validator("mass")(_quantity("mass"))
    _length = field_validator("wavelength", "waist")(_quantity("length"))
    _depth = field_validator("base_depth", "peak_up", "peak_down")(_quantity("depth"))


class GridConfig(_Section):
    n_points: int = Field(1024, gt=0)
    sites: int = Field(4, gt=0)

    @field_validator("n_points")
    @classmethod
    def _power_of_two(cls, v):
        if v & (v - 1):
            raise ValueError("n_points must be a power of two")
        return v


class SequenceConfig(_Section):
    t_ramp: str = "15 us"
    t_hold: str = "auto"
    hold_method: Literal["spectral", "harmonic"] = "spectral"
    t_switch: str = "300 ns"
    dt: str = "auto"
    steps_per_period: int = Field(500, ge=200)
    displacement_first: bool = False

    _t = field_validator("t_ramp", "t_switch")(_quantity("time"))
    _auto = field_validator("t_hold", "dt")(_quantity("time", allow_auto=True))


class ScanConfig(_Section):
    states: list[int] = [0, 1, 5]
    x_max: float = Field(3.0, gt=0)
    p_max: float = Field(3.0, gt=0)
    resolution: int = Field(21, ge=2)
    n_max: int = Field(9, ge=0)
    batch_size: int = Field(32, gt=0)

    @field_validator("states")
    @classmethod
    def _non_negative(cls, v):
        if any(n < 0 for n in v):
            raise ValueError("Fock indices must be non-negative")
        return v


class CalibrationConfig(_Section):
    ground_fraction: float = Field(0.5, gt=0, le=1)
    n_max: int = Field(12, ge=0)
    hold_min: str = "0 us"
    hold_max: str = "160 us"
    hold_points: int = Field(27, ge=3)
    n_phases: int = Field(16, ge=8)

    _t = field_validator("hold_min", "hold_max")(_quantity("time"))


class OracleConfig(_Section):
    method: Literal["integral-transform", "parity-sum"] = "integral-transform"
    n_max: int = Field(12, ge=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    system: SystemConfig = SystemConfig()
    grid: GridConfig = GridConfig()
    sequence: SequenceConfig = SequenceConfig()
    scan: ScanConfig = ScanConfig()
    calibration: CalibrationConfig = CalibrationConfig()
    oracle: OracleConfig = OracleConfig()
    jobs: int = Field(1, gt=0)
    seed: int = 0  # reserved: the pipeline is deterministic

    @model_validator(mode="after")
    def _consistent(self):
        u = UnitSystem()
        if energy_from_text(self.system.peak_up, u) < energy_from_text(self.system.base_depth, u) or \
                energy_from_text(self.system.peak_down, u) < energy_from_text(self.system.base_depth, u):
            raise ValueError("system: peak depths must not be below base_depth")
        if parse_quantity(self.calibration.hold_max, "time") <= parse_quantity(self.calibration.hold_min, "time"):
            raise ValueError("calibration: hold_max must exceed hold_min")
        return self


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def _parse_env_value(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_env(data: dict, environ=None) -> dict:
    """Overlay ``RAMSEY_WIGNER__SECTION__KEY`` environment variables onto ``data``."""
    environ = os.environ if environ is None else environ
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    for name, text in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in name[len(ENV_PREFIX):].split("__") if p]
        if not path:
            continue
        node = data
        for key in path[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"{'.'.join(path)}: cannot override inside a scalar")
        node[path[-1]] = _parse_env_value(text)
    return data


def load_config(path: str | Path | None = None, environ=None, overrides: dict | None = None) -> RunConfig:
    """Read, overlay environment overrides and validate a run configuration."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    data = apply_env(data, environ)
    for key, value in (overrides or {}).items():
        data[key] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from exc


@dataclass(frozen=True)
class Setup:
    """Internal-unit objects derived from a :class:`RunConfig`."""

    units: UnitSystem
    model: object
    grid: core.Grid
    peak_depths: tuple[float, float]
    t_ramp: float
    t_switch: float
    dt: float | None
    hold_method: str
    t_hold: float | None
    displacement_first: bool


def build_setup(cfg: RunConfig) -> Setup:
    s = cfg.system
    units = UnitSystem(mass=parse_quantity(s.mass, "mass"), wavelength=parse_quantity(s.wavelength, "length"))
    base = energy_from_text(s.base_depth, units)
    if s.trap == "lattice":
        model = potentials.Lattice(base)
    elif s.trap == "harmonic":
        model = potentials.Harmonic.like_lattice(base)
    else:
        model = potentials.Tweezer(base, units.length(parse_quantity(s.waist, "length")))
    grid = core.Grid.for_lattice(cfg.grid.n_points, cfg.grid.sites)
    seq = cfg.sequence
    if seq.dt == "auto":
        dt = 2 * np.pi / model.omega / seq.steps_per_period
    else:
        dt = units.time(parse_quantity(seq.dt, "time"))
    t_hold = None if seq.t_hold == "auto" else units.time(parse_quantity(seq.t_hold, "time"))
    return Setup(
        units=units,
        model=model,
        grid=grid,
        peak_depths=(energy_from_text(s.peak_up, units), energy_from_text(s.peak_down, units)),
        t_ramp=units.time(parse_quantity(seq.t_ramp, "time")),
        t_switch=units.time(parse_quantity(seq.t_switch, "time")),
        dt=dt,
        hold_method=seq.hold_method,
        t_hold=t_hold,
        displacement_first=seq.displacement_first,
    )


__all__ = ["RunConfig", "load_config", "apply_env", "build_setup", "Setup", "ENV_PREFIX"]
