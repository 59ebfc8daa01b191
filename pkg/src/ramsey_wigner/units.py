"""Physical units and the internal (hbar = m = 1, length = 1/k) unit system.

Internally every length is measured in units of ``1/k`` with ``k = 2 pi / lambda``,
the mass of the atom and hbar are one.  The recoil energy is then
exactly 1/2 and the time unit is ``m / (hbar k^2)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy import constants

HBAR = constants.hbar
KB = constants.k
AMU = constants.atomic_mass

CS133_MASS = 132.905451961 * AMU


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between SI quantities and internal simulation units.

    Parameters
    ----------
    mass : float
        Atomic mass in kg.
    wavelength : float
        Lattice wavelength in m.
    """

    mass: float = CS133_MASS
    wavelength: float = 866e-9

    def __post_init__(self):
        if not (self.mass > 0 and self.wavelength > 0):
            raise ValueError("mass and wavelength must be strictly positive")

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def recoil_energy(self) -> float:
        """E_rec = (hbar k)^2 / (2 m) in joule."""
        return (HBAR * self.wavenumber) ** 2 / (2 * self.mass)

    @property
    def length_unit(self) -> float:
        return 1.0 / self.wavenumber

    @property
    def time_unit(self) -> float:
        return self.mass / (HBAR * self.wavenumber**2)

    @property
    def energy_unit(self) -> float:
        # hbar / time_unit == 2 E_rec
        return HBAR / self.time_unit

    @property
    def momentum_unit(self) -> float:
        return HBAR * self.wavenumber

    # SI -> internal
    def length(self, meters):
        return meters / self.length_unit

    def time(self, seconds):
        return seconds / self.time_unit

    def energy(self, joules):
        return joules / self.energy_unit

    def temperature(self, kelvin):
        """Energy k_B T given as a temperature, in internal units."""
        return self.energy(KB * kelvin)

    def momentum(self, si):
        return si / self.momentum_unit

    # internal -> SI
    def to_length(self, value):
        return value * self.length_unit

    def to_time(self, value):
        return value * self.time_unit

    def to_energy(self, value):
        return value * self.energy_unit

    def to_temperature(self, value):
        return self.to_energy(value) / KB

    def to_momentum(self, value):
        return value * self.momentum_unit

    def in_recoil(self, value):
        """Internal energy expressed in recoil energies."""
        return value * self.energy_unit / self.recoil_energy


@dataclass(frozen=True)
class GroundStateScales:
    """Ground-state rms widths of a harmonic trap (internal units, m = hbar = 1)."""

    omega: float

    @property
    def dx0(self) -> float:
        return np.sqrt(1.0 / (2.0 * self.omega))

    @property
    def dp0(self) -> float:
        return 1.0 / (2.0 * self.dx0)


_SCALE = {
    "": 1.0,
    "k": 1e3,
    "M": 1e6,
    "m": 1e-3,
    "u": 1e-6,
    "µ": 1e-6,
    "n": 1e-9,
    "p": 1e-12,
}
_BASE = {"K": "temperature", "m": "length", "s": "time", "J": "energy", "kg": "mass", "Hz": "frequency"}
_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(text, kind: str) -> float:
    """Parse a unit-suffixed scalar such as ``"18 uK"`` or ``"866 nm"`` into SI.

    ``kind`` names the expected dimension (``"temperature"``, ``"length"``,
    ``"time"``, ``"energy"``, ``"mass"``, ``"frequency"``).  Energies may also
    be given in ``Erec`` (requires conversion later, see :func:`energy_from_text`).
    A bare number is rejected so that every physical input carries its unit.
    """
    if isinstance(text, (int, float)):
        raise ValueError(f"missing unit for {kind} value {text!r}")
    match = _QUANTITY.match(str(text))
    if not match:
        raise ValueError(f"cannot parse quantity {text!r}")
    value, unit = float(match.group(1)), match.group(2)
    if kind == "mass" and unit in ("u", "amu"):
        return value * AMU
    for base, dim in _BASE.items():
        if unit.endswith(base) and unit[: -len(base)] in _SCALE:
            if dim != kind:
                continue
            return value * _SCALE[unit[: -len(base)]]
    raise ValueError(f"unit {unit!r} is not a {kind}")


def energy_from_text(text, units: UnitSystem) -> float:
    """Depth-like energy from ``"18 uK"``, ``"190 Erec"`` or ``"1e-29 J"``; internal units."""
    match = _QUANTITY.match(str(text))
    if match and match.group(2) == "Erec":
        return float(match.group(1)) * units.energy(units.recoil_energy)
    try:
        return units.temperature(parse_quantity(text, "temperature"))
    except ValueError:
        return units.energy(parse_quantity(text, "energy"))
