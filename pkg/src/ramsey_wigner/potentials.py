"""Trap models, their spectra and the time-dependent, spin-resolved schedules.

Every trap is an attractive well of depth ``depth`` centred at the origin.  In
internal units the lattice wavenumber is one, so the lattice potential is
``-U cos^2(x)`` with period pi and recoil energy 1/2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import ClassVar

import numpy as np

from . import core
from .errors import ConfigurationError, NumericalError

RECOIL = 0.5
UP, DOWN = 0, 1


@dataclass(frozen=True)
class Harmonic:
    """``-U + omega^2 x^2 / 2``; changing the depth keeps the curvature per unit depth."""

    depth: float
    omega: float
    half_width: float | None = np.pi

    def __post_init__(self):
        if not (self.depth > 0 and self.omega > 0):
            raise ConfigurationError("harmonic trap needs positive depth and frequency")

    @classmethod
    def like_lattice(cls, depth: float) -> "Harmonic":
        """Harmonic approximation of the lattice site of the same depth."""
        return cls(depth, np.sqrt(2 * depth))

    def __call__(self, x):
        return -self.depth + 0.5 * self.omega**2 * np.asarray(x) ** 2

    def with_depth(self, depth: float) -> "Harmonic":
        return replace(self, depth=depth, omega=self.omega * np.sqrt(depth / self.depth))

    def levels(self, count: int, grid=None) -> np.ndarray:
        return harmonic_spectrum(np.arange(count), self.omega, self.depth)


@dataclass(frozen=True)
class Lattice:
    """``-U cos^2(x)``: one standing-wave site of period pi, diagonalised per site."""

    depth: float
    half_width: float | None = np.pi / 2
    period: ClassVar[float] = np.pi

    def __post_init__(self):
        if not self.depth > 0:
            raise ConfigurationError("lattice depth must be positive")

    @property
    def omega(self) -> float:
        return np.sqrt(2 * self.depth)

    def __call__(self, x):
        return -0.5 * self.depth * (1.0 + np.cos(2 * np.asarray(x)))

    def with_depth(self, depth: float) -> "Lattice":
        return replace(self, depth=depth)

    def levels(self, count: int, grid: core.Grid) -> np.ndarray:
        return _levels(self, grid, count)


@dataclass(frozen=True)
class Tweezer:
    """Gaussian well ``-U exp(-2 x^2 / w^2)`` of waist ``waist``."""

    depth: float
    waist: float
    half_width: float | None = None

    def __post_init__(self):
        if not (self.depth > 0 and self.waist > 0):
            raise ConfigurationError("tweezer needs positive depth and waist")

    @property
    def omega(self) -> float:
        return 2 * np.sqrt(self.depth) / self.waist

    def __call__(self, x):
        return -self.depth * np.exp(-2 * np.asarray(x) ** 2 / self.waist**2)

    def with_depth(self, depth: float) -> "Tweezer":
        return replace(self, depth=depth)

    def levels(self, count: int, grid: core.Grid) -> np.ndarray:
        return _levels(self, grid, count)


PotentialModel = Harmonic | Lattice | Tweezer


def _levels(model, grid, count):
    energies, _, _ = core._diagonalize(model, grid, count, model.half_width)
    return energies


def stationary_states(model, grid: core.Grid, count: int):
    """Eigenpairs of ``model`` on its natural window (one lattice site, or the grid)."""
    return core.stationary_states(model, grid, count, model.half_width)


# analytic spectra ------------------------------------------------------------

def harmonic_spectrum(n, omega: float, depth: float):
    """E(n) = omega (n + 1/2) - U."""
    return omega * (np.asarray(n) + 0.5) - depth


def lattice_correction(n):
    """First-order anharmonic shift of lattice level ``n``; independent of depth."""
    n = np.asarray(n)
    return -(2 * n * (n + 1) + 1) / 4 * RECOIL


def tweezer_correction(n, waist: float):
    """First-order anharmonic shift of tweezer level ``n``; independent of depth."""
    n = np.asarray(n)
    return -3 * (2 * n * (n + 1) + 1) / (8 * waist**2)


def lattice_spectrum_perturbative(n, depth: float):
    if depth < 50 * RECOIL:
        warnings.warn("perturbative lattice spectrum used below 50 E_rec", stacklevel=2)
    return harmonic_spectrum(n, np.sqrt(2 * depth), depth) + lattice_correction(n)


def tweezer_spectrum_perturbative(n, depth: float, waist: float):
    omega = 2 * np.sqrt(depth) / waist
    return harmonic_spectrum(n, omega, depth) + tweezer_correction(n, waist)


def differential_shift(n, depth_up: float, depth_down: float, model, grid: core.Grid):
    """Differential energies E_up(n) - E_down(n).

    Returns ``(exact, harmonic)``: the first from the model's eigenenergies, the
    second the harmonic-oscillator value ``d_omega n + dE0`` with
    ``dE0 = -U_up + U_down + d_omega / 2`` and the trap frequencies of the
    harmonic approximation at each depth.
    """
    scalar = np.ndim(n) == 0
    n = np.atleast_1d(np.asarray(n))
    up, down = model.with_depth(depth_up), model.with_depth(depth_down)
    count = int(n.max()) + 1
    exact = up.levels(count, grid)[n] - down.levels(count, grid)[n]
    d_omega = up.omega - down.omega
    offset = -depth_up + depth_down + d_omega / 2
    harmonic = d_omega * n + offset
    if scalar:
        return float(exact[0]), float(harmonic[0])
    return exact, harmonic


# schedules -------------------------------------------------------------------

def raised_cosine(s):
    s = np.clip(s, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * s)


@dataclass(frozen=True)
class DepthSchedule:
    """Spin-resolved trap depths: raised-cosine ramp up, hold, mirrored ramp down.

    Both spins start and end at ``base_depth``; during the hold the spin-up
    trap sits at ``peak_up`` and the spin-down trap at ``peak_down``.
    """

    base_depth: float
    peak_up: float
    peak_down: float
    t_ramp: float
    t_hold: float
    t_start: float = 0.0
    shape: str = "raised-cosine"

    def __post_init__(self):
        if self.t_ramp < 0 or self.t_hold < 0:
            raise ConfigurationError("ramp and hold durations must be non-negative")
        if min(self.peak_up, self.peak_down) < self.base_depth or self.base_depth <= 0:
            raise ConfigurationError("peak depths must be at least the (positive) base depth")

    @property
    def t_end(self) -> float:
        return self.t_start + 2 * self.t_ramp + self.t_hold

    @property
    def balanced(self) -> bool:
        return self.peak_up == self.peak_down

    def profile(self, t):
        """Ramp fraction in [0, 1] at time(s) ``t``."""
        t = np.asarray(t, dtype=float) - self.t_start
        if self.t_ramp == 0:
            return np.where((t >= 0) & (t <= self.t_hold), 1.0, 0.0)
        up = raised_cosine(t / self.t_ramp)
        down = raised_cosine((self.t_end - self.t_start - t) / self.t_ramp)
        return np.minimum(up, down)

    def depths(self, t):
        """(U_up(t), U_down(t))."""
        r = self.profile(t)
        return (
            self.base_depth + (self.peak_up - self.base_depth) * r,
            self.base_depth + (self.peak_down - self.base_depth) * r,
        )

    def with_hold(self, t_hold: float) -> "DepthSchedule":
        return replace(self, t_hold=t_hold)


def make_parity_schedule(t_ramp, t_hold, base_depth, peak_depths, t_start=0.0) -> DepthSchedule:
    peak_up, peak_down = peak_depths
    return DepthSchedule(base_depth, peak_up, peak_down, t_ramp, t_hold, t_start)


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3 - 2 * s)


def _smoothstep_integral(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 - s**4 / 2


@dataclass(frozen=True)
class TrapTrajectory:
    """Trap centre: at rest until ``t_start``, then shifted by ``offset`` and moved at ``velocity``.

    Over ``t_switch`` the position offset follows a smoothstep while the
    velocity follows the same smoothstep, which keeps ``center`` C^1.
    Afterwards ``center(t) = offset + velocity (t - t_start - t_switch / 2)``.
    """

    offset: float = 0.0
    velocity: float = 0.0
    t_start: float = 0.0
    t_switch: float = 0.0

    def __post_init__(self):
        if self.t_switch < 0:
            raise ConfigurationError("switching duration must be non-negative")

    @property
    def t_end(self) -> float:
        return self.t_start + self.t_switch

    @property
    def is_static(self) -> bool:
        return not np.any(self.offset) and not np.any(self.velocity)

    def center(self, t):
        t = np.asarray(t, dtype=float)
        dt = t - self.t_start
        if self.t_switch == 0:
            return np.where(dt >= 0, self.offset + self.velocity * dt, 0.0)
        s = dt / self.t_switch
        ramp = self.offset * smoothstep(s) + self.velocity * self.t_switch * _smoothstep_integral(s)
        late = self.offset + self.velocity * (dt - self.t_switch / 2)
        return np.where(dt <= 0, 0.0, np.where(s >= 1, late, ramp))

    def speed(self, t):
        t = np.asarray(t, dtype=float)
        dt = t - self.t_start
        if self.t_switch == 0:
            return np.where(dt >= 0, self.velocity, 0.0)
        s = dt / self.t_switch
        ds = np.where((s > 0) & (s < 1), 6 * s * (1 - s), 0.0) / self.t_switch
        return np.where(dt <= 0, 0.0, self.offset * ds + self.velocity * smoothstep(s))


def make_displacement_trajectory(x, p, t_start, t_switch, mass=1.0) -> TrapTrajectory:
    """Trajectory realising the displacement (x, p); arrays give a batch of trajectories."""
    x, p = np.asarray(x, dtype=float), np.asarray(p, dtype=float)
    if x.ndim == 0 and p.ndim == 0:
        x, p = float(x), float(p)
    return TrapTrajectory(x, p / mass, float(t_start), float(t_switch))


# accumulated phases ----------------------------------------------------------

def _level_energy(model, depth, n, grid):
    return _cached_levels(model.with_depth(float(depth)), grid, n + 1)[n]


@lru_cache(maxsize=4096)
def _cached_levels(model, grid, count):
    return model.levels(count, grid)


def _ramp_integral(schedule: DepthSchedule, integrand, order: int) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * schedule.t_ramp * (nodes + 1) + schedule.t_start
    u_up, u_down = schedule.depths(t)
    values = np.array([integrand(a, b) for a, b in zip(u_up, u_down)])
    return 0.5 * schedule.t_ramp * float(np.dot(weights, values))


def schedule_phase(schedule: DepthSchedule, integrand, orders=(24, 40), tol=1e-9) -> float:
    """Integral of ``integrand(U_up, U_down)`` over the whole schedule.

    Ramp down mirrors ramp up, so each ramp contributes the same Gauss-Legendre
    integral; the hold contributes its constant value times ``t_hold``.
    """
    if schedule.t_ramp > 0:
        low, high = (_ramp_integral(schedule, integrand, q) for q in orders)
        if abs(low - high) > tol * max(1.0, abs(high)):
            raise NumericalError(f"ramp quadrature not converged ({low!r} vs {high!r})")
        ramps = 2 * high
    else:
        ramps = 0.0
    return ramps + schedule.t_hold * integrand(schedule.peak_up, schedule.peak_down)


def accumulated_phase(schedule: DepthSchedule, model, n: int, grid: core.Grid) -> float:
    """Adiabatic differential phase of level ``n``: integral of E_up(n) - E_down(n)."""
    if schedule.balanced:
        return 0.0
    return schedule_phase(
        schedule,
        lambda a, b: _level_energy(model, a, n, grid) - _level_energy(model, b, n, grid),
    )


def phi0_integral(schedule: DepthSchedule, model, grid: core.Grid) -> float:
    """Spin-dependent phase of the motional ground state, cancelled by the second pulse."""
    return accumulated_phase(schedule, model, 0, grid)


def differential_frequency_phase(schedule: DepthSchedule, model) -> float:
    """Integral of the harmonic differential trap frequency omega_up - omega_down."""
    return schedule_phase(
        schedule, lambda a, b: model.with_depth(a).omega - model.with_depth(b).omega
    )


def hold_for_phase(schedule: DepthSchedule, model, grid=None, target=np.pi, method="harmonic"):
    """Hold duration giving ``target`` differential phase between neighbouring levels.

    ``method="harmonic"`` integrates omega_up - omega_down; ``"spectral"`` uses
    the exact gap difference between levels 1 and 0.
    """
    template = schedule.with_hold(0.0)
    if method == "harmonic":
        ramps = differential_frequency_phase(template, model)
        rate = model.with_depth(schedule.peak_up).omega - model.with_depth(schedule.peak_down).omega
    elif method == "spectral":
        ramps = accumulated_phase(template, model, 1, grid) - accumulated_phase(template, model, 0, grid)
        rate = (
            _level_energy(model, schedule.peak_up, 1, grid)
            - _level_energy(model, schedule.peak_up, 0, grid)
            - _level_energy(model, schedule.peak_down, 1, grid)
            + _level_energy(model, schedule.peak_down, 0, grid)
        )
    else:
        raise ConfigurationError(f"unknown hold-time method {method!r}")
    if rate == 0:
        raise ConfigurationError("balanced schedule cannot accumulate a differential phase")
    hold = (target - ramps) / rate
    if hold < 0:
        raise ConfigurationError("ramps alone exceed the target phase; shorten them")
    return hold
