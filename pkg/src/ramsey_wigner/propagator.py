"""Strang split-step propagation in moving, time-dependent, spin-resolved traps.

One step of length ``dt`` applies ``exp(-i V dt/2) exp(-i T dt) exp(-i V dt/2)``
with the potential sampled at the step midpoint, which keeps the scheme
second order for time-dependent Hamiltonians.  Simulation happens in the lab
frame; :func:`to_comoving` is applied only when a state is read out.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft

from . import core
from .core import Grid, SpinorState, WaveFunction
from .errors import ConfigurationError, NumericalError
from .potentials import DepthSchedule, TrapTrajectory

_CHECK_EVERY = 256


@dataclass
class EvolutionSpec:
    """Time step, interval and potential ``potential(t) -> V`` on the grid.

    ``V`` may carry a leading spin axis of length two for spinor evolution.
    """

    dt: float
    t_start: float
    t_end: float
    potential: Callable[[float], np.ndarray]
    trajectory: TrapTrajectory | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("time step must be positive")
        if self.t_end < self.t_start:
            raise ConfigurationError("evolution interval is reversed")

    def steps(self) -> list[tuple[float, float]]:
        """(midpoint, duration) of every step, the last one possibly partial."""
        span = self.t_end - self.t_start
        n_full = int(np.floor(span / self.dt + 1e-9))
        out = [(self.t_start + (j + 0.5) * self.dt, self.dt) for j in range(n_full)]
        rest = span - n_full * self.dt
        if rest > 1e-12 * max(1.0, span):
            out.append((self.t_start + n_full * self.dt + rest / 2, rest))
        return out


def static_potential(values: np.ndarray) -> Callable[[float], np.ndarray]:
    values = np.asarray(values, dtype=float)
    return lambda t: values


class TrapPotential:
    """Spin-resolved moving trap ``V_s(x, t) = model_{U_s(t)}(x - x_c(t))``.

    ``schedule`` supplies the per-spin depths and ``trajectory`` the trap
    centre; either may be omitted for a static trap at the model's depth.  A
    trajectory with array-valued offset/velocity of shape (B,) yields a batch
    of potentials of shape (B, 2, N).  All trap models are linear in their
    depth, so the shape is evaluated once per step and scaled per spin.
    """

    def __init__(self, model, grid: Grid, schedule: DepthSchedule | None = None,
                 trajectory: TrapTrajectory | None = None):
        self.model = model
        self.grid = grid
        self.schedule = schedule
        self.trajectory = trajectory or TrapTrajectory()
        self._static_shape = self._shape(0.0) if self.trajectory.is_static else None

    def _shape(self, center):
        center = np.asarray(center, dtype=float)
        d = self.grid.x - center[..., None]
        period = getattr(self.model, "period", None)
        # a periodic model commensurate with the grid needs no minimum-image wrap
        if period is None or abs(self.grid.length / period - round(self.grid.length / period)) > 1e-9:
            d = self.grid.wrap(d)
        return self.model(d) / self.model.depth

    def depths(self, t: float) -> tuple[float, float]:
        if self.schedule is None:
            return self.model.depth, self.model.depth
        up, down = self.schedule.depths(t)
        return float(up), float(down)

    def __call__(self, t: float) -> np.ndarray:
        if self._static_shape is not None:
            shape = self._static_shape
        else:
            shape = self._shape(self.trajectory.center(t))
        up, down = self.depths(t)
        return np.stack([up * shape, down * shape], axis=-2)

    def spin(self, index: int) -> Callable[[float], np.ndarray]:
        """Potential seen by a single spin component."""
        return lambda t: self(t)[..., index, :]

    def evaluate(self, spin: int, t: float, x):
        """V_spin(x, t) at arbitrary positions (unbatched trajectory)."""
        depth = self.depths(t)[spin]
        return self.model.with_depth(depth)(self.grid.wrap(np.asarray(x) - float(self.trajectory.center(t))))


def propagate(psi: np.ndarray, grid: Grid, spec: EvolutionSpec) -> np.ndarray:
    """Evolve amplitudes with arbitrary leading (batch, spin) axes; returns a new array."""
    psi = np.array(psi, dtype=complex, copy=True)
    k2 = 0.5 * grid.p_fft**2
    kinetic = {}
    half = None
    for j, (t_mid, h) in enumerate(spec.steps()):
        if h not in kinetic:
            kinetic[h] = np.exp(-1j * k2 * h)
        angle = (0.5 * h) * spec.potential(t_mid)
        if half is None or half.shape != angle.shape:
            half = np.empty(angle.shape, dtype=complex)
        # exp(-i angle) assembled from cos/sin, markedly cheaper than complex exp
        np.cos(angle, out=half.real)
        np.sin(angle, out=half.imag)
        np.negative(half.imag, out=half.imag)
        psi *= half
        psi = scipy.fft.fft(psi, axis=-1, overwrite_x=True)
        psi *= kinetic[h]
        psi = scipy.fft.ifft(psi, axis=-1, overwrite_x=True)
        psi *= half
        if j % _CHECK_EVERY == 0 and not np.all(np.isfinite(psi)):
            raise NumericalError(f"non-finite amplitudes at step {j}")
    if not np.all(np.isfinite(psi)):
        raise NumericalError("non-finite amplitudes at the final step")
    return psi


def evolve(wf: WaveFunction, spec: EvolutionSpec) -> WaveFunction:
    return WaveFunction(wf.grid, propagate(wf.psi, wf.grid, spec))


def evolve_spinor(state: SpinorState, spec: EvolutionSpec) -> SpinorState:
    """Evolve both components, each under its own row of ``spec.potential(t)``."""
    probe = np.asarray(spec.potential(spec.t_start))
    if probe.ndim != 2 or probe.shape[0] != 2:
        raise ConfigurationError("spinor evolution needs a potential with a spin axis of length 2")
    return SpinorState(state.grid, propagate(state.psi, state.grid, spec))


def to_comoving(wf: WaveFunction, center: float, velocity: float) -> WaveFunction:
    """psi(x + x_c) exp(-i v x): the state seen from a trap at ``center`` moving at ``velocity``."""
    return core.displace_state(wf, -center, -velocity)


def comoving_array(psi: np.ndarray, grid: Grid, center: float, velocity: float) -> np.ndarray:
    """Array version of :func:`to_comoving` for batched (.., N) amplitudes."""
    out = core.shift_array(psi, grid, -center)
    if velocity:
        out = out * np.exp(-1j * velocity * grid.x)
    return out


def leakage(psi: np.ndarray, grid: Grid, center, half_width: float) -> np.ndarray:
    """Probability outside the trap site ``|x - x_c| <= half_width`` (per leading index).

    ``center`` may be an array matching the leading batch axis of ``psi``;
    any axes between batch and position (e.g. spin) are summed over.
    """
    center = np.asarray(center, dtype=float)
    outside = np.abs(grid.wrap(grid.x - center[..., None])) > half_width
    rho = np.abs(psi) ** 2
    while outside.ndim < rho.ndim:
        outside = outside[..., None, :]
    lost = np.sum(rho * outside, axis=-1)
    total = np.sum(rho, axis=-1)
    return lost / total
