"""Spatial grids, wavefunctions and the elementary operations on them.

All quantities are in internal units (hbar = m = 1, length 1/k).  Grids are
periodic and symmetric about the origin: ``x_j = (j - N/2) dx`` so that the
reflection ``j -> (N - j) mod N`` maps ``x -> -x`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, DomainError, NumericalError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic 1D grid of ``n_points`` samples over ``length``."""

    n_points: int
    length: float

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two, got {n}")
        if not self.length > 0:
            raise ConfigurationError("grid length must be positive")

    @classmethod
    def for_lattice(cls, n_points: int = 1024, sites: int = 4) -> "Grid":
        """Grid spanning ``sites`` lattice periods (period pi in internal units)."""
        return cls(n_points, sites * np.pi)

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.length

    @property
    def x_min(self) -> float:
        return -self.length / 2

    @property
    def x_max(self) -> float:
        return self.length / 2 - self.dx

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dx

    @cached_property
    def p(self) -> np.ndarray:
        """Momentum grid in ascending order (same centring as ``x``)."""
        return (np.arange(self.n_points) - self.n_points // 2) * self.dp

    @cached_property
    def p_fft(self) -> np.ndarray:
        """Momenta in numpy FFT ordering, for use inside propagators."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @cached_property
    def reflection(self) -> np.ndarray:
        return (-np.arange(self.n_points)) % self.n_points

    def wrap(self, x):
        """Minimum-image representative of ``x`` in [-L/2, L/2)."""
        return (np.asarray(x) + self.length / 2) % self.length - self.length / 2


@dataclass
class WaveFunction:
    """Complex amplitudes on a grid, in position space unless ``space == "momentum"``."""

    grid: Grid
    psi: np.ndarray
    space: str = field(default="position")

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"amplitude shape {self.psi.shape} does not match grid of {self.grid.n_points}"
            )

    @property
    def step(self) -> float:
        return self.grid.dx if self.space == "position" else self.grid.dp

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.step)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.psi / np.sqrt(self.norm()), self.space)

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.psi, other.psi) * self.step)

    def fidelity(self, other: "WaveFunction") -> float:
        return abs(self.inner(other)) ** 2 / (self.norm() * other.norm())

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


def to_momentum_array(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """Continuum-normalised momentum amplitudes on ``grid.p`` (last axis)."""
    shifted = np.fft.ifftshift(psi, axes=-1)
    return np.fft.fftshift(np.fft.fft(shifted, axis=-1), axes=-1) * (grid.dx / np.sqrt(2 * np.pi))


def to_position_array(phi: np.ndarray, grid: Grid) -> np.ndarray:
    shifted = np.fft.ifftshift(phi, axes=-1)
    scale = grid.n_points * grid.dp / np.sqrt(2 * np.pi)
    return np.fft.fftshift(np.fft.ifft(shifted, axis=-1), axes=-1) * scale


def transform(wf: WaveFunction, direction: str = "momentum") -> WaveFunction:
    """Unitary change of representation between position and momentum space.

    ``direction`` is the target space, ``"momentum"`` or ``"position"``.
    """
    if direction == "momentum":
        if wf.space != "position":
            raise ConfigurationError("state is already in momentum space")
        return WaveFunction(wf.grid, to_momentum_array(wf.psi, wf.grid), "momentum")
    if direction == "position":
        if wf.space != "momentum":
            raise ConfigurationError("state is already in position space")
        return WaveFunction(wf.grid, to_position_array(wf.psi, wf.grid), "position")
    raise ConfigurationError(f"unknown transform direction {direction!r}")


def parity_expectation(wf: WaveFunction, atol: float = 1e-8) -> float:
    """<psi| Pi |psi> with Pi the reflection about x = 0."""
    norm = wf.norm()
    if abs(norm - 1) > atol:
        raise NumericalError(f"parity_expectation needs a normalised state (norm {norm:.3e})")
    return float(np.real(np.vdot(wf.psi, wf.psi[wf.grid.reflection])) * wf.step)


def _edge_mass(values: np.ndarray, coords: np.ndarray, limit: float) -> float:
    return float(np.sum(np.abs(values[np.abs(coords) > limit]) ** 2) / np.sum(np.abs(values) ** 2))


def shift_array(psi: np.ndarray, grid: Grid, x0: float) -> np.ndarray:
    """Band-limited periodic translation psi(x) -> psi(x - x0) along the last axis."""
    if x0 == 0:
        return psi
    return np.fft.ifft(np.fft.fft(psi, axis=-1) * np.exp(-1j * grid.p_fft * x0), axis=-1)


def displace_state(
    wf: WaveFunction, x0: float, p0: float, edge_tolerance: float = 1e-6
) -> WaveFunction:
    """Return psi(x - x0) exp(i p0 x).

    The phase convention differs from the symmetric Glauber operator by a
    global phase only.  Raises :class:`DomainError` when the translation or the
    momentum kick pushes a previously confined state onto the edges of the
    position or momentum grid.
    """
    grid = wf.grid
    psi = shift_array(wf.psi, grid, x0)
    if p0 != 0:
        psi = psi * np.exp(1j * p0 * grid.x)
    x_lim = 0.45 * grid.length
    p_lim = 0.9 * np.pi / grid.dx
    before_x = _edge_mass(wf.psi, grid.x, x_lim)
    after_x = _edge_mass(psi, grid.x, x_lim)
    if after_x > edge_tolerance and after_x > 10 * before_x:
        raise DomainError(f"displaced state reaches the grid boundary (edge mass {after_x:.2e})")
    before_p = _edge_mass(to_momentum_array(wf.psi, grid), grid.p, p_lim)
    after_p = _edge_mass(to_momentum_array(psi, grid), grid.p, p_lim)
    if after_p > edge_tolerance and after_p > 10 * before_p:
        raise DomainError(f"momentum kick reaches the Nyquist limit (edge mass {after_p:.2e})")
    return WaveFunction(grid, psi)


def expectations(wf: WaveFunction, potential) -> tuple[float, float, float]:
    """Return (<x>, <p>, <E>) with the kinetic energy evaluated spectrally.

    ``potential`` is either a callable of position or an array on the grid.
    """
    grid = wf.grid
    rho = wf.density() * grid.dx
    phi = to_momentum_array(wf.psi, grid)
    rho_p = np.abs(phi) ** 2 * grid.dp
    v = potential(grid.x) if callable(potential) else np.asarray(potential)
    mean_x = float(np.sum(grid.x * rho))
    mean_p = float(np.sum(grid.p * rho_p))
    energy = float(np.sum(0.5 * grid.p**2 * rho_p) + np.sum(v * rho))
    return mean_x, mean_p, energy


def _window_indices(grid: Grid, half_width: float | None) -> np.ndarray:
    if half_width is None:
        return np.arange(grid.n_points)
    m = 2 * half_width / grid.dx
    m_int = int(round(m))
    if abs(m - m_int) > 1e-9 * max(m, 1) or m_int % 2 or m_int > grid.n_points:
        raise ConfigurationError(
            f"site window of half-width {half_width} is not an even number of grid cells"
        )
    start = grid.n_points // 2 - m_int // 2
    return np.arange(start, start + m_int)


def kinetic_matrix(n: int, dx: float) -> np.ndarray:
    """Dense periodic kinetic-energy matrix, exact on the discrete Fourier basis."""
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    column = np.real(np.fft.ifft(0.5 * k**2))
    return linalg.circulant(column)


@lru_cache(maxsize=64)
def _diagonalize(potential, grid: Grid, count: int, half_width):
    idx = _window_indices(grid, half_width)
    m = idx.size
    if count > m:
        raise ConfigurationError(f"requested {count} states from a window of {m} points")
    x_w = (np.arange(m) - m // 2) * grid.dx
    v = np.asarray(potential(x_w), dtype=float)
    h = kinetic_matrix(m, grid.dx) + np.diag(v)
    try:
        energies, vectors = linalg.eigh(h, subset_by_index=[0, count - 1])
    except linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    residual = np.max(np.linalg.norm(h @ vectors - vectors * energies, axis=0))
    if residual > 1e-8 * max(1.0, np.max(np.abs(energies))):
        raise NumericalError(f"eigensolver residual {residual:.2e} too large")
    # fix the arbitrary sign: positive at the centre (even) or just right of it (odd)
    centre = m // 2
    for j in range(count):
        ref = vectors[centre, j] if abs(vectors[centre, j]) > 1e-6 else vectors[centre + 1, j]
        if ref < 0:
            vectors[:, j] *= -1
    return energies, vectors, idx


def stationary_states(
    potential: Callable, grid: Grid, count: int, half_width: float | None = None
) -> list[tuple[float, WaveFunction]]:
    """Lowest ``count`` eigenpairs of ``p^2/2 + V(x)``.

    The Hamiltonian is diagonalised on the periodic window ``|x| < half_width``
    (the whole grid when ``None``) with the kinetic term exact in the Fourier
    basis; eigenvectors are then embedded in the full grid, zero outside the
    window.  For a lattice the window is a single site, so the returned states
    are the site-localised Fock (Wannier) states.
    """
    energies, vectors, idx = _diagonalize(potential, grid, count, half_width)
    states = []
    for j in range(count):
        psi = np.zeros(grid.n_points, dtype=complex)
        psi[idx] = vectors[:, j]
        if idx.size < grid.n_points:
            # split the window's first sample between x = -h and x = +h to keep exact parity
            psi[idx[0]] = vectors[0, j] / np.sqrt(2)
            psi[(idx[-1] + 1) % grid.n_points] = vectors[0, j] / np.sqrt(2)
        states.append((float(energies[j]), WaveFunction(grid, psi / np.sqrt(grid.dx))))
    return states


def fock_states(potential, grid: Grid, n_values: Sequence[int], half_width=None) -> list[WaveFunction]:
    """Convenience wrapper returning only the requested eigenstates."""
    states = stationary_states(potential, grid, max(n_values) + 1, half_width)
    return [states[n][1] for n in n_values]


@dataclass
class SpinorState:
    """Motional amplitudes of the two internal states, ``psi[0]`` = up, ``psi[1]`` = down."""

    grid: Grid
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (2, self.grid.n_points):
            raise ConfigurationError("spinor amplitudes must have shape (2, n_points)")

    @classmethod
    def from_components(cls, up: WaveFunction | None, down: WaveFunction | None) -> "SpinorState":
        grid = (up or down).grid
        zero = np.zeros(grid.n_points, dtype=complex)
        return cls(grid, np.stack([zero if up is None else up.psi, zero if down is None else down.psi]))

    @classmethod
    def spin_down(cls, wf: WaveFunction) -> "SpinorState":
        return cls.from_components(None, wf)

    @property
    def up(self) -> WaveFunction:
        return WaveFunction(self.grid, self.psi[0])

    @property
    def down(self) -> WaveFunction:
        return WaveFunction(self.grid, self.psi[1])

    def populations(self) -> tuple[float, float]:
        p = np.sum(np.abs(self.psi) ** 2, axis=-1) * self.grid.dx
        return float(p[0]), float(p[1])
