"""Reference Wigner functions computed directly from a wavefunction.

Two independent routes: the integral transform

    W(x, p) = 1/(pi hbar) * integral dy psi*(x + y) psi(x - y) exp(2 i p y / hbar)

and the alternating sum over displaced Fock-state populations

    W(x, p) = sum_n (-1)^n |<psi| D(x, p) |n>|^2 / (pi hbar).

Values are returned as the signed contrast ``C = pi hbar W`` on a
:class:`~ramsey_wigner.ramsey.WignerGrid`, the same units as the Ramsey scan.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import WaveFunction
from .errors import ConfigurationError, DomainError, NumericalError
from .ramsey import WignerGrid
from .units import GroundStateScales


class TruncationError(NumericalError):
    """The Fock basis does not capture enough of the displaced state."""


@dataclass
class OracleResult:
    grid: WignerGrid
    method: str
    parameters: dict = field(default_factory=dict)


def _to_internal(x_list, p_list, scales: GroundStateScales | None):
    x, p = np.atleast_1d(np.asarray(x_list, float)), np.atleast_1d(np.asarray(p_list, float))
    if scales is None:
        return x, p
    return x * scales.dx0, p * scales.dp0


def wigner_transform(wf: WaveFunction, x_list, p_list, scales: GroundStateScales | None = None,
                     imag_tol: float = 1e-10) -> OracleResult:
    """Integral-transform Wigner function on the product grid ``x_list x p_list``.

    The state is translated spectrally so that each requested ``x`` falls on
    the grid; the ``y`` integral is then a direct discrete Fourier sum at the
    requested momenta.  With ``scales`` the axes are in ground-state widths.
    """
    grid = wf.grid
    norm = wf.norm()
    if abs(norm - 1) > 1e-8:
        raise NumericalError(f"wigner_transform needs a normalised state (norm {norm:.3e})")
    xs, ps = _to_internal(x_list, p_list, scales)
    if np.any(np.abs(ps) >= np.pi / (2 * grid.dx)):
        raise DomainError("requested momentum beyond the Nyquist limit of the y-sampling")
    if np.any(xs < grid.x_min) or np.any(xs > grid.x_max):
        raise DomainError("requested position outside the grid")
    shifted = np.fft.ifft(
        np.fft.fft(wf.psi)[None, :] * np.exp(1j * grid.p_fft[None, :] * xs[:, None]), axis=-1
    )  # shifted[i](y) = psi(y + x_i)
    corr = np.conj(shifted) * shifted[:, grid.reflection]
    kernel = np.exp(2j * np.outer(grid.x, ps))
    w = corr @ kernel * grid.dx
    scale = np.max(np.abs(w.real), initial=1.0)
    if np.max(np.abs(w.imag)) > imag_tol * max(scale, 1.0):
        raise NumericalError(f"Wigner transform not real (max imag {np.max(np.abs(w.imag)):.2e})")
    axes = (x_list, p_list) if scales is not None else (xs, ps)
    result = WignerGrid(np.atleast_1d(axes[0]), np.atleast_1d(axes[1]), w.real,
                        {"unit_convention": "contrast C = pi*hbar*W"})
    return OracleResult(result, "integral-transform", {"n_points": grid.n_points, "dx": grid.dx})


def wigner_parity_sum(wf: WaveFunction, x: float, p: float, basis, n_max: int | None = None,
                      threshold: float = 1e-4) -> tuple[float, float]:
    """Signed contrast at one point from displaced Fock populations.

    ``basis`` is a sequence of Fock states of definite, alternating parity
    (e.g. the stationary states of a symmetric trap); ``x``, ``p`` are internal
    coordinates.  Returns ``(C, captured)`` with ``captured = sum_n Q_n``.
    """
    if n_max is None:
        n_max = len(basis) - 1
    if n_max >= len(basis):
        raise ConfigurationError(f"basis holds {len(basis)} states, n_max={n_max} requested")
    total, captured = 0.0, 0.0
    for n in range(n_max + 1):
        displaced = core.displace_state(basis[n], x, p)
        q = abs(wf.inner(displaced)) ** 2
        total += (-1) ** n * q
        captured += q
    if captured < 1 - threshold:
        raise TruncationError(f"Fock basis up to n={n_max} captures only {captured:.6f}")
    return total, captured


def wigner_parity_sum_grid(wf: WaveFunction, x_list, p_list, basis, n_max=None,
                           scales: GroundStateScales | None = None, threshold=1e-4) -> OracleResult:
    xs, ps = _to_internal(x_list, p_list, scales)
    values = np.empty((xs.size, ps.size))
    worst = 1.0
    for i, xv in enumerate(xs):
        for j, pv in enumerate(ps):
            values[i, j], captured = wigner_parity_sum(wf, xv, pv, basis, n_max, threshold)
            worst = min(worst, captured)
    axes = (x_list, p_list) if scales is not None else (xs, ps)
    result = WignerGrid(np.atleast_1d(axes[0]), np.atleast_1d(axes[1]), values,
                        {"unit_convention": "contrast C = pi*hbar*W"})
    n_used = len(basis) - 1 if n_max is None else n_max
    return OracleResult(result, "parity-sum", {"n_max": n_used, "min_captured": worst})


def compare(a: WignerGrid, b: WignerGrid) -> dict:
    """Max-abs and RMS difference of two grids on identical axes (NaNs ignored)."""
    if a.values.shape != b.values.shape or not (
        np.allclose(a.x, b.x, rtol=0, atol=1e-12) and np.allclose(a.p, b.p, rtol=0, atol=1e-12)
    ):
        raise ConfigurationError("cannot compare Wigner grids with different axes")
    diff = a.values - b.values
    valid = np.isfinite(diff)
    if not valid.any():
        raise NumericalError("no finite points to compare")
    return {
        "max_abs": float(np.max(np.abs(diff[valid]))),
        "rms": float(np.sqrt(np.mean(diff[valid] ** 2))),
        "n_points": int(valid.sum()),
        "n_missing": int((~valid).sum()),
        "difference": diff,
    }


def phase_space_integrals(result: WignerGrid, scales: GroundStateScales | None = None) -> dict:
    """Normalisation and purity of W = C/pi over a uniform grid (rectangle rule)."""
    x, p = result.x, result.p
    if scales is not None:
        x, p = x * scales.dx0, p * scales.dp0
    area = (x[1] - x[0]) * (p[1] - p[0])
    w = result.values / np.pi
    return {"norm": float(np.sum(w) * area), "purity": float(np.sum(w**2) * area)}
