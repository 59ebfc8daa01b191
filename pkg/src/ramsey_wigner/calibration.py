"""Hold-time calibration from the collapse of the Ramsey contrast of a thermal ensemble.

A thermal (geometric) mixture of Fock states dephases as the hold time grows:
each level ``n`` acquires a differential phase ``n * Phi`` and the ensemble
fringe contrast ``|sum_n p_n exp(i n Phi)|`` is smallest where ``Phi = pi``,
the parity condition.  Scanning the hold time and locating the first contrast
minimum therefore calibrates the parity sequence without knowing the trap.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import potentials
from .core import WaveFunction
from .errors import CalibrationError, ConfigurationError, NumericalError
from .propagator import EvolutionSpec, propagate
from .ramsey import SequenceSpec, evolve_to_second_pulse, pulse, readout

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThermalEnsemble:
    """Geometric Fock-state populations ``p_n ~ P0 (1 - P0)^n`` for ``n <= n_max``."""

    ground_fraction: float
    n_max: int

    def __post_init__(self):
        thermal_weights(self.ground_fraction, self.n_max)  # validates

    @property
    def weights(self) -> np.ndarray:
        return thermal_weights(self.ground_fraction, self.n_max)

    @property
    def mean_occupation(self) -> float:
        return float(np.dot(np.arange(self.n_max + 1), self.weights))


def thermal_weights(ground_fraction: float, n_max: int) -> np.ndarray:
    """Truncated and renormalised geometric distribution over ``n = 0..n_max``.

    Examples
    --------
    >>> thermal_weights(0.5, 2)
    array([0.57142857, 0.28571429, 0.14285714])
    """
    if not 0 < ground_fraction <= 1:
        raise ConfigurationError(f"ground-state fraction must lie in (0, 1], got {ground_fraction}")
    if n_max < 0 or int(n_max) != n_max:
        raise ConfigurationError("n_max must be a non-negative integer")
    n = np.arange(int(n_max) + 1)
    if ground_fraction == 1:
        weights = (n == 0).astype(float)
    else:
        weights = ground_fraction * (1 - ground_fraction) ** n
    return weights / weights.sum()


@dataclass
class ContrastCurve:
    """Ensemble fringe contrast versus hold time.

    ``fringe_phase`` is the fitted phase of the fringe maximum relative to the
    compensated second-pulse phase; failed points are NaN with messages in
    ``errors`` (keyed by hold time).
    """

    hold_times: np.ndarray
    contrast: np.ndarray
    fringe_phase: np.ndarray
    ground_fraction: float
    errors: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def fit_fringe(phases, w) -> tuple[float, float, float]:
    """Least-squares fit ``w = c + A cos(phi - phi_max)``; returns (A, phi_max, c)."""
    phases, w = np.asarray(phases, float), np.asarray(w, float)
    if phases.size < 3:
        raise NumericalError("a fringe fit needs at least three phases")
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    coef, _, rank, _ = np.linalg.lstsq(design, w, rcond=None)
    if rank < 3 or not np.all(np.isfinite(coef)):
        raise NumericalError("degenerate fringe fit")
    c, a, b = coef
    return float(np.hypot(a, b)), float(np.arctan2(b, a)), float(c)


def fringe_readouts(before: np.ndarray, spec: SequenceSpec, offsets) -> np.ndarray:
    """Readout w for each row of ``before`` (B, 2, N) at each second-pulse phase offset."""
    out = np.empty((before.shape[0], len(offsets)))
    for k, offset in enumerate(offsets):
        after = pulse(before, np.pi / 2, spec.phase2 + offset)
        out[:, k] = readout(after, spec.grid.dx)
    return out


def _ensemble_contrast(before, weights, spec, offsets):
    w = weights @ fringe_readouts(before, spec, offsets)
    amplitude, phase, _ = fit_fringe(offsets, w)
    return amplitude, phase


def contrast_vs_hold(ensemble: ThermalEnsemble, hold_times, spec: SequenceSpec, states=None,
                     n_phases: int = 16) -> ContrastCurve:
    """Ramsey contrast of a thermal ensemble for every hold time in ``hold_times``.

    Every hold time shares the ramp-up, so the state is propagated once to the
    end of the ramp-up, advanced through successively longer holds, and only
    the ramp-down and the second pulse are repeated per hold time.  The
    result equals independent runs up to the step partition (second order in
    ``dt``).  ``states`` defaults to the trap's own Fock states.
    """
    hold_times = np.asarray(hold_times, dtype=float)
    if hold_times.ndim != 1 or hold_times.size == 0:
        raise ConfigurationError("hold_times must be a non-empty 1-d sequence")
    if np.any(np.diff(hold_times) <= 0) or hold_times[0] < 0:
        raise ConfigurationError("hold_times must be non-negative and strictly increasing")
    if n_phases < 8:
        raise ConfigurationError("at least eight second-pulse phases are required")
    if spec.schedule.balanced:
        log.warning("balanced schedule: no differential phase, contrast cannot collapse")
    weights = ensemble.weights
    keep = weights > 0
    if states is None:
        states = [wf for _, wf in potentials.stationary_states(spec.model, spec.grid, ensemble.n_max + 1)]
    if len(states) < weights.size:
        raise ConfigurationError(f"need {weights.size} Fock states, got {len(states)}")
    psi = np.stack([states[n].psi for n in np.flatnonzero(keep)])
    weights = weights[keep]
    offsets = 2 * np.pi * np.arange(n_phases) / n_phases

    grid = spec.grid
    longest = spec.with_hold(float(hold_times[-1]), recompute_phi0=False)
    longest.validate()
    trap = longest.potential()
    sched = longest.schedule
    hold_start = sched.t_start + sched.t_ramp

    state = np.zeros((psi.shape[0], 2, grid.n_points), dtype=complex)
    state[:, 1, :] = psi
    if spec.t_pulse1 > 0:
        state = propagate(state, grid, EvolutionSpec(spec.dt, 0.0, spec.t_pulse1, trap))
    state = pulse(state, np.pi / 2, spec.phase1)
    state = propagate(state, grid, EvolutionSpec(spec.dt, spec.t_pulse1, hold_start, trap))

    contrast = np.full(hold_times.size, np.nan)
    phase = np.full(hold_times.size, np.nan)
    errors = {}
    t_now = hold_start
    for k, hold in enumerate(hold_times):
        try:
            state = propagate(state, grid, EvolutionSpec(spec.dt, t_now, hold_start + hold, trap))
            t_now = hold_start + hold
            current = spec.with_hold(float(hold))
            down = propagate(
                state, grid,
                EvolutionSpec(spec.dt, t_now, current.t_pulse2, current.potential()),
            )
            contrast[k], phase[k] = _ensemble_contrast(down, weights, current, offsets)
        except NumericalError as exc:  # recorded per point, the curve carries on
            errors[f"{hold:.6g}"] = str(exc)
    return ContrastCurve(
        hold_times, contrast, phase, ensemble.ground_fraction, errors,
        {"n_phases": n_phases, "n_max": ensemble.n_max, "dt": spec.dt},
    )


def find_collapse(curve, hold_times=None, flat_tol: float = 1e-6) -> float:
    """Hold time of the first local contrast minimum, refined parabolically.

    Accepts a :class:`ContrastCurve` or, with ``hold_times``, a bare array of
    contrast values.
    """
    if isinstance(curve, ContrastCurve):
        t, c = curve.hold_times, curve.contrast
    else:
        if hold_times is None:
            raise ConfigurationError("hold_times required with a bare contrast array")
        t, c = np.asarray(hold_times, float), np.asarray(curve, float)
    valid = np.isfinite(c)
    t, c = t[valid], c[valid]
    if c.size < 3:
        raise CalibrationError("fewer than three valid contrast samples")
    if np.ptp(c) < flat_tol:
        raise CalibrationError("contrast curve is flat; no collapse to calibrate on")
    for i in range(1, c.size - 1):
        if c[i] < c[i - 1] and c[i] <= c[i + 1]:
            return _parabola_vertex(t[i - 1:i + 2], c[i - 1:i + 2])
    raise CalibrationError("contrast curve has no interior minimum; extend the hold-time range")


def _parabola_vertex(t, c) -> float:
    coef = np.polyfit(t - t[1], c, 2)
    if coef[0] <= 0:
        return float(t[1])
    vertex = t[1] - coef[1] / (2 * coef[0])
    return float(np.clip(vertex, t[0], t[2]))


def find_revival(curve: ContrastCurve, after: float) -> tuple[float, float]:
    """(hold time, contrast) of the largest contrast sample beyond ``after``."""
    mask = (curve.hold_times > after) & np.isfinite(curve.contrast)
    if not mask.any():
        raise CalibrationError("no samples after the collapse; extend the hold-time range")
    idx = np.flatnonzero(mask)[np.argmax(curve.contrast[mask])]
    return float(curve.hold_times[idx]), float(curve.contrast[idx])


@dataclass
class CalibrationResult:
    t_hold: float
    phi0: float
    curve: ContrastCurve
    spec: SequenceSpec


def calibrate(spec: SequenceSpec, ensemble: ThermalEnsemble, hold_times, states=None,
              n_phases: int = 16) -> CalibrationResult:
    """Scan, locate the first collapse and return the calibrated sequence."""
    curve = contrast_vs_hold(ensemble, hold_times, spec, states=states, n_phases=n_phases)
    t_hold = find_collapse(curve)
    calibrated = spec.with_hold(t_hold)
    phi0 = calibrated.phi0 if calibrated.phi0 is not None else 0.0
    return CalibrationResult(t_hold, float(phi0), curve, calibrated)


def ideal_contrast(ensemble: ThermalEnsemble, phase: float) -> float:
    """|sum_n p_n exp(i n phase)|: the harmonic-trap contrast at differential phase ``phase``."""
    n = np.arange(ensemble.n_max + 1)
    return float(np.abs(np.sum(ensemble.weights * np.exp(1j * n * phase))))


def single_state_contrast(wf: WaveFunction, spec: SequenceSpec, n_phases: int = 16) -> float:
    """Fringe contrast of one pure motional state (no ensemble dephasing)."""
    before = evolve_to_second_pulse(wf.psi[None, :], spec)
    offsets = 2 * np.pi * np.arange(n_phases) / n_phases
    return _ensemble_contrast(before, np.ones(1), spec, offsets)[0]
