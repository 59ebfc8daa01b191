"""The Ramsey parity protocol and phase-space scans built on it.

Sequence (default ordering)::

    tau_1 = 0          first pi/2 pulse, phase phi_1
    tau_W = 0          trap starts shifting by x and moving at p/m (t_switch)
    ramps + hold       spin-dependent depths (parity operation)
    tau_2              second pi/2 pulse, phase phi_1 - Phi_0 - pi
    readout            w = P_down - P_up

With the extra ``-pi`` in the second pulse phase the motional ground state
reads out ``w = +1``, so ``w`` equals the displaced-parity expectation value.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import potentials
from .core import Grid, SpinorState, WaveFunction
from .errors import ConfigurationError, NumericalError
from .potentials import DepthSchedule, TrapTrajectory
from .propagator import EvolutionSpec, TrapPotential, comoving_array, leakage, propagate
from .units import GroundStateScales

log = logging.getLogger(__name__)

__all__ = [
    "SpinorState",
    "SequenceSpec",
    "WignerGrid",
    "pulse",
    "run_sequence",
    "run_batch",
    "measure_wigner_point",
    "scan_wigner",
    "parity_scan",
    "run_ensemble",
]


def pulse(state, theta: float, phase: float):
    """Instantaneous spin rotation, applied pointwise in position.

    Accepts a :class:`SpinorState` or an array whose second-to-last axis is the
    spin axis (up, down).
    """
    psi = state.psi if isinstance(state, SpinorState) else np.asarray(state)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    up, down = psi[..., 0, :], psi[..., 1, :]
    new = np.stack(
        [c * up - 1j * np.exp(1j * phase) * s * down, -1j * np.exp(-1j * phase) * s * up + c * down],
        axis=-2,
    )
    return SpinorState(state.grid, new) if isinstance(state, SpinorState) else new


def readout(psi: np.ndarray, dx: float) -> np.ndarray:
    """Population difference w = P_down - P_up per leading index."""
    pops = np.sum(np.abs(psi) ** 2, axis=-1) * dx
    return pops[..., 1] - pops[..., 0]


@dataclass(frozen=True)
class SequenceSpec:
    """Complete timing and phase description of one Ramsey parity sequence.

    ``model`` is the trap at the base depth.  ``phi0`` is the ground-state
    differential phase cancelled by the second pulse; ``None`` disables the
    compensation.  Displacements ``x``, ``p`` are in units of the ground-state
    widths ``dx0``, ``dp0`` of the base trap.
    """

    model: object
    grid: Grid
    schedule: DepthSchedule
    t_switch: float
    dt: float
    x: float = 0.0
    p: float = 0.0
    phase1: float = 0.0
    phase_offset: float = 0.0
    phi0: float | None = 0.0
    displacement_first: bool = False
    margin: float = 0.0
    site_half_width: float = np.pi / 2
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def build(cls, model, grid, peak_depths, t_ramp, t_hold, t_switch, dt=None,
              margin=None, compensate=True, **kwargs) -> "SequenceSpec":
        """Lay out the default timeline and compute the Phi_0 compensation."""
        omega = model.omega
        if dt is None:
            dt = 2 * np.pi / omega / 500
        if margin is None:
            margin = 2 * dt
        start = t_switch + margin
        schedule = potentials.make_parity_schedule(t_ramp, t_hold, model.depth, peak_depths, start)
        phi0 = potentials.phi0_integral(schedule, model, grid) if compensate else None
        return cls(model, grid, schedule, t_switch, dt, phi0=phi0, margin=margin, **kwargs)

    @property
    def scales(self) -> GroundStateScales:
        return GroundStateScales(self.model.omega)

    @property
    def t_displace(self) -> float:
        return 0.0

    @property
    def t_pulse1(self) -> float:
        return self.t_switch + self.margin / 2 if self.displacement_first else 0.0

    @property
    def t_pulse2(self) -> float:
        return self.schedule.t_end + self.margin

    @property
    def phase2(self) -> float:
        phi0 = 0.0 if self.phi0 is None else self.phi0
        return self.phase1 - phi0 - np.pi + self.phase_offset

    @property
    def trajectory(self) -> TrapTrajectory:
        return self.trajectory_for(self.x, self.p)

    def trajectory_for(self, x, p) -> TrapTrajectory:
        """Trap trajectory for displacement(s) ``x``, ``p`` in ground-state widths."""
        s = self.scales
        return potentials.make_displacement_trajectory(
            np.asarray(x) * s.dx0, np.asarray(p) * s.dp0, self.t_displace, self.t_switch
        )

    def displaced(self, x: float, p: float) -> "SequenceSpec":
        """Same calibrated sequence probing another phase-space point."""
        return replace(self, x=float(x), p=float(p))

    def with_hold(self, t_hold: float, recompute_phi0=True) -> "SequenceSpec":
        schedule = self.schedule.with_hold(t_hold)
        phi0 = self.phi0
        if recompute_phi0 and phi0 is not None:
            phi0 = potentials.phi0_integral(schedule, self.model, self.grid)
        return replace(self, schedule=schedule, phi0=phi0)

    def validate(self):
        if self.t_pulse1 > self.schedule.t_start or self.t_pulse2 < self.schedule.t_end:
            raise ConfigurationError("depth modulation must lie between the two pulses")
        if self.t_displace + self.t_switch > self.schedule.t_start:
            raise ConfigurationError("displacement must finish before the parity window")
        if self.schedule.t_start <= 0 and self.schedule.t_ramp + self.schedule.t_hold > 0:
            raise ConfigurationError("parity window must start after the displacement")

    def potential(self, trajectory: TrapTrajectory | None = None) -> TrapPotential:
        return TrapPotential(self.model, self.grid, self.schedule, trajectory or self.trajectory)


@dataclass
class SequenceResult:
    w: np.ndarray
    leakage: np.ndarray
    visibility: np.ndarray
    relative_phase: np.ndarray
    norm_drift: float
    populations_before: np.ndarray


def evolve_to_second_pulse(psi_batch: np.ndarray, spec: SequenceSpec, trajectory=None) -> np.ndarray:
    """Spinor amplitudes (B, 2, N) just before the second pulse, starting from |down>.

    ``trajectory`` may be a batched trajectory with one displacement per row.
    """
    spec.validate()
    grid = spec.grid
    psi_batch = np.atleast_2d(np.asarray(psi_batch, dtype=complex))
    state = np.zeros((psi_batch.shape[0], 2, grid.n_points), dtype=complex)
    state[:, 1, :] = psi_batch
    trap = spec.potential(trajectory)
    t1, t2 = spec.t_pulse1, spec.t_pulse2
    if t1 > 0:
        state = propagate(state, grid, EvolutionSpec(spec.dt, 0.0, t1, trap))
    state = pulse(state, np.pi / 2, spec.phase1)
    return propagate(state, grid, EvolutionSpec(spec.dt, t1, t2, trap))


def run_batch(psi_batch: np.ndarray, spec: SequenceSpec, x=None, p=None) -> SequenceResult:
    """Run the sequence for every row of ``psi_batch`` (each normalised, in |down>).

    Optional arrays ``x``, ``p`` (ground-state widths) give each row its own
    displacement; otherwise all rows use ``spec.x``, ``spec.p``.
    """
    grid = spec.grid
    psi_batch = np.atleast_2d(psi_batch)
    norms_in = np.sum(np.abs(psi_batch) ** 2, axis=-1) * grid.dx
    if np.any(np.abs(norms_in - 1) > 1e-8):
        raise NumericalError("input states must be normalised")
    if x is None and p is None:
        trajectory = spec.trajectory
    else:
        rows = psi_batch.shape[0]
        x = np.broadcast_to(np.asarray(spec.x if x is None else x, float), (rows,))
        p = np.broadcast_to(np.asarray(spec.p if p is None else p, float), (rows,))
        trajectory = spec.trajectory_for(x, p)
    before = evolve_to_second_pulse(psi_batch, spec, trajectory)
    after = pulse(before, np.pi / 2, spec.phase2)
    w = readout(after, grid.dx)
    norm_drift = float(np.max(np.abs(np.sum(np.abs(after) ** 2, axis=(-1, -2)) * grid.dx - norms_in)))
    if np.any(np.abs(w) > 1 + 1e-9):
        raise NumericalError("population difference outside [-1, 1]")

    center = trajectory.center(spec.t_pulse2)
    pops = np.sum(np.abs(before) ** 2, axis=-1) * grid.dx
    lost = leakage(before, grid, center, spec.site_half_width)
    overlap = np.sum(np.conj(before[:, 0, :]) * before[:, 1, :], axis=-1) * grid.dx
    visibility = np.abs(overlap) / np.sqrt(pops[:, 0] * pops[:, 1])
    return SequenceResult(
        w=w,
        leakage=np.sum(lost * pops, axis=-1) / np.sum(pops, axis=-1),
        visibility=visibility,
        relative_phase=np.angle(overlap),
        norm_drift=norm_drift,
        populations_before=pops,
    )


def run_sequence(wf: WaveFunction, spec: SequenceSpec) -> tuple[float, dict]:
    """Execute the protocol on one motional state prepared in |down>.

    Returns the readout ``w`` and a diagnostics dictionary.
    """
    result = run_batch(wf.psi[None, :], spec)
    diagnostics = {
        "leakage": float(result.leakage[0]),
        "visibility": float(result.visibility[0]),
        "relative_phase": float(result.relative_phase[0]),
        "norm_drift": result.norm_drift,
        "populations_before": tuple(result.populations_before[0]),
    }
    return float(result.w[0]), diagnostics


def run_ensemble(states, weights, spec: SequenceSpec) -> float:
    """Readout of an incoherent mixture: the weighted sum of pure-state readouts."""
    weights = np.asarray(weights, dtype=float)
    result = run_batch(np.stack([s.psi for s in states]), spec)
    return float(np.dot(weights, result.w) / np.sum(weights))


def measure_wigner_point(wf: WaveFunction, x: float, p: float, template: SequenceSpec) -> float:
    """Signed contrast C(x, p) = pi hbar W(x, p); ``x``, ``p`` in ground-state widths."""
    w, _ = run_sequence(wf, template.displaced(x, p))
    if abs(w) > 1 + 1e-6:
        raise NumericalError(f"signed contrast {w} violates |C| <= 1")
    return w


@dataclass
class WignerGrid:
    """Signed contrast C on a phase-space grid; ``values[i, j]`` is at (x[i], p[j]).

    Axes are in units of the ground-state widths.  The Wigner function is
    ``C / (pi hbar)``; with internal units hbar = 1.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.p.size):
            raise ConfigurationError("value matrix does not match the axes")
        for axis in (self.x, self.p):
            if axis.size > 1 and not (np.all(np.diff(axis) > 0) or np.all(np.diff(axis) < 0)):
                raise ConfigurationError("axes must be strictly monotone")

    @property
    def wigner(self) -> np.ndarray:
        return self.values / np.pi

    def rows(self):
        for i, xv in enumerate(self.x):
            for j, pv in enumerate(self.p):
                yield xv, pv, self.values[i, j]


def measure_wigner_points(wf: WaveFunction, xs, ps, template: SequenceSpec) -> np.ndarray:
    """Batched :func:`measure_wigner_point` over paired coordinate arrays."""
    xs, ps = np.asarray(xs, float), np.asarray(ps, float)
    batch = np.broadcast_to(wf.psi, (xs.size, wf.grid.n_points))
    values = run_batch(batch, template, xs, ps).w
    if np.any(np.abs(values) > 1 + 1e-6):
        raise NumericalError("signed contrast violates |C| <= 1")
    return values


def _scan_block(args):
    psi, points, template, batch_size = args
    wf = WaveFunction(template.grid, psi)
    out = []
    for start in range(0, len(points), batch_size):
        chunk = points[start:start + batch_size]
        xs = [x for _, x, _ in chunk]
        ps = [p for _, _, p in chunk]
        try:
            values = measure_wigner_points(wf, xs, ps, template)
            out.extend((index, float(v), None) for (index, _, _), v in zip(chunk, values))
        except Exception:
            # retry point by point so that one bad point does not sink the batch
            for index, x, p in chunk:
                try:
                    out.append((index, measure_wigner_point(wf, x, p, template), None))
                except Exception as exc:  # recorded per point, the scan carries on
                    out.append((index, np.nan, f"{type(exc).__name__}: {exc}"))
    return out


def _blocks(items, n_blocks):
    """Static contiguous partition, independent of scheduling."""
    n_blocks = max(1, min(n_blocks, len(items)))
    bounds = np.linspace(0, len(items), n_blocks + 1).astype(int)
    return [items[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def scan_wigner(wf: WaveFunction, x_list, p_list, template: SequenceSpec, jobs: int = 1,
                batch_size: int = 32) -> WignerGrid:
    """Independent point measurements over the product grid ``x_list x p_list``.

    Points are dealt out in fixed contiguous blocks and gathered by index, so
    the result does not depend on ``jobs``.  Failed points are stored as NaN
    with their error message in ``metadata["errors"]``.
    """
    x_list, p_list = np.asarray(x_list, float), np.asarray(p_list, float)
    limit = 4.0
    if np.max(np.abs(x_list), initial=0) > limit or np.max(np.abs(p_list), initial=0) > limit:
        log.warning("scan extends beyond ~4 ground-state widths; the atom may leave the trap site")
    points = [((i, j), x, p) for i, x in enumerate(x_list) for j, p in enumerate(p_list)]
    started = time.perf_counter()
    tasks = [(wf.psi, block, template, batch_size) for block in _blocks(points, jobs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for chunk in pool.map(_scan_block, tasks) for r in chunk]
    else:
        results = [r for task in tasks for r in _scan_block(task)]
    values = np.full((x_list.size, p_list.size), np.nan)
    errors = {}
    for (i, j), value, err in results:
        values[i, j] = value
        if err:
            errors[f"{x_list[i]:g},{p_list[j]:g}"] = err
    meta = {
        "unit_convention": "contrast C = pi*hbar*W; axes in dx0, dp0",
        "t_hold": template.schedule.t_hold,
        "phi0": template.phi0,
        "errors": errors,
        "wall_clock_s": time.perf_counter() - started,
    }
    return WignerGrid(x_list, p_list, values, meta)


def parity_scan(states, template: SequenceSpec) -> list[tuple[int, float, float]]:
    """Readout at the origin for each Fock state: list of (n, w, leakage)."""
    spec = template.displaced(0.0, 0.0)
    result = run_batch(np.stack([s.psi for s in states]), spec)
    return [(n, float(result.w[n]), float(result.leakage[n])) for n in range(len(states))]


def default_jobs() -> int:
    return os.cpu_count() or 1
