import numpy as np
import pytest

from conftest import BASE, PEAKS, T_RAMP, T_SWITCH
from ramsey_wigner import core, potentials as P
from ramsey_wigner.errors import ConfigurationError, NumericalError
from ramsey_wigner.propagator import (
    EvolutionSpec,
    TrapPotential,
    evolve,
    evolve_spinor,
    leakage,
    propagate,
    static_potential,
    to_comoving,
)
from ramsey_wigner.units import GroundStateScales


def period(model):
    return 2 * np.pi / model.omega


def test_evolution_spec_validation():
    with pytest.raises(ConfigurationError):
        EvolutionSpec(0.0, 0.0, 1.0, static_potential(np.zeros(4)))
    with pytest.raises(ConfigurationError):
        EvolutionSpec(0.1, 1.0, 0.0, static_potential(np.zeros(4)))


def test_steps_cover_interval_with_partial_last_step():
    spec = EvolutionSpec(0.3, 0.0, 1.0, static_potential(np.zeros(4)))
    steps = spec.steps()
    assert sum(h for _, h in steps) == pytest.approx(1.0)
    assert steps[-1][1] == pytest.approx(0.1)
    assert steps[0][0] == pytest.approx(0.15)


def test_ground_state_is_stationary(harmonic, harmonic_states, small_grid):
    wf = harmonic_states[0][1]
    T = period(harmonic)
    out = evolve(wf, EvolutionSpec(T / 500, 0.0, T, static_potential(harmonic(small_grid.x))))
    assert out.fidelity(wf) > 1 - 1e-8


def test_coherent_state_oscillates(harmonic, harmonic_states, small_grid):
    x0 = 2 * GroundStateScales(harmonic.omega).dx0
    wf = core.displace_state(harmonic_states[0][1], x0, 0.0)
    T = period(harmonic)
    v = static_potential(harmonic(small_grid.x))
    times = np.linspace(0, 2 * T, 17)
    for t0, t1 in zip(times[:-1], times[1:]):
        wf = evolve(wf, EvolutionSpec(T / 500, t0, t1, v))
        mean_x, _, _ = core.expectations(wf, harmonic)
        assert mean_x == pytest.approx(x0 * np.cos(harmonic.omega * t1), abs=1e-4 * x0)


def _moving_problem(harmonic, small_grid, states):
    """Displaced Fock state in a ramped, moving trap: exercises every time dependence."""
    schedule = P.make_parity_schedule(0.1, 0.05, BASE, PEAKS, t_start=0.02)
    trajectory = P.make_displacement_trajectory(0.1, 3.0, 0.0, 0.05)
    trap = TrapPotential(harmonic, small_grid, schedule, trajectory)
    psi = np.stack([states[1][1].psi, states[2][1].psi])
    return psi, trap, schedule.t_end


def test_second_order_convergence(harmonic, small_grid, harmonic_states):
    psi, trap, t_end = _moving_problem(harmonic, small_grid, harmonic_states)
    dt0 = period(harmonic) / 40
    ref = propagate(psi, small_grid, EvolutionSpec(dt0 / 8, 0.0, t_end, trap))
    errs = [
        np.linalg.norm(propagate(psi, small_grid, EvolutionSpec(h, 0.0, t_end, trap)) - ref)
        for h in (dt0, dt0 / 2)
    ]
    exponent = np.log2(errs[0] / errs[1])
    assert 1.8 <= exponent <= 2.2


def test_norm_preserved_per_step(harmonic, small_grid, harmonic_states):
    psi, trap, t_end = _moving_problem(harmonic, small_grid, harmonic_states)
    spec = EvolutionSpec(period(harmonic) / 500, 0.0, t_end, trap)
    out = propagate(psi, small_grid, spec)
    drift = np.max(np.abs(np.sum(np.abs(out) ** 2, axis=-1) - np.sum(np.abs(psi) ** 2, axis=-1))) * small_grid.dx
    assert drift / len(spec.steps()) < 1e-13


def _energy_track(lattice, grid, states, steps_per_period, samples=81):
    wf = core.displace_state(states[0][1], 0.1, 2.0)
    v = static_potential(lattice(grid.x))
    T = period(lattice)
    times = np.linspace(0, 10 * T, samples)
    energies = [core.expectations(wf, lattice)[2]]
    for t0, t1 in zip(times[:-1], times[1:]):
        wf = evolve(wf, EvolutionSpec(T / steps_per_period, t0, t1, v))
        energies.append(core.expectations(wf, lattice)[2])
    return times, np.array(energies)


def test_energy_has_no_secular_drift(lattice, lattice_grid, lattice_states):
    times, energies = _energy_track(lattice, lattice_grid, lattice_states, 500)
    trend = np.polyfit(times, energies, 1)[0] * (times[-1] - times[0])
    assert abs(trend) < 1e-6 * lattice.omega


def test_energy_excursion_is_bounded_splitting_error(lattice, lattice_grid, lattice_states):
    coarse = np.ptp(_energy_track(lattice, lattice_grid, lattice_states, 500, 21)[1])
    fine = np.ptp(_energy_track(lattice, lattice_grid, lattice_states, 1000, 21)[1])
    assert coarse < 1e-5 * lattice.omega
    assert coarse / fine == pytest.approx(4.0, rel=0.05)


def test_non_finite_amplitudes_raise(small_grid):
    psi = np.ones(small_grid.n_points, dtype=complex)
    psi[3] = np.nan
    with pytest.raises(NumericalError):
        propagate(psi, small_grid, EvolutionSpec(0.1, 0.0, 0.3, static_potential(np.zeros(small_grid.n_points))))


# spinor evolution ------------------------------------------------------------------

def test_equal_depths_keep_components_identical(lattice, lattice_grid, lattice_states):
    schedule = P.make_parity_schedule(0.2, 0.1, BASE, (PEAKS[0], PEAKS[0]))
    trap = TrapPotential(lattice, lattice_grid, schedule)
    wf = core.displace_state(lattice_states[1][1], 0.05, 1.0)
    state = core.SpinorState(lattice_grid, np.stack([wf.psi, wf.psi]) / np.sqrt(2))
    out = evolve_spinor(state, EvolutionSpec(period(lattice) / 500, 0.0, schedule.t_end, trap))
    assert np.max(np.abs(out.psi[0] - out.psi[1])) < 1e-10


def test_spin_populations_conserved(lattice, lattice_grid, lattice_states):
    schedule = P.make_parity_schedule(0.2, 0.1, BASE, PEAKS)
    trap = TrapPotential(lattice, lattice_grid, schedule)
    psi = np.stack([0.6 * lattice_states[0][1].psi, 0.8 * lattice_states[3][1].psi])
    state = core.SpinorState(lattice_grid, psi)
    out = evolve_spinor(state, EvolutionSpec(period(lattice) / 500, 0.0, schedule.t_end, trap))
    assert out.populations() == pytest.approx(state.populations(), abs=1e-12)


def test_evolve_spinor_requires_spin_axis(lattice_grid, lattice_states):
    state = core.SpinorState.spin_down(lattice_states[0][1])
    with pytest.raises(ConfigurationError):
        evolve_spinor(state, EvolutionSpec(0.1, 0.0, 0.2, static_potential(np.zeros(lattice_grid.n_points))))


def _relative_phase(out, dx):
    return np.angle(np.sum(np.conj(out[..., 0, :]) * out[..., 1, :], axis=-1) * dx)


def test_fock_one_acquires_pi_relative_to_ground(harmonic, small_grid):
    # each spin component starts in the eigenstate of its own (constant) trap
    up, down = harmonic.with_depth(PEAKS[0]), harmonic.with_depth(PEAKS[1])
    hold = np.pi / (up.omega - down.omega)
    pots = np.stack([up(small_grid.x), down(small_grid.x)])
    start = np.stack([
        np.stack([P.stationary_states(m, small_grid, 2)[n][1].psi for m in (up, down)]) for n in (0, 1)
    ])
    out = propagate(start, small_grid, EvolutionSpec(period(up) / 500, 0.0, hold, static_potential(pots)))
    # phase acquired by each component: arg <psi(0)|psi(t)> = -E t
    acquired = np.angle(np.sum(np.conj(start) * out, axis=-1))
    relative = acquired[:, 0] - acquired[:, 1]
    diff = np.angle(np.exp(1j * (relative[1] - relative[0])))
    assert abs(abs(diff) - np.pi) < 1e-3


def test_phi0_matches_propagated_ground_state_phase(lattice, lattice_grid, lattice_states):
    schedule = P.make_parity_schedule(T_RAMP, 1.5, BASE, PEAKS)
    trap = TrapPotential(lattice, lattice_grid, schedule)
    psi = np.stack([lattice_states[0][1].psi] * 2) / np.sqrt(2)
    out = propagate(psi, lattice_grid, EvolutionSpec(period(lattice) / 500, 0.0, schedule.t_end, trap))
    measured = _relative_phase(out, lattice_grid.dx)
    expected = P.phi0_integral(schedule, lattice, lattice_grid)
    assert abs(np.angle(np.exp(1j * (measured - expected)))) < 1e-3


# frames -------------------------------------------------------------------------------

def test_comoving_identity_and_norm(lattice_states):
    wf = lattice_states[2][1]
    assert np.array_equal(to_comoving(wf, 0.0, 0.0).psi, wf.psi)
    assert to_comoving(wf, 0.3, 4.0).norm() == pytest.approx(1.0, abs=1e-12)


def test_sudden_shift_is_inverse_displacement(harmonic, small_grid, harmonic_states):
    s = GroundStateScales(harmonic.omega)
    x, p = 1.5 * s.dx0, -1.0 * s.dp0
    t_switch = period(harmonic) * 1e-3
    traj = P.make_displacement_trajectory(x, p, 0.0, t_switch)
    trap = TrapPotential(harmonic, small_grid, trajectory=traj)
    wf = harmonic_states[0][1]
    psi = propagate(wf.psi, small_grid, EvolutionSpec(t_switch / 20, 0.0, t_switch, lambda t: trap(t)[0]))
    seen = to_comoving(core.WaveFunction(small_grid, psi), float(traj.center(t_switch)), float(traj.speed(t_switch)))
    assert seen.fidelity(core.displace_state(wf, -x, -p)) > 0.999


@pytest.mark.parametrize("n", range(6))
def test_equivalence_principle_for_finite_switch(harmonic, small_grid, harmonic_states, n):
    """Trap shifted over 300 ns then viewed co-moving = analytically displaced, rotated Fock state."""
    s = GroundStateScales(harmonic.omega)
    x, p = 1.5 * s.dx0, 1.5 * s.dp0
    traj = P.make_displacement_trajectory(x, p, 0.0, T_SWITCH)
    trap = TrapPotential(harmonic, small_grid, trajectory=traj)
    t_end = T_SWITCH + 0.3 * period(harmonic)
    wf = harmonic_states[n][1]
    psi = propagate(wf.psi, small_grid, EvolutionSpec(period(harmonic) / 500, 0.0, t_end, lambda t: trap(t)[0]))
    seen = to_comoving(core.WaveFunction(small_grid, psi), float(traj.center(t_end)), float(traj.speed(t_end)))
    # an ideal kick at the switch midpoint, then free rotation in the trap's phase space
    tau = harmonic.omega * (t_end - T_SWITCH / 2)
    x0, p0 = -x, -p
    xr = x0 * np.cos(tau) + p0 / harmonic.omega * np.sin(tau)
    pr = p0 * np.cos(tau) - harmonic.omega * x0 * np.sin(tau)
    assert seen.fidelity(core.displace_state(wf, xr, pr)) > 0.995


def test_leakage_counts_outside_site(lattice_grid, lattice_states):
    wf = lattice_states[0][1]
    assert leakage(wf.psi, lattice_grid, 0.0, np.pi / 2) < 1e-10
    moved = core.displace_state(wf, np.pi, 0.0)
    assert leakage(moved.psi, lattice_grid, 0.0, np.pi / 2) > 1 - 1e-10
    assert leakage(moved.psi, lattice_grid, np.pi, np.pi / 2) < 1e-10
