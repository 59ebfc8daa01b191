import numpy as np
import pytest

from conftest import BASE, PEAKS, build_spec
from ramsey_wigner import calibration as cal, potentials as P
from ramsey_wigner.errors import CalibrationError, ConfigurationError


# thermal weights -------------------------------------------------------------------

def test_weights_example():
    assert cal.thermal_weights(0.5, 2) == pytest.approx([4 / 7, 2 / 7, 1 / 7])


def test_pure_ground_state_weights():
    assert np.array_equal(cal.thermal_weights(1.0, 4), [1.0, 0, 0, 0, 0])


@pytest.mark.parametrize("p0", [0.0, -0.1, 1.5])
def test_invalid_ground_fraction(p0):
    with pytest.raises(ConfigurationError):
        cal.ThermalEnsemble(p0, 5)


def test_mean_occupation_of_long_tail():
    assert cal.ThermalEnsemble(0.4, 200).mean_occupation == pytest.approx(0.6 / 0.4, rel=1e-10)


def test_ideal_contrast():
    ens = cal.ThermalEnsemble(0.5, 200)
    assert cal.ideal_contrast(ens, 0.0) == pytest.approx(1.0)
    # |sum p0 (p0 - 1)^n| = p0 / (2 - p0)
    assert cal.ideal_contrast(ens, np.pi) == pytest.approx(1 / 3, rel=1e-10)


# fringe fitting ------------------------------------------------------------------------

def test_fit_recovers_fringe():
    phases = 2 * np.pi * np.arange(16) / 16
    amp, phi, offset = cal.fit_fringe(phases, 0.1 + 0.7 * np.cos(phases - 0.4))
    assert (amp, phi, offset) == pytest.approx((0.7, 0.4, 0.1), abs=1e-12)


# collapse detection -----------------------------------------------------------------------

@pytest.mark.parametrize("omega", [1.0, 2.3, 4.0])
def test_synthetic_collapse(omega):
    t = np.linspace(0, 1.6 * np.pi / omega, 23)
    c = np.abs(np.cos(omega * t / 2))
    assert cal.find_collapse(c, t) == pytest.approx(np.pi / omega, abs=t[1] - t[0])


def test_flat_curve_raises():
    with pytest.raises(CalibrationError):
        cal.find_collapse(np.ones(10), np.arange(10.0))


def test_monotone_curve_raises():
    with pytest.raises(CalibrationError):
        cal.find_collapse(np.linspace(1, 0.2, 10), np.arange(10.0))


def test_too_few_samples_raise():
    with pytest.raises(CalibrationError):
        cal.find_collapse(np.array([1.0, 0.5]), np.array([0.0, 1.0]))


def test_revival_after_collapse():
    t = np.linspace(0, 10, 41)
    curve = cal.ContrastCurve(t, np.abs(np.cos(t / 2)), np.zeros_like(t), 0.5)
    t_rev, c_rev = cal.find_revival(curve, np.pi)
    assert t_rev == pytest.approx(2 * np.pi, abs=0.25) and c_rev > 0.99


# simulated calibration ----------------------------------------------------------------

@pytest.fixture(scope="module")
def harmonic_fock(harmonic, small_grid):
    return [wf for _, wf in P.stationary_states(harmonic, small_grid, 10)]


def _holds(spec, span=1.6, points=17):
    expected = P.hold_for_phase(spec.schedule, spec.model, method="harmonic")
    return expected, np.linspace(0, span * expected, points)


def test_hold_times_validated(harmonic_spec, harmonic_fock):
    ens = cal.ThermalEnsemble(0.5, 3)
    with pytest.raises(ConfigurationError):
        cal.contrast_vs_hold(ens, [0.2, 0.1], harmonic_spec, harmonic_fock)
    with pytest.raises(ConfigurationError):
        cal.contrast_vs_hold(ens, [0.1, 0.2], harmonic_spec, harmonic_fock, n_phases=4)


def test_pure_ground_state_keeps_full_contrast(harmonic_spec, harmonic_fock):
    _, holds = _holds(harmonic_spec, points=5)
    curve = cal.contrast_vs_hold(cal.ThermalEnsemble(1.0, 3), holds, harmonic_spec, harmonic_fock)
    assert np.all(np.abs(curve.contrast - 1) < 2e-2)
    assert np.all(np.abs(np.angle(np.exp(1j * curve.fringe_phase[-1:]))) < 1e-2)


def test_harmonic_collapse_at_parity_hold(harmonic_spec, harmonic_fock):
    expected, holds = _holds(harmonic_spec)
    result = cal.calibrate(harmonic_spec, cal.ThermalEnsemble(0.5, 9), holds, harmonic_fock)
    assert result.t_hold == pytest.approx(expected, rel=2e-2)
    phase = P.differential_frequency_phase(result.spec.schedule, harmonic_spec.model)
    assert phase == pytest.approx(np.pi, rel=2e-2)
    assert np.nanmin(result.curve.contrast) == pytest.approx(1 / 3, abs=0.05)


def test_contrast_follows_ideal_dephasing(harmonic_spec, harmonic_fock):
    ens = cal.ThermalEnsemble(0.5, 9)
    _, holds = _holds(harmonic_spec, points=6)
    curve = cal.contrast_vs_hold(ens, holds, harmonic_spec, harmonic_fock)
    for hold, c in zip(holds, curve.contrast):
        phase = P.differential_frequency_phase(harmonic_spec.schedule.with_hold(hold), harmonic_spec.model)
        assert c == pytest.approx(cal.ideal_contrast(ens, phase), abs=2e-2)


def test_larger_imbalance_collapses_sooner(harmonic, small_grid, harmonic_fock):
    ens = cal.ThermalEnsemble(0.5, 9)
    times = []
    for peaks in (PEAKS, (PEAKS[0], 0.5 * (BASE + PEAKS[1]))):
        spec = build_spec(harmonic, small_grid, "harmonic", peaks)
        holds = np.linspace(0, 1.6 * spec.schedule.t_hold, 17)
        times.append(cal.calibrate(spec, ens, holds, harmonic_fock).t_hold)
    assert times[1] < times[0]


def test_collapse_independent_of_displacement(harmonic_spec, harmonic_fock):
    ens = cal.ThermalEnsemble(0.5, 9)
    _, holds = _holds(harmonic_spec)
    here = cal.calibrate(harmonic_spec, ens, holds, harmonic_fock).t_hold
    there = cal.calibrate(harmonic_spec.displaced(1.0, -1.0), ens, holds, harmonic_fock).t_hold
    assert there == pytest.approx(here, rel=1e-2)


def test_balanced_depths_cannot_calibrate(harmonic, small_grid, harmonic_fock):
    from ramsey_wigner.ramsey import SequenceSpec
    spec = SequenceSpec.build(harmonic, small_grid, (PEAKS[0], PEAKS[0]), 0.3, 0.0, 0.01)
    with pytest.raises(CalibrationError):
        cal.calibrate(spec, cal.ThermalEnsemble(0.5, 5), np.linspace(0, 2, 6), harmonic_fock)


def test_single_state_contrast_is_one(harmonic_spec, harmonic_fock):
    assert cal.single_state_contrast(harmonic_fock[2], harmonic_spec) == pytest.approx(1.0, abs=1e-3)
