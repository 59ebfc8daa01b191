import numpy as np
import pytest

from conftest import coherent_parity
from ramsey_wigner import core
from ramsey_wigner.errors import ConfigurationError, DomainError
from ramsey_wigner.ramsey import WignerGrid
from ramsey_wigner.units import GroundStateScales
from ramsey_wigner.wigner import (
    TruncationError,
    compare,
    phase_space_integrals,
    wigner_parity_sum,
    wigner_parity_sum_grid,
    wigner_transform,
)


def gaussian(grid, sigma, x0=0.0, p0=0.0):
    psi = np.exp(-((grid.x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * grid.x)
    return core.WaveFunction(grid, psi).normalized()


@pytest.fixture(scope="module")
def scales(harmonic):
    return GroundStateScales(harmonic.omega)


@pytest.mark.parametrize("x0, p0", [(0.0, 0.0), (0.2, -3.0), (-0.4, 5.0)])
def test_gaussian_matches_closed_form(lattice_grid, x0, p0):
    sigma = 0.25
    xs, ps = np.linspace(-0.8, 0.8, 9), np.linspace(-8, 8, 11)
    result = wigner_transform(gaussian(lattice_grid, sigma, x0, p0), xs, ps).grid
    X, Pm = np.meshgrid(xs, ps, indexing="ij")
    expected = np.exp(-((X - x0) ** 2) / (2 * sigma**2) - 2 * sigma**2 * (Pm - p0) ** 2)
    assert np.max(np.abs(result.values - expected)) < 1e-6


def test_first_excited_state_is_negative_at_origin(harmonic_states):
    value = wigner_transform(harmonic_states[1][1], [0.0], [0.0]).grid.values[0, 0]
    assert value == pytest.approx(-1.0, abs=1e-6)


def test_position_marginal(lattice_grid, lattice_states):
    wf = core.WaveFunction(lattice_grid, (lattice_states[0][1].psi + 1j * lattice_states[1][1].psi) / np.sqrt(2))
    idx = np.arange(lattice_grid.n_points // 2 - 40, lattice_grid.n_points // 2 + 41, 10)
    xs = lattice_grid.x[idx]
    ps = np.linspace(-60, 60, 2401)
    c = wigner_transform(wf, xs, ps).grid.values
    marginal = np.trapezoid(c / np.pi, ps, axis=1)
    assert np.max(np.abs(marginal - np.abs(wf.psi[idx]) ** 2)) < 1e-6


def test_momentum_marginal(lattice_grid):
    wf = gaussian(lattice_grid, 0.3, 0.1, 2.0)
    xs = np.linspace(-2.5, 2.5, 1001)
    ps = np.array([0.0, 2.0, 3.5])
    c = wigner_transform(wf, xs, ps).grid.values
    marginal = np.trapezoid(c / np.pi, xs, axis=0)
    sigma_p = 1 / (2 * 0.3)
    expected = np.exp(-((ps - 2.0) ** 2) / (2 * sigma_p**2)) / np.sqrt(2 * np.pi * sigma_p**2)
    assert np.max(np.abs(marginal - expected)) < 1e-6


def test_transform_rejects_out_of_range_requests(lattice_grid):
    wf = gaussian(lattice_grid, 0.3)
    with pytest.raises(DomainError):
        wigner_transform(wf, [0.0], [np.pi / lattice_grid.dx])
    with pytest.raises(DomainError):
        wigner_transform(wf, [lattice_grid.length], [0.0])


# parity sum -------------------------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1])
def test_two_oracles_agree(harmonic_states, scales, n):
    basis = [wf for _, wf in harmonic_states]
    axis = np.linspace(-1.5, 1.5, 5)
    a = wigner_transform(harmonic_states[n][1], axis, axis, scales).grid
    b = wigner_parity_sum_grid(harmonic_states[n][1], axis, axis, basis, scales=scales).grid
    assert np.max(np.abs(a.values - b.values)) < 1e-4


def test_parity_sum_two_widths_out(harmonic_states, scales):
    basis = [wf for _, wf in harmonic_states]
    value, captured = wigner_parity_sum(harmonic_states[0][1], 2 * scales.dx0, 0.0, basis)
    assert value == pytest.approx(coherent_parity(1.0), abs=1e-6)
    assert value == pytest.approx(np.exp(-2), abs=1e-6)
    assert captured > 1 - 1e-4


def test_parity_sum_truncation_detected(harmonic_states, scales):
    basis = [wf for _, wf in harmonic_states]
    with pytest.raises(TruncationError):
        wigner_parity_sum(harmonic_states[0][1], 3 * scales.dx0, 0.0, basis, n_max=2)


def test_parity_sum_rejects_short_basis(harmonic_states):
    with pytest.raises(ConfigurationError):
        wigner_parity_sum(harmonic_states[0][1], 0.0, 0.0, [harmonic_states[0][1]], n_max=3)


# comparison and integrals ---------------------------------------------------------------

def test_compare_constant_offset():
    axis = np.linspace(-1, 1, 4)
    values = np.random.default_rng(3).uniform(-1, 1, (4, 4))
    metrics = compare(WignerGrid(axis, axis, values), WignerGrid(axis, axis, values + 0.01))
    assert metrics["max_abs"] == pytest.approx(0.01)
    assert metrics["rms"] == pytest.approx(0.01)
    assert metrics["n_points"] == 16


def test_compare_ignores_missing_points():
    axis = np.linspace(-1, 1, 2)
    a = WignerGrid(axis, axis, np.array([[1.0, np.nan], [0.0, 0.0]]))
    metrics = compare(a, WignerGrid(axis, axis, np.zeros((2, 2))))
    assert metrics["n_missing"] == 1 and metrics["max_abs"] == 1.0


def test_compare_rejects_different_axes():
    a = WignerGrid([0, 1], [0, 1], np.zeros((2, 2)))
    b = WignerGrid([0, 2], [0, 1], np.zeros((2, 2)))
    with pytest.raises(ConfigurationError):
        compare(a, b)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_normalisation_and_purity(harmonic_states, scales, n):
    axis = np.linspace(-8, 8, 129)
    result = wigner_transform(harmonic_states[n][1], axis, axis, scales).grid
    integrals = phase_space_integrals(result, scales)
    assert integrals["norm"] == pytest.approx(1.0, abs=1e-6)
    assert integrals["purity"] == pytest.approx(1 / (2 * np.pi), abs=1e-6)
