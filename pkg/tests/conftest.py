import numpy as np
import pytest

from ramsey_wigner import core, potentials, ramsey
from ramsey_wigner.units import UnitSystem

UNITS = UnitSystem()
BASE = UNITS.temperature(18e-6)
PEAKS = (UNITS.temperature(27e-6), UNITS.temperature(22e-6))
T_RAMP = UNITS.time(15e-6)
T_SWITCH = UNITS.time(300e-9)


@pytest.fixture(scope="session")
def units():
    return UNITS


@pytest.fixture(scope="session")
def lattice_grid():
    return core.Grid.for_lattice()


@pytest.fixture(scope="session")
def small_grid():
    """Coarser grid (4 sites, 256 points) that still resolves the low harmonic levels."""
    return core.Grid.for_lattice(256)


@pytest.fixture(scope="session")
def lattice():
    return potentials.Lattice(BASE)


@pytest.fixture(scope="session")
def harmonic():
    return potentials.Harmonic.like_lattice(BASE)


def build_spec(model, grid, method="spectral", peaks=PEAKS, **kwargs):
    spec = ramsey.SequenceSpec.build(model, grid, peaks, T_RAMP, 0.0, T_SWITCH, **kwargs)
    hold = potentials.hold_for_phase(spec.schedule, model, grid, method=method)
    return spec.with_hold(hold)


@pytest.fixture(scope="session")
def harmonic_spec(harmonic, small_grid):
    return build_spec(harmonic, small_grid, method="harmonic")


@pytest.fixture(scope="session")
def lattice_spec(lattice, lattice_grid):
    return build_spec(lattice, lattice_grid)


@pytest.fixture(scope="session")
def harmonic_states(harmonic, small_grid):
    return potentials.stationary_states(harmonic, small_grid, 12)


@pytest.fixture(scope="session")
def lattice_states(lattice, lattice_grid):
    return potentials.stationary_states(lattice, lattice_grid, 10)


def coherent_parity(alpha2):
    """Alternating Poisson sum sum_n (-1)^n e^{-|a|^2} |a|^{2n}/n!, summed term by term."""
    total, term = 0.0, np.exp(-alpha2)
    for n in range(200):
        total += (-1) ** n * term
        term *= alpha2 / (n + 1)
    return total
