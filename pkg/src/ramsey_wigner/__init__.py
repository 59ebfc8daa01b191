"""Direct measurement of a trapped atom's Wigner function by Ramsey interferometry.

Modules
-------
units        physical <-> internal unit conversion (hbar = m = 1, length 1/k)
core         grids, wavefunctions, transforms, parity, displacement, eigenstates
potentials   trap models, analytic spectra, depth schedules, trap trajectories
propagator   Strang split-step evolution in moving spin-dependent traps
ramsey       the parity protocol, point measurements and phase-space scans
wigner       reference Wigner functions and comparison metrics
calibration  hold-time calibration from thermal contrast collapse
cli          command-line batch runner
"""
from .core import Grid, SpinorState, WaveFunction
from .errors import CalibrationError, ConfigurationError, DomainError, NumericalError
from .potentials import Harmonic, Lattice, Tweezer
from .ramsey import SequenceSpec, WignerGrid
from .units import GroundStateScales, UnitSystem

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "WaveFunction",
    "SpinorState",
    "Harmonic",
    "Lattice",
    "Tweezer",
    "SequenceSpec",
    "WignerGrid",
    "UnitSystem",
    "GroundStateScales",
    "ConfigurationError",
    "NumericalError",
    "DomainError",
    "CalibrationError",
]
