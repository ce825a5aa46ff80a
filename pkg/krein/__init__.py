"""
Krein String Toolkit
Krein strings, their characteristics psi and profiles phi, harmonic
extensions, non-local spectra and nodal counts.
"""

from .errors import (
    KreinError, DomainError, InvalidCoefficientError, NotRepresentableError, AccuracyError,
    NumericalError, InputError
)
from .string_core import (
    DensitySegment, Atom, KreinString, CoefficientA, make_string, cumulative_mass,
    from_coefficient_a, to_coefficient_a, complementary, shift_string
)
from .ode_engine import psi, psi_at_zero, phi, phi_mass_integral, phi_energy, solve_fundamental

__version__ = "1.0.0"
