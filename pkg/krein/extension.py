"""
Krein String Toolkit - Harmonic Extension
Harmonic extension, the Dirichlet-to-Neumann operator psi(-Laplacian) and
the boundary and half-space quadratic forms on a periodic 1-d grid.
"""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from utils.constants import (
    MIN_GRID_POINTS, MAX_GRID_POINTS, DEFAULT_LEVEL_COUNT, DEFAULT_S_SCALE, FIRST_LEVEL_FACTOR,
    MIN_LEVELS, PSI_TOL, FLOAT_FORMAT
)
from . import ode_engine
from .errors import DomainError, InputError
from .parallel import parallel_map
from .string_core import KreinString, is_positive_lipschitz

logger = logging.getLogger(__name__)


# =============================================================================
# GRID TYPES
# =============================================================================

def validate_grid(n: int, half_length: float) -> Tuple[bool, str]:
    """
    Validate periodic grid parameters

    Args:
        n: Number of points
        half_length: X, the grid covers [-X, X)

    Returns:
        Tuple of (is_valid, error_message)
    """
    if n < MIN_GRID_POINTS or n > MAX_GRID_POINTS:
        return False, f"Grid size must lie in [{MIN_GRID_POINTS}, {MAX_GRID_POINTS}], got {n}"
    if n & (n - 1):
        return False, f"Grid size must be a power of two, got {n}"
    if not (half_length > 0.0 and math.isfinite(half_length)):
        return False, f"Half length must be positive and finite, got {half_length}"
    return True, ""


def grid_points(n: int, half_length: float) -> np.ndarray:
    return np.linspace(-half_length, half_length, n, endpoint=False)


def grid_frequencies(n: int, half_length: float) -> np.ndarray:
    """xi_k = pi k / X in FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * half_length / n)


@dataclass(frozen=True)
class GridFunction:
    """Real samples on the periodic grid [-X, X) with spacing 2X/n."""
    n: int
    half_length: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        is_valid, message = validate_grid(self.n, self.half_length)
        if not is_valid:
            raise DomainError(message)
        if self.values.shape != (self.n,):
            raise DomainError(f"Expected {self.n} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Grid function values must be finite")

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], n: int, half_length: float) -> "GridFunction":
        return cls(n, half_length, fn(grid_points(n, half_length)))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.n, self.half_length)

    @property
    def frequencies(self) -> np.ndarray:
        return grid_frequencies(self.n, self.half_length)

    def coefficients(self) -> np.ndarray:
        """Fourier coefficients normalised so that sum |c|^2 = dx * sum f^2."""
        return np.fft.fft(self.values, norm="ortho") * math.sqrt(self.spacing)

    def inner(self, other: "GridFunction") -> float:
        return float(self.spacing * np.dot(self.values, other.values))

    def norm(self) -> float:
        return math.sqrt(self.inner(self))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.n, self.half_length, values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "value": self.values})


@dataclass(frozen=True)
class HalfSpaceField:
    """Values u(s_j, x_k) on s-levels times the periodic x-grid; row 0 is the trace at s = 0."""
    s_levels: np.ndarray
    n: int
    half_length: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s_levels", np.asarray(self.s_levels, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        is_valid, message = validate_levels(self.s_levels)
        if not is_valid:
            raise DomainError(message)
        if self.values.shape != (self.s_levels.size, self.n):
            raise DomainError(f"Field shape {self.values.shape} does not match "
                              f"{self.s_levels.size} levels x {self.n} points")

    @property
    def boundary(self) -> GridFunction:
        return GridFunction(self.n, self.half_length, self.values[0])

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.n, self.half_length)

    def level(self, j: int) -> GridFunction:
        return GridFunction(self.n, self.half_length, self.values[j])

    def __add__(self, other: "HalfSpaceField") -> "HalfSpaceField":
        if not np.array_equal(self.s_levels, other.s_levels) or self.n != other.n:
            raise DomainError("Fields live on different grids")
        return HalfSpaceField(self.s_levels, self.n, self.half_length, self.values + other.values)

    def to_frame(self) -> pd.DataFrame:
        """x in the first column, one column per s-level headed by its knot."""
        columns = {"x": self.x}
        for s, row in zip(self.s_levels, self.values):
            columns[FLOAT_FORMAT % s] = row
        return pd.DataFrame(columns)


def validate_levels(s_levels: Sequence[float], length: float = math.inf) -> Tuple[bool, str]:
    levels = np.asarray(s_levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0:
        return False, "At least one s-level is required"
    if levels[0] != 0.0:
        return False, "s-levels must start at 0"
    if np.any(np.diff(levels) <= 0.0):
        return False, "s-levels must be strictly increasing"
    if not np.all(np.isfinite(levels)) or levels[-1] >= length:
        return False, f"s-levels must lie in [0, R) with R = {length}"
    return True, ""


def default_levels(s_scale: float = DEFAULT_S_SCALE, count: int = DEFAULT_LEVEL_COUNT,
                   length: float = math.inf) -> np.ndarray:
    """
    0 followed by geometric knots from FIRST_LEVEL_FACTOR * s_scale to s_scale

    Args:
        s_scale: Deepest level, clipped below R for finite strings
        count: Number of levels including 0
        length: R of the string

    Returns:
        Increasing level array
    """
    if count < MIN_LEVELS:
        raise DomainError(f"At least {MIN_LEVELS} levels are required, got {count}")
    if math.isfinite(length):
        s_scale = min(s_scale, length * (1.0 - 1e-6))
    return np.concatenate(([0.0], np.geomspace(FIRST_LEVEL_FACTOR * s_scale, s_scale, count - 1)))


# =============================================================================
# MULTIPLIERS
# =============================================================================

class Multiplier:
    """A source of psi values on the frequency set."""
    label = "multiplier"
    string: Optional[KreinString] = None

    def psi_values(self, lams: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def lipschitz_positive(self) -> bool:
        return True

    def on_grid(self, n: int, half_length: float) -> np.ndarray:
        """psi(xi^2) in FFT order; the xi and -xi modes share one evaluation."""
        xi = grid_frequencies(n, half_length)
        lams = xi * xi
        unique, inverse = np.unique(lams, return_inverse=True)
        return self.psi_values(unique)[inverse]


class IdentityMultiplier(Multiplier):
    """psi(lambda) = lambda, the Laplacian itself."""
    label = "identity"

    def psi_values(self, lams: np.ndarray) -> np.ndarray:
        return np.asarray(lams, dtype=float).copy()


class ClosedFormMultiplier(Multiplier):
    def __init__(self, fn: Callable[[float], float], label: str = "closed_form", psi_zero: float = 0.0,
                 string: Optional[KreinString] = None, lipschitz_positive: bool = True):
        self.fn = fn
        self.label = label
        self.psi_zero = psi_zero
        self.string = string
        self._lipschitz = lipschitz_positive

    @property
    def lipschitz_positive(self) -> bool:
        return self._lipschitz

    def psi_values(self, lams: np.ndarray) -> np.ndarray:
        return np.array([self.psi_zero if lam == 0.0 else self.fn(float(lam)) for lam in lams])


def _psi_of(string: KreinString, tol: float, lam: float) -> float:
    return ode_engine.psi(string, lam, tol)


class StringMultiplier(Multiplier):
    """psi computed from a string; values are cached per lambda."""
    label = "string"

    def __init__(self, string: KreinString, tol: float = PSI_TOL, processes: Optional[int] = None):
        self.string = string
        self.tol = tol
        self.processes = processes
        self._cache: Dict[float, float] = {0.0: ode_engine.psi_at_zero(string)}

    @property
    def lipschitz_positive(self) -> bool:
        return is_positive_lipschitz(self.string)

    def psi_values(self, lams: np.ndarray) -> np.ndarray:
        missing = sorted({float(lam) for lam in lams} - set(self._cache))
        if missing:
            logger.debug("string multiplier: %d new psi solves", len(missing))
            values = parallel_map(partial(_psi_of, self.string, self.tol), missing, self.processes)
            self._cache.update(zip(missing, values))
        return np.array([self._cache[float(lam)] for lam in lams])


MultiplierSource = Union[Multiplier, KreinString, str, Callable[[float], float], object]


def as_multiplier(source: MultiplierSource) -> Multiplier:
    """
    Normalise a psi source

    Args:
        source: Multiplier, KreinString, catalog entry, callable psi, or "identity"

    Returns:
        Multiplier
    """
    if isinstance(source, Multiplier):
        return source
    if isinstance(source, KreinString):
        return StringMultiplier(source)
    if isinstance(source, str):
        if source == "identity":
            return IdentityMultiplier()
        raise InputError(f"Unknown multiplier '{source}'")
    if hasattr(source, "psi") and hasattr(source, "string"):
        return ClosedFormMultiplier(source.psi, source.name, ode_engine.psi_at_zero(source.string),
                                    source.string, source.lipschitz_positive)
    if callable(source):
        return ClosedFormMultiplier(source)
    raise InputError(f"Cannot use {type(source).__name__} as a multiplier")


# =============================================================================
# EXTENSION AND FORMS
# =============================================================================

def _phi_column(string: KreinString, s_levels: np.ndarray, tol: float, lam: float) -> np.ndarray:
    return ode_engine.phi(string, lam, s_levels, tol).phi


def extension_profiles(string: KreinString, n: int, half_length: float, s_levels: Sequence[float],
                       tol: float = PSI_TOL, processes: Optional[int] = None) -> np.ndarray:
    """
    phi(xi^2, s_j) for every level and every frequency of the grid

    One phi profile is solved per distinct xi^2 and reused on every level.

    Args:
        string: The string
        n, half_length: Grid parameters
        s_levels: Increasing levels starting at 0, inside [0, R)
        tol: psi tolerance of the profile solves
        processes: Worker count for the profile solves

    Returns:
        (levels x n) array in FFT column order
    """
    levels = np.asarray(s_levels, dtype=float)
    is_valid, message = validate_levels(levels, string.length)
    if not is_valid:
        raise DomainError(message)
    xi = grid_frequencies(n, half_length)
    unique, inverse = np.unique(xi * xi, return_inverse=True)
    logger.debug("extension profiles: %d solves on %d levels", unique.size, levels.size)
    columns = parallel_map(partial(_phi_column, string, levels, tol), unique.tolist(), processes)
    return np.column_stack(columns)[:, inverse]


def harmonic_extension(string: KreinString, f: GridFunction, s_levels: Sequence[float],
                       tol: float = PSI_TOL, processes: Optional[int] = None,
                       profiles: Optional[np.ndarray] = None) -> HalfSpaceField:
    """
    Harmonic extension of boundary data into the half-space

    Each Fourier mode xi is multiplied by phi(xi^2, s).

    Args:
        string: The string
        f: Boundary data
        s_levels: Increasing levels starting at 0, inside [0, R)
        tol: psi tolerance of the profile solves
        processes: Worker count for the profile solves
        profiles: Output of extension_profiles for the same grid and levels, to reuse

    Returns:
        HalfSpaceField whose row 0 is f
    """
    levels = np.asarray(s_levels, dtype=float)
    if profiles is None:
        profiles = extension_profiles(string, f.n, f.half_length, levels, tol, processes)
    elif profiles.shape != (levels.size, f.n):
        raise DomainError(f"Profile table of shape {profiles.shape} does not match the grid")

    spectrum = np.fft.fft(f.values)
    values = np.fft.ifft(profiles * spectrum[np.newaxis, :], axis=1).real
    values[0] = f.values
    return HalfSpaceField(levels, f.n, f.half_length, values)


def dtn_apply(source: MultiplierSource, f: GridFunction) -> GridFunction:
    """psi(-Laplacian) f; this is minus the s-derivative of ext(f) at s = 0."""
    multiplier = as_multiplier(source)
    weights = multiplier.on_grid(f.n, f.half_length)
    return f.with_values(np.fft.ifft(weights * np.fft.fft(f.values)).real)


def form_boundary(source: MultiplierSource, f: GridFunction) -> float:
    """Parseval sum of psi(xi^2) |f^(xi)|^2."""
    multiplier = as_multiplier(source)
    weights = multiplier.on_grid(f.n, f.half_length)
    return float(np.sum(weights * np.abs(f.coefficients()) ** 2))


def _level_masses(string: KreinString, levels: np.ndarray) -> np.ndarray:
    """Density mass between consecutive levels, atoms excluded."""
    masses = np.zeros(levels.size - 1)
    for seg in string.segments:
        lo = np.maximum(levels[:-1], seg.s_lo)
        hi = np.minimum(levels[1:], seg.s_hi)
        for j in np.nonzero(hi > lo)[0]:
            masses[j] += seg.mass(float(lo[j]), float(hi[j]))
    return masses


def cross_form(string: KreinString, u: HalfSpaceField, v: HalfSpaceField) -> float:
    """
    Bilinear half-space form: integral of du/ds dv/ds + A(ds) grad u . grad v

    The s-derivative uses second-order differences on the levels. The A-weighted
    part integrates the density exactly between levels against the level
    average, and adds atoms by interpolation between their neighbouring levels.

    Args:
        string: The string
        u, v: Fields on the same grid

    Returns:
        Form value
    """
    levels = u.s_levels
    if levels.size < MIN_LEVELS:
        raise DomainError(f"The half-space form needs at least {MIN_LEVELS} levels, got {levels.size}")
    if not np.array_equal(levels, v.s_levels) or u.n != v.n:
        raise DomainError("Fields live on different grids")
    dx = 2.0 * u.half_length / u.n

    same = u.values is v.values
    du = np.gradient(u.values, levels, axis=0, edge_order=2)
    dv = du if same else np.gradient(v.values, levels, axis=0, edge_order=2)
    vertical = trapezoid(dx * np.sum(du * dv, axis=1), levels)

    xi = grid_frequencies(u.n, u.half_length)
    scale = dx / u.n
    u_hat = np.fft.fft(u.values, axis=1)
    v_hat = u_hat if same else np.fft.fft(v.values, axis=1)
    gradient = scale * np.sum((xi * xi)[np.newaxis, :] * (u_hat * np.conj(v_hat)).real, axis=1)

    masses = _level_masses(string, levels)
    horizontal = float(np.sum(masses * 0.5 * (gradient[:-1] + gradient[1:])))
    for atom in string.atoms:
        if atom.position <= levels[-1]:
            horizontal += atom.mass * float(np.interp(atom.position, levels, gradient))
    return float(vertical + horizontal)


def form_halfspace(string: KreinString, u: HalfSpaceField) -> float:
    return cross_form(string, u, u)


def boundary_derivative(string: KreinString, f: GridFunction, h: float = 1e-3,
                        tol: float = PSI_TOL) -> GridFunction:
    """
    Richardson-extrapolated -du/ds(0, .) of the harmonic extension

    Args:
        string: The string
        f: Boundary data
        h: Largest step
        tol: psi tolerance

    Returns:
        GridFunction approximating dtn_apply(string, f)
    """
    if not (0.0 < h < string.length):
        raise DomainError(f"Step must lie in (0, R), got {h}")
    u = harmonic_extension(string, f, [0.0, 0.5 * h, h], tol)
    coarse = (u.values[2] - u.values[0]) / h
    fine = (u.values[1] - u.values[0]) / (0.5 * h)
    return f.with_values(-(2.0 * fine - coarse))

