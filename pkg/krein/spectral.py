"""
Krein String Toolkit - Spectral
Eigenpairs of psi(-Laplacian) + V on the periodic grid, the comparison
operator -Laplacian + gamma V, and the eigenvalue estimate reports.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import linalg

from utils.constants import (
    DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, EST_RTOL, PSI_TOL, RESIDUAL_RTOL, POTENTIAL_KINDS
)
from . import ode_engine
from .errors import DomainError, InputError, NumericalError
from .extension import (
    GridFunction, IdentityMultiplier, ClosedFormMultiplier, Multiplier, MultiplierSource,
    as_multiplier, grid_points
)
from .string_core import KreinString

logger = logging.getLogger(__name__)


# =============================================================================
# PROBLEMS AND RESULTS
# =============================================================================

def make_potential(kind: str, n: int = DEFAULT_GRID_POINTS, half_length: float = DEFAULT_HALF_LENGTH,
                   **params: Any) -> GridFunction:
    """
    Build a potential on the periodic grid

    Args:
        kind: "power" (scale * |x|**p), "zero" or "values"
        n: Grid size
        half_length: X
        params: p and scale for "power", values for "values"

    Returns:
        GridFunction holding V
    """
    x = grid_points(n, half_length)
    if kind == "power":
        p = float(params.get("p", 2.0))
        if p <= 0.0:
            raise DomainError(f"Power potentials need p > 0, got {p}")
        return GridFunction(n, half_length, float(params.get("scale", 1.0)) * np.abs(x) ** p)
    if kind == "zero":
        return GridFunction(n, half_length, np.zeros(n))
    if kind == "values":
        return GridFunction(n, half_length, np.asarray(params["values"], dtype=float))
    raise InputError(f"Unknown potential kind '{kind}'; expected one of {', '.join(POTENTIAL_KINDS)}")


class SpectralProblem:
    """psi(-Laplacian) + V for a multiplier source and a potential on the grid."""

    def __init__(self, source: MultiplierSource, potential: GridFunction):
        self.multiplier: Multiplier = as_multiplier(source)
        self.potential = potential

    @property
    def n(self) -> int:
        return self.potential.n

    @property
    def half_length(self) -> float:
        return self.potential.half_length

    def shifted(self, constant: float) -> "SpectralProblem":
        return SpectralProblem(self.multiplier, self.potential.with_values(self.potential.values + constant))


@dataclass(frozen=True)
class EigenResult:
    """Lowest eigenpairs; vectors are l2-orthonormal columns."""
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    n: Optional[int] = None
    half_length: Optional[float] = None

    def eigenfunction(self, i: int) -> GridFunction:
        """i-th eigenvector (0-based) as a GridFunction of unit L2 norm on the grid."""
        if self.n is None:
            raise DomainError("This result carries no grid")
        spacing = 2.0 * self.half_length / self.n
        return GridFunction(self.n, self.half_length, self.vectors[:, i] / math.sqrt(spacing))

    def to_dict(self) -> Dict[str, Any]:
        return {"eigenvalues": self.eigenvalues.tolist(), "residuals": self.residuals.tolist()}


def build_operator(problem: SpectralProblem) -> np.ndarray:
    """
    Dense matrix of psi(-Laplacian) + V

    The multiplier part is the circulant matrix with first column ifft(psi(xi^2)).

    Args:
        problem: The spectral problem

    Returns:
        Symmetric n x n matrix
    """
    weights = problem.multiplier.on_grid(problem.n, problem.half_length)
    if not np.all(np.isfinite(weights)):
        raise DomainError("psi is not finite on the frequency set")
    H = linalg.circulant(np.fft.ifft(weights).real)
    H[np.diag_indices_from(H)] += problem.potential.values
    return 0.5 * (H + H.T)


def eigensolve(H: np.ndarray, k: int, n: Optional[int] = None,
               half_length: Optional[float] = None) -> EigenResult:
    """
    Lowest k eigenpairs of a symmetric matrix

    Args:
        H: Symmetric matrix
        k: Number of eigenpairs
        n, half_length: Grid the matrix lives on, for eigenfunction()

    Returns:
        EigenResult; each eigenvector's largest entry is positive
    """
    size = H.shape[0]
    if k < 1 or k > size:
        raise DomainError(f"Requested {k} eigenpairs of a {size} x {size} matrix")
    try:
        values, vectors = linalg.eigh(H, driver="ev")
    except linalg.LinAlgError as e:
        raise NumericalError(f"Symmetric eigensolver failed: {e}") from e
    values, vectors = values[:k], vectors[:, :k]

    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(k)])
    vectors = vectors * np.where(signs == 0.0, 1.0, signs)

    residuals = np.linalg.norm(H @ vectors - vectors * values, axis=0)
    scale = max(float(np.max(np.abs(values))), 1.0)
    worst = float(np.max(residuals))
    if worst > RESIDUAL_RTOL * scale:
        raise NumericalError(f"Eigenpair residual {worst:.3e} exceeds {RESIDUAL_RTOL:g} x {scale:.3e}")
    return EigenResult(values, vectors, residuals, n, half_length)


def solve_problem(problem: SpectralProblem, k: int) -> EigenResult:
    return eigensolve(build_operator(problem), k, problem.n, problem.half_length)


# =============================================================================
# EIGENVALUE ESTIMATES
# =============================================================================

def bound_gamma(string: KreinString, lam: float, tol: float = PSI_TOL) -> float:
    """gamma = 1 / integral of A phi_lambda^2."""
    if not lam > 0.0:
        raise DomainError(f"bound_gamma needs lambda > 0, got {lam}")
    return 1.0 / ode_engine.phi_mass_integral(string, lam, tol)


def _fractional_order(source: Any) -> Optional[float]:
    """alpha of classical and fractional catalog entries, None for everything else."""
    name = getattr(source, "name", None)
    if name == "classical":
        return 1.0
    if name == "caffarelli_silvestre":
        return float(source.params["alpha"])
    return None


@dataclass(frozen=True)
class EstReport:
    lam: float
    gamma: float
    psi_bound: float
    index: int
    laplacian_eigenvalue: Optional[float]
    mu: Optional[float]
    tol: float
    gamma_closed_form: Optional[float] = None

    @property
    def vacuous(self) -> bool:
        return self.index == 0

    @property
    def slack(self) -> Optional[float]:
        return None if self.mu is None else self.psi_bound - self.mu

    @property
    def passed(self) -> bool:
        return self.vacuous or self.mu <= self.psi_bound * (1.0 + self.tol)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "gamma": self.gamma,
            "gamma_closed_form": self.gamma_closed_form,
            "psi_bound": self.psi_bound,
            "index": self.index,
            "laplacian_eigenvalue": self.laplacian_eigenvalue,
            "mu": self.mu,
            "slack": self.slack,
            "vacuous": self.vacuous,
            "passed": self.passed,
            "tol": self.tol,
        }


def check_theorem_est(source: Any, potential: GridFunction, lam: float, tol: float = EST_RTOL) -> EstReport:
    """
    Compare mu_n of psi(-Laplacian) + V with psi(lambda)

    gamma is the numerically computed 1 / integral of A phi^2, n the largest
    index with lambda_n(-Laplacian + gamma V) <= lambda.

    Args:
        source: KreinString or catalog entry (closed-form psi, same string)
        potential: Confining potential V
        lam: lambda > 0
        tol: Relative tolerance on the bound

    Returns:
        EstReport; vacuous when no comparison eigenvalue lies below lambda
    """
    string = source if isinstance(source, KreinString) else getattr(source, "string", None)
    if string is None:
        raise InputError("The eigenvalue estimate needs a string or a catalog entry")
    gamma = bound_gamma(string, lam)
    alpha = _fractional_order(source)
    gamma_closed = None if alpha is None else lam ** (1.0 - alpha / 2.0)

    comparison = SpectralProblem(IdentityMultiplier(), potential.with_values(gamma * potential.values))
    laplacian = np.linalg.eigvalsh(build_operator(comparison))
    index = int(np.searchsorted(laplacian, lam, side="right"))
    problem = SpectralProblem(source, potential)
    psi_bound = float(problem.multiplier.psi_values(np.array([lam]))[0])
    if index == 0:
        logger.info("eigenvalue estimate at lambda=%g: no comparison eigenvalue below lambda", lam)
        return EstReport(lam, gamma, psi_bound, 0, None, None, tol, gamma_closed)

    mu = solve_problem(problem, index).eigenvalues[index - 1]
    report = EstReport(lam, gamma, psi_bound, index, float(laplacian[index - 1]), float(mu), tol, gamma_closed)
    logger.info("eigenvalue estimate at lambda=%g: n=%d mu_n=%.6g bound=%.6g", lam, index, mu, psi_bound)
    return report


@dataclass(frozen=True)
class HomogeneousReport:
    alpha: float
    p: float
    exponent: float
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "p": self.p, "exponent": self.exponent, "informational": True,
                "rows": list(self.rows)}


def homogeneous_bound_report(alpha: float, p: float, n: int = DEFAULT_GRID_POINTS,
                             half_length: float = DEFAULT_HALF_LENGTH, count: int = 8) -> HomogeneousReport:
    """
    mu_n of (-Laplacian)^(alpha/2) + |x|^p against powers of lambda_n(-Laplacian + |x|^p)

    Two bounds are reported per n: the stated lambda_n^e with
    e = (2+p) alpha / (2 alpha + 2p), and the bound that follows from the
    constant (alpha/2) lambda^(alpha/2 - 1) for the integral of A phi^2,
    ((2/alpha)^(2/(2+p)) lambda_n)^e. Informational only.

    Args:
        alpha: Order in (0, 2]
        p: Degree of the potential, > 0
        n: Grid size
        half_length: X
        count: Number of eigenvalues compared

    Returns:
        HomogeneousReport with one row per n
    """
    if not (0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    potential = make_potential("power", n, half_length, p=p)
    exponent = (2.0 + p) * alpha / (2.0 * alpha + 2.0 * p)
    factor = (2.0 / alpha) ** (2.0 / (2.0 + p))

    laplacian = solve_problem(SpectralProblem(IdentityMultiplier(), potential), count).eigenvalues
    if alpha == 2.0:
        fractional = IdentityMultiplier()
    else:
        fractional = ClosedFormMultiplier(lambda lam: lam ** (alpha / 2.0), f"fractional({alpha:g})")
    mus = solve_problem(SpectralProblem(fractional, potential), count).eigenvalues

    rows = []
    for i, (lam_n, mu_n) in enumerate(zip(laplacian, mus), start=1):
        stated = lam_n ** exponent
        corrected = (factor * lam_n) ** exponent
        rows.append({
            "n": i,
            "lambda_n": float(lam_n),
            "mu_n": float(mu_n),
            "stated_bound": float(stated),
            "stated_holds": bool(mu_n <= stated * (1.0 + EST_RTOL)),
            "corrected_bound": float(corrected),
            "corrected_holds": bool(mu_n <= corrected * (1.0 + EST_RTOL)),
        })
    failing = [row["n"] for row in rows if not row["stated_holds"]]
    if failing:
        logger.info("homogeneous bound (alpha=%g, p=%g) fails as stated for n in %s", alpha, p, failing)
    return HomogeneousReport(alpha, p, exponent, rows)
