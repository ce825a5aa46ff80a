"""
Krein String Toolkit - Complete Bernstein Checks
Sample psi on lambda grids and check the one-dimensional necessary conditions:
nonnegative, nondecreasing, concave, psi(lambda)/lambda nonincreasing.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.constants import CBF_TOL, CBF_GRID, CBF_MIN_POINTS, PSI_TOL
from . import ode_engine
from .errors import DomainError
from .parallel import parallel_map
from .string_core import KreinString

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PsiTable:
    lambda_grid: np.ndarray
    psi: np.ndarray
    source: str = "string"

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", np.asarray(self.lambda_grid, dtype=float))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))
        if self.lambda_grid.shape != self.psi.shape:
            raise DomainError("lambda grid and psi values differ in length")
        if not np.all(np.isfinite(self.psi)) or np.any(self.psi < 0.0):
            raise DomainError("psi values must be finite and nonnegative")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lambda": self.lambda_grid, "psi": self.psi})


@dataclass(frozen=True)
class CbfViolation:
    condition: str
    index: int
    lam: float
    amount: float


@dataclass(frozen=True)
class CbfReport:
    tol: float
    n_points: int
    violations: Tuple[CbfViolation, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations

    def conditions_failed(self) -> List[str]:
        return sorted({v.condition for v in self.violations})

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "n_points": self.n_points,
            "violations": [
                {"condition": v.condition, "index": v.index, "lambda": v.lam, "amount": v.amount}
                for v in self.violations
            ],
        }


def geometric_grid(lo: float = CBF_GRID["lo"], hi: float = CBF_GRID["hi"],
                   count: int = CBF_GRID["count"]) -> np.ndarray:
    if not (0.0 < lo < hi) or count < 2:
        raise DomainError(f"Invalid geometric grid {lo}:{hi}:{count}")
    return np.geomspace(lo, hi, count)


def validate_lambda_grid(grid: Sequence[float]) -> Tuple[bool, str]:
    """
    Validate a lambda grid

    Args:
        grid: Candidate grid

    Returns:
        Tuple of (is_valid, error_message)
    """
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size == 0:
        return False, "The lambda grid must be a nonempty list"
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        return False, "Lambda values must be positive and finite"
    if np.any(np.diff(values) <= 0.0):
        return False, "The lambda grid must be strictly increasing"
    return True, ""


def _psi_point(string: KreinString, tol: float, lam: float) -> float:
    return ode_engine.psi(string, lam, tol)


def sample_psi(string: KreinString, lambda_grid: Sequence[float], tol: float = PSI_TOL,
               processes: Optional[int] = None) -> PsiTable:
    """
    Tabulate psi on a lambda grid

    Args:
        string: The string
        lambda_grid: Positive increasing lambdas
        tol: psi tolerance
        processes: Worker count (defaults to KREIN_THREADS)

    Returns:
        PsiTable tagged "string"
    """
    is_valid, message = validate_lambda_grid(lambda_grid)
    if not is_valid:
        raise DomainError(message)
    grid = np.asarray(lambda_grid, dtype=float)
    values = parallel_map(partial(_psi_point, string, tol), grid, processes)
    return PsiTable(grid, np.array(values), "string")


def tabulate_closed_form(fn: Callable[[float], float], lambda_grid: Sequence[float], source: str) -> PsiTable:
    is_valid, message = validate_lambda_grid(lambda_grid)
    if not is_valid:
        raise DomainError(message)
    grid = np.asarray(lambda_grid, dtype=float)
    return PsiTable(grid, np.array([fn(float(lam)) for lam in grid]), source)


def check_cbf(table: PsiTable, tol: float = CBF_TOL) -> CbfReport:
    """
    Check the necessary complete-Bernstein conditions on sampled values

    Divided differences are compared against tol scaled by the magnitude of the
    values involved.

    Args:
        table: Sampled psi
        tol: Relative tolerance

    Returns:
        CbfReport listing every violated condition with its location
    """
    lam, values = table.lambda_grid, table.psi
    if lam.size < CBF_MIN_POINTS:
        raise DomainError(f"check_cbf needs at least {CBF_MIN_POINTS} grid points")
    violations: List[CbfViolation] = []
    scale = max(float(np.max(np.abs(values))), 1e-300)

    for i, v in enumerate(values):
        if v < -tol * scale:
            violations.append(CbfViolation("nonnegative", i, float(lam[i]), float(-v)))

    slopes = np.diff(values) / np.diff(lam)
    for i, (d, a, b) in enumerate(zip(np.diff(values), values[:-1], values[1:])):
        if d < -tol * max(abs(a), abs(b)):
            violations.append(CbfViolation("nondecreasing", i, float(lam[i]), float(-d)))

    mids = 0.5 * (lam[:-1] + lam[1:])
    slope_steps = np.diff(slopes)
    second = slope_steps / np.diff(mids)
    for i, s2 in enumerate(second):
        if slope_steps[i] > tol * max(abs(slopes[i]), abs(slopes[i + 1])):
            violations.append(CbfViolation("concave", i + 1, float(lam[i + 1]), float(s2)))

    ratio = values / lam
    for i, (a, b) in enumerate(zip(ratio[:-1], ratio[1:])):
        if b - a > tol * max(abs(a), abs(b)):
            violations.append(CbfViolation("ratio_nonincreasing", i, float(lam[i]), float(b - a)))

    if violations:
        logger.info("CBF check on %s: %d violations", table.source, len(violations))
    return CbfReport(tol, int(lam.size), tuple(violations))
