"""
Krein String Toolkit - Nodal Domains
Nodal parts of half-space fields and of boundary traces, and the
Courant-Hilbert bound checks.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import ndimage

from utils.constants import NODAL_THRESHOLD, NODAL_SWEEP, SWEEP_INSTABILITY, MULTIPLICITY_RTOL
from .errors import DomainError
from .extension import GridFunction, HalfSpaceField

logger = logging.getLogger(__name__)


class DisjointSet:
    """Union-find over hashable labels with path halving."""

    def __init__(self):
        self.data: Dict[int, int] = {}

    def makeset(self, x: int) -> int:
        self.data[x] = x
        return x

    def find(self, x: int) -> int:
        if x not in self.data:
            return self.makeset(x)
        i = self.data[x]
        while i != self.data[i]:
            self.data[i] = self.data[self.data[i]]
            i = self.data[i]
        return i

    def union(self, x: int, y: int) -> None:
        i, j = self.find(x), self.find(y)
        if i < j:
            self.data[j] = i
        elif j < i:
            self.data[i] = j


@dataclass(frozen=True)
class NodalLabeling:
    """Labels 1..count on cells with |u| above the threshold, 0 on background."""
    labels: np.ndarray
    count: int
    signs: List[int]
    sizes: List[int]
    threshold: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.labels)


def _field_values(u: Union[HalfSpaceField, np.ndarray]) -> np.ndarray:
    values = np.asarray(getattr(u, "values", u), dtype=float)
    if values.ndim != 2:
        raise DomainError("Nodal labelling needs a 2-d field")
    if not np.all(np.isfinite(values)):
        raise DomainError("Nodal labelling needs a finite field")
    return values


def nodal_components(u: Union[HalfSpaceField, np.ndarray], rel_threshold: float = NODAL_THRESHOLD,
                     wrap: bool = True) -> NodalLabeling:
    """
    Label the nodal parts of a field

    Cells with |u| <= rel_threshold * max|u| are background. Same-sign cells
    are joined across 4-neighbour edges, and across the periodic x seam when
    wrap is set.

    Args:
        u: HalfSpaceField or a (levels x points) array
        rel_threshold: Relative zero threshold in (0, 0.1)
        wrap: Join the first and last x columns

    Returns:
        NodalLabeling with labels numbered in row-major order of first appearance
    """
    if not (0.0 < rel_threshold < 0.1):
        raise DomainError(f"Threshold must lie in (0, 0.1), got {rel_threshold}")
    values = _field_values(u)
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        logger.warning("nodal labelling: the field is identically zero")
        return NodalLabeling(np.zeros(values.shape, dtype=int), 0, [], [], rel_threshold)
    cutoff = rel_threshold * peak

    positive, n_pos = ndimage.label(values > cutoff)
    negative, n_neg = ndimage.label(values < -cutoff)
    raw = np.where(negative > 0, negative + n_pos, positive)

    components = DisjointSet()
    for label in range(1, n_pos + n_neg + 1):
        components.makeset(label)
    if wrap and values.shape[1] > 1:
        for left, right in zip(raw[:, 0], raw[:, -1]):
            if left and right and (left > n_pos) == (right > n_pos):
                components.union(int(left), int(right))

    renumber: Dict[int, int] = {}
    labels = np.zeros(values.shape, dtype=int)
    for (j, k), label in np.ndenumerate(raw):
        if label == 0:
            continue
        root = components.find(int(label))
        if root not in renumber:
            renumber[root] = len(renumber) + 1
        labels[j, k] = renumber[root]

    count = len(renumber)
    signs = [0] * count
    sizes = [0] * count
    for (j, k), label in np.ndenumerate(labels):
        if label:
            signs[label - 1] = 1 if values[j, k] > 0.0 else -1
            sizes[label - 1] += 1
    if count == 0:
        logger.warning("nodal labelling: every cell is background at threshold %g", rel_threshold)
    return NodalLabeling(labels, count, signs, sizes, rel_threshold)


def boundary_nodal_count(f: Union[GridFunction, Sequence[float]], rel_threshold: float = NODAL_THRESHOLD) -> int:
    """
    Number of same-sign runs of a periodic 1-d function

    Args:
        f: Boundary function
        rel_threshold: Relative zero threshold

    Returns:
        Number of nodal intervals; background cells separate runs
    """
    values = np.asarray(getattr(f, "values", f), dtype=float)
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return 0
    signs = np.where(np.abs(values) > rel_threshold * peak, np.sign(values), 0.0)
    starts = np.count_nonzero((signs != 0.0) & (signs != np.roll(signs, 1)))
    if starts == 0:
        return 1
    return int(starts)


@dataclass(frozen=True)
class CourantVerdict:
    n: int
    count: int
    weak_bound: int
    strong_bound: int
    strong_asserted: bool

    @property
    def weak_pass(self) -> bool:
        return self.count <= self.weak_bound

    @property
    def strong_pass(self) -> bool:
        return self.count <= self.strong_bound

    @property
    def passed(self) -> bool:
        return self.weak_pass and (self.strong_pass or not self.strong_asserted)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "count": self.count,
            "weak_bound": self.weak_bound,
            "weak_pass": self.weak_pass,
            "strong_bound": self.strong_bound,
            "strong_pass": self.strong_pass,
            "strong_asserted": self.strong_asserted,
            "passed": self.passed,
        }


def courant_check(problem: Any, n: int, labeling: NodalLabeling, eig: Any,
                  tol_mult: float = MULTIPLICITY_RTOL) -> CourantVerdict:
    """
    Weak and strong Courant-Hilbert bounds for the n-th eigenfunction

    Args:
        problem: SpectralProblem; its multiplier says whether the strong bound applies
        n: 1-based eigenvalue index
        labeling: Nodal labelling of ext(f_n)
        eig: EigenResult or a plain sequence of eigenvalues
        tol_mult: Relative tolerance defining the multiplicity cluster of mu_n

    Returns:
        CourantVerdict
    """
    values = np.asarray(getattr(eig, "eigenvalues", eig), dtype=float)
    if not (1 <= n <= values.size):
        raise DomainError(f"Index {n} outside the {values.size} computed eigenvalues")
    mu = values[n - 1]
    cluster = np.nonzero(np.abs(values - mu) <= tol_mult * max(abs(mu), 1.0))[0] + 1
    weak, strong = int(cluster.max()), int(cluster.min())
    if weak == values.size:
        logger.warning("multiplicity cluster of mu_%d reaches the last computed eigenvalue", n)
    multiplier = getattr(problem, "multiplier", None)
    asserted = bool(getattr(multiplier, "lipschitz_positive", False))
    return CourantVerdict(n, labeling.count, weak, strong, asserted)


@dataclass(frozen=True)
class ThresholdSweep:
    counts: Dict[float, int]

    @property
    def spread(self) -> int:
        return max(self.counts.values()) - min(self.counts.values())

    @property
    def unstable(self) -> bool:
        top = max(self.counts.values())
        return top > 0 and self.spread / top > SWEEP_INSTABILITY


def threshold_sweep(u: Union[HalfSpaceField, np.ndarray], thresholds: Optional[Sequence[float]] = None,
                    wrap: bool = True) -> ThresholdSweep:
    """Component counts over several thresholds; warns when they differ by more than 10%."""
    counts = {float(t): nodal_components(u, t, wrap).count for t in (thresholds or NODAL_SWEEP)}
    sweep = ThresholdSweep(counts)
    if sweep.unstable:
        logger.warning("nodal count is resolution dependent: %s", counts)
    return sweep
