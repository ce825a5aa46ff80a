"""
Krein String Toolkit - String Data Model
Krein strings as density segments plus atoms, the t <-> s change of variable,
and the complementary and shifted string constructions.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from utils.constants import (
    DENSITY_FAMILIES, END_CONDITIONS, ROOT_MATCH_RTOL, BOUNDARY_MATCH_RTOL,
    DEFAULT_COEFFICIENT_KNOTS, DEFAULT_PUSH_FORWARD_KNOTS, INVERSION_XTOL,
    SHIFT_CUTOFF, SHIFT_HEAD_FRACTION, EXPONENT_SNAP
)
from .errors import DomainError, InvalidCoefficientError, NotRepresentableError

logger = logging.getLogger(__name__)


def _close(a: float, b: float, rtol: float = BOUNDARY_MATCH_RTOL) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=rtol, abs_tol=rtol)


def _log1p(v: float) -> float:
    return -math.inf if v <= -1.0 else math.log1p(v)


def _expm1(v: float) -> float:
    if v > 700.0:
        return math.inf
    return math.expm1(v)


def _linear_integral(knots: Sequence[float], values: Sequence[float], a: float, b: float) -> float:
    """Exact integral of the piecewise-linear interpolant over [a, b]."""
    xs = np.asarray(knots, dtype=float)
    ys = np.asarray(values, dtype=float)
    inner = xs[(xs > a) & (xs < b)]
    pts = np.concatenate(([a], inner, [b]))
    return float(integrate.trapezoid(np.interp(pts, xs, ys), pts))


def _reciprocal_linear_integral(knots: Sequence[float], values: Sequence[float], a: float, b: float) -> float:
    """Exact integral of 1/(piecewise-linear interpolant) over [a, b]."""
    xs = np.asarray(knots, dtype=float)
    ys = np.asarray(values, dtype=float)
    inner = xs[(xs > a) & (xs < b)]
    pts = np.concatenate(([a], inner, [b]))
    vals = np.interp(pts, xs, ys)
    if np.any(vals <= 0.0):
        return math.inf
    h = np.diff(pts)
    y0, y1 = vals[:-1], vals[1:]
    dy = y1 - y0
    flat = np.abs(dy) <= 1e-12 * y0
    with np.errstate(divide="ignore", invalid="ignore"):
        pieces = np.where(flat, 2.0 * h / (y0 + y1), h * np.log(y1 / y0) / dy)
    return float(np.sum(pieces))


# =============================================================================
# DENSITY SEGMENTS
# =============================================================================

@dataclass(frozen=True)
class DensitySegment:
    """One piece of a density on [s_lo, s_hi).

    Closed families are evaluated in x = s - origin, where origin defaults
    to s_lo:

        constant        c
        power           c * x**p              (p > -1)
        rational_power  c * (1 + q*x)**r
        exponential     c * exp(q*x)

    A tabulated segment interpolates linearly between (knots, values).
    The same menu describes the pieces of a coefficient a(t).
    """
    s_lo: float
    s_hi: float
    family: str = "constant"
    c: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    origin: Optional[float] = None
    knots: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "s_lo", float(self.s_lo))
        object.__setattr__(self, "s_hi", float(self.s_hi))
        object.__setattr__(self, "knots", tuple(float(k) for k in self.knots))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.origin is not None:
            object.__setattr__(self, "origin", float(self.origin))
        is_valid, message = validate_segment(self)
        if not is_valid:
            raise DomainError(message)

    @property
    def x0(self) -> float:
        return self.s_lo if self.origin is None else self.origin

    @property
    def root(self) -> Optional[float]:
        """Zero of 1 + q*x for the rational-power family."""
        if self.family != "rational_power" or self.q == 0.0:
            return None
        return self.x0 - 1.0 / self.q

    @property
    def is_zero(self) -> bool:
        if self.family == "tabulated":
            return all(v == 0.0 for v in self.values)
        return self.c == 0.0

    @property
    def is_positive(self) -> bool:
        if self.family == "tabulated":
            return all(v > 0.0 for v in self.values)
        return self.c > 0.0

    def density(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.family == "tabulated":
            return np.interp(s, self.knots, self.values)
        if self.c == 0.0:
            return np.zeros_like(s)
        x = s - self.x0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.family == "constant":
                return np.full_like(s, self.c)
            if self.family == "power":
                return self.c * np.power(np.maximum(x, 0.0), self.p)
            if self.family == "rational_power":
                return self.c * np.power(np.maximum(1.0 + self.q * x, 0.0), self.r)
            return self.c * np.exp(self.q * x)

    def primitive(self, x: float) -> float:
        """Closed-form integral of the density from the origin to origin + x."""
        c, p, q, r = self.c, self.p, self.q, self.r
        if c == 0.0 or x == 0.0:
            return 0.0
        if self.family == "constant":
            return c * x
        if self.family == "power":
            return math.inf if math.isinf(x) else c * x ** (p + 1.0) / (p + 1.0)
        if self.family == "rational_power":
            if q == 0.0 or r == 0.0:
                return c * x
            if math.isinf(x):
                return -c / (q * (r + 1.0)) if r < -1.0 else math.inf
            log_base = _log1p(q * x)
            if r == -1.0:
                return c * log_base / q if math.isfinite(log_base) else math.inf
            exponent = (r + 1.0) * log_base
            if math.isinf(exponent):
                return math.inf if exponent > 0 else -c / (q * (r + 1.0))
            return c * _expm1(exponent) / (q * (r + 1.0))
        if q == 0.0:
            return c * x
        if math.isinf(x):
            return -c / q if q < 0.0 else math.inf
        return c * _expm1(q * x) / q

    def mass(self, a: float, b: float) -> float:
        """Integral of the density over [a, b] inside the segment."""
        if b <= a:
            return 0.0
        if self.family == "tabulated":
            return _linear_integral(self.knots, self.values, a, b)
        if self.c == 0.0:
            return 0.0
        return self.primitive(b - self.x0) - self.primitive(a - self.x0)

    def left_singular_exponent(self) -> Optional[float]:
        if self.family == "tabulated" or self.c == 0.0:
            return None
        if self.family == "power" and self.p < 0.0 and _close(self.x0, self.s_lo):
            return self.p
        if (self.family == "rational_power" and self.r < 0.0 and self.q > 0.0
                and _close(self.root, self.s_lo, ROOT_MATCH_RTOL)):
            return self.r
        return None

    def right_singular_exponent(self) -> Optional[float]:
        if self.family != "rational_power" or self.c == 0.0 or self.r >= 0.0 or self.q >= 0.0:
            return None
        if math.isfinite(self.s_hi) and _close(self.root, self.s_hi, ROOT_MATCH_RTOL):
            return self.r
        return None

    def graded_weight(self, u, k: float, side: str) -> np.ndarray:
        """k*u**(k-1) * A(s(u)) for s = s_lo + u**k (left) or s_hi - u**k (right)."""
        if self.family == "power":
            coef, exponent = self.c, self.p
        elif side == "left":
            coef, exponent = self.c * self.q ** self.r, self.r
        else:
            coef, exponent = self.c * (-self.q) ** self.r, self.r
        e = k * (1.0 + exponent) - 1.0
        if abs(e) < EXPONENT_SNAP:
            return np.full_like(np.asarray(u, dtype=float), k * coef)
        return k * coef * np.power(u, e)

    def with_bounds(self, lo: float, hi: float) -> "DensitySegment":
        """The same density restricted to [lo, hi]."""
        if self.family == "tabulated":
            xs = np.asarray(self.knots)
            inner = xs[(xs > lo) & (xs < hi)]
            pts = np.concatenate(([lo], inner, [hi]))
            vals = np.interp(pts, self.knots, self.values)
            return DensitySegment(lo, hi, "tabulated", knots=tuple(pts), values=tuple(vals))
        return replace(self, s_lo=lo, s_hi=hi, origin=self.x0)

    def scaled(self, factor: float) -> "DensitySegment":
        if self.family == "tabulated":
            return replace(self, values=tuple(v * factor for v in self.values))
        return replace(self, c=self.c * factor)

    def shifted(self, offset: float) -> "DensitySegment":
        """Translate the segment by offset along the axis."""
        if self.family == "tabulated":
            return replace(self, s_lo=self.s_lo + offset, s_hi=self.s_hi + offset,
                           knots=tuple(k + offset for k in self.knots))
        return replace(self, s_lo=self.s_lo + offset, s_hi=self.s_hi + offset, origin=self.x0 + offset)

    def sqrt_segment(self) -> "DensitySegment":
        """Closed-form square root of the density, same family."""
        root_c = math.sqrt(self.c)
        if self.family == "constant":
            return replace(self, c=root_c)
        if self.family == "power":
            return replace(self, c=root_c, p=self.p / 2.0)
        if self.family == "rational_power":
            return replace(self, c=root_c, r=self.r / 2.0)
        if self.family == "exponential":
            return replace(self, c=root_c, q=self.q / 2.0)
        raise NotRepresentableError("tabulated segments have no closed-form square root")

    def reciprocal(self) -> "DensitySegment":
        """Closed-form 1/density, same family; invalid when 1/density is not integrable."""
        inv_c = 1.0 / self.c
        if self.family == "constant":
            return replace(self, c=inv_c)
        if self.family == "power":
            return replace(self, c=inv_c, p=-self.p)
        if self.family == "rational_power":
            return replace(self, c=inv_c, r=-self.r)
        if self.family == "exponential":
            return replace(self, c=inv_c, q=-self.q)
        raise NotRepresentableError("tabulated segments have no closed-form reciprocal")

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "lo": self.s_lo,
            "hi": None if math.isinf(self.s_hi) else self.s_hi,
            "family": self.family,
        }
        if self.family == "tabulated":
            data["knots"] = list(self.knots)
            data["values"] = list(self.values)
            return data
        data["c"] = self.c
        if self.family == "power":
            data["p"] = self.p
        if self.family in ("rational_power", "exponential"):
            data["q"] = self.q
        if self.family == "rational_power":
            data["r"] = self.r
        if self.origin is not None and not _close(self.origin, self.s_lo):
            data["origin"] = self.origin
        return data


def validate_segment(seg: DensitySegment) -> Tuple[bool, str]:
    """
    Validate a density segment

    Args:
        seg: Segment to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    if seg.family not in DENSITY_FAMILIES:
        return False, f"Unknown density family '{seg.family}'"
    if not math.isfinite(seg.s_lo) or seg.s_lo < 0.0:
        return False, f"Segment start must be finite and nonnegative, got {seg.s_lo}"
    if not seg.s_hi > seg.s_lo:
        return False, f"Segment [{seg.s_lo}, {seg.s_hi}) is empty"

    if seg.family == "tabulated":
        if not math.isfinite(seg.s_hi):
            return False, "Tabulated segments must be finite"
        if len(seg.knots) < 2 or len(seg.knots) != len(seg.values):
            return False, "Tabulated segments need at least two knot/value pairs"
        if any(b <= a for a, b in zip(seg.knots, seg.knots[1:])):
            return False, "Tabulated knots must be strictly increasing"
        if not (_close(seg.knots[0], seg.s_lo) and _close(seg.knots[-1], seg.s_hi)):
            return False, "Tabulated knots must span the segment"
        if any(not math.isfinite(v) or v < 0.0 for v in seg.values):
            return False, "Tabulated values must be finite and nonnegative"
        return True, ""

    for name in ("c", "p", "q", "r"):
        if not math.isfinite(getattr(seg, name)):
            return False, f"Parameter {name} must be finite"
    if seg.c < 0.0:
        return False, f"Density coefficient must be nonnegative, got c={seg.c}"
    if seg.x0 > seg.s_lo and not _close(seg.x0, seg.s_lo):
        return False, "Segment origin must not lie after the segment start"
    if seg.family == "power" and seg.p <= -1.0:
        return False, f"Power exponent must exceed -1, got p={seg.p}"
    if seg.family == "rational_power" and seg.q != 0.0:
        root = seg.root
        if seg.q > 0.0:
            if root > seg.s_lo and not _close(root, seg.s_lo, ROOT_MATCH_RTOL):
                return False, "Rational-power base vanishes inside the segment"
            if _close(root, seg.s_lo, ROOT_MATCH_RTOL) and seg.r <= -1.0 and seg.c > 0.0:
                return False, "Rational-power density is not integrable at the segment start"
        else:
            if not math.isfinite(seg.s_hi):
                return False, "Rational-power base vanishes inside the segment"
            if root < seg.s_hi and not _close(root, seg.s_hi, ROOT_MATCH_RTOL):
                return False, "Rational-power base vanishes inside the segment"
    return True, ""


@dataclass(frozen=True)
class Atom:
    position: float
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "position", float(self.position))
        object.__setattr__(self, "mass", float(self.mass))
        if not (math.isfinite(self.position) and self.position >= 0.0):
            raise DomainError(f"Atom position must be finite and nonnegative, got {self.position}")
        if not (math.isfinite(self.mass) and self.mass > 0.0):
            raise DomainError(f"Atom mass must be positive, got {self.mass}")


# =============================================================================
# KREIN STRINGS
# =============================================================================

def _piece_index(starts: np.ndarray, s) -> np.ndarray:
    return np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(starts) - 1)


def _evaluate_pieces(pieces: Sequence[DensitySegment], s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    starts = np.array([seg.s_lo for seg in pieces])
    idx = _piece_index(starts, s)
    out = np.zeros_like(s)
    for i, seg in enumerate(pieces):
        mask = idx == i
        if np.any(mask):
            out[mask] = seg.density(s[mask])
    return out


@dataclass(frozen=True)
class KreinString:
    """A measure A(ds) on [0, R): density segments, atoms and an end condition."""
    segments: Tuple[DensitySegment, ...]
    atoms: Tuple[Atom, ...] = ()
    length: float = math.inf
    end_condition: str = "natural"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms, key=lambda a: a.position)))
        object.__setattr__(self, "length", float(self.length))
        is_valid, message = validate_string(self)
        if not is_valid:
            raise DomainError(message)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.length)

    @property
    def last_feature(self) -> float:
        """Last segment start or atom position; structure beyond it is one segment."""
        points = [seg.s_lo for seg in self.segments] + [a.position for a in self.atoms]
        return max(points)

    @property
    def total_mass_is_finite(self) -> bool:
        last = self.segments[-1]
        return math.isfinite(last.mass(last.s_lo, self.length))

    @property
    def moment_is_finite(self) -> bool:
        """Finiteness of the moment of A about R (finite strings only)."""
        if not self.is_finite:
            return False
        exponent = self.segments[-1].right_singular_exponent()
        return exponent is None or exponent > -2.0

    def atom_mass_at(self) -> Dict[float, float]:
        masses: Dict[float, float] = {}
        for atom in self.atoms:
            masses[atom.position] = masses.get(atom.position, 0.0) + atom.mass
        return masses

    def density_vanishes_beyond(self, s: float) -> bool:
        if any(a.position > s for a in self.atoms):
            return False
        for seg in self.segments:
            if seg.s_hi <= s:
                continue
            if seg.family == "tabulated":
                lo = max(seg.s_lo, s)
                tail = [v for k, v in zip(seg.knots, seg.values) if k >= lo]
                if float(np.interp(lo, seg.knots, seg.values)) != 0.0 or any(tail):
                    return False
            elif seg.c != 0.0:
                return False
        return True

    def segment_at(self, s: float) -> DensitySegment:
        starts = np.array([seg.s_lo for seg in self.segments])
        return self.segments[int(_piece_index(starts, s))]

    def to_dict(self) -> Dict[str, object]:
        return {
            "segments": [seg.to_dict() for seg in self.segments],
            "atoms": [{"s": a.position, "mass": a.mass} for a in self.atoms],
            "R": None if math.isinf(self.length) else self.length,
            "end": self.end_condition,
        }


def validate_string(string: KreinString) -> Tuple[bool, str]:
    """
    Validate the tiling, atoms and end condition of a string

    Args:
        string: String to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    segs = string.segments
    if not segs:
        return False, "A string needs at least one segment"
    if segs[0].s_lo != 0.0:
        return False, "Segments must start at s = 0"
    for left, right in zip(segs, segs[1:]):
        if not _close(left.s_hi, right.s_lo):
            return False, f"Segments must tile without gaps: {left.s_hi} vs {right.s_lo}"
    if not _close(segs[-1].s_hi, string.length):
        return False, f"Last segment must end at R = {string.length}"
    for seg in segs[:-1]:
        exponent = seg.right_singular_exponent()
        if exponent is not None and exponent <= -1.0:
            return False, f"Density is not locally finite at s = {seg.s_hi}"
    for atom in string.atoms:
        if atom.position >= string.length:
            return False, f"Atom at {atom.position} lies outside [0, R)"

    end = string.end_condition
    if end not in END_CONDITIONS:
        return False, f"Unknown end condition '{end}'"
    if not string.is_finite:
        if end != "natural":
            return False, "Infinite strings take the natural end condition"
        return True, ""
    if end == "natural":
        return False, "Finite strings need a dirichlet or neumann end condition"
    if end == "neumann" and not string.total_mass_is_finite:
        return False, "A neumann end needs finite total mass; the dirichlet condition is forced"
    return True, ""


def make_string(segments: Sequence[DensitySegment] = (), atoms: Sequence[Atom] = (),
                length: Optional[float] = None, end_condition: Optional[str] = None) -> KreinString:
    """
    Build a string, inferring the length and the end condition where possible

    Args:
        segments: Density segments tiling [0, R); empty means zero density
        atoms: Point masses
        length: R, defaults to the end of the last segment (infinite without segments)
        end_condition: natural, dirichlet or neumann

    Returns:
        Validated KreinString
    """
    segments = list(segments)
    if not segments:
        R = math.inf if length is None else float(length)
        segments = [DensitySegment(0.0, R, "constant", c=0.0)]
    R = segments[-1].s_hi if length is None else float(length)

    if end_condition is None:
        if math.isinf(R):
            end_condition = "natural"
        else:
            last = segments[-1]
            mass_finite = math.isfinite(last.mass(last.s_lo, R))
            if not mass_finite:
                end_condition = "dirichlet"
            else:
                raise DomainError(
                    "A finite string with finite moment needs an explicit end condition (dirichlet or neumann)"
                )
    return KreinString(tuple(segments), tuple(atoms), R, end_condition)


def density_at(string: KreinString, s) -> np.ndarray:
    """Vectorised density of the string (atoms excluded)."""
    return _evaluate_pieces(string.segments, s)


def cumulative_mass(string: KreinString, s: float) -> float:
    """
    Distribution function A([0, s))

    Args:
        string: The string
        s: Point in [0, R]

    Returns:
        Density mass on [0, s) plus atoms at positions < s
    """
    if s < 0.0 or s > string.length:
        raise DomainError(f"cumulative_mass needs 0 <= s <= R, got s={s}, R={string.length}")
    total = 0.0
    for seg in string.segments:
        if seg.s_lo >= s:
            break
        total += seg.mass(seg.s_lo, min(seg.s_hi, s))
    total += sum(atom.mass for atom in string.atoms if atom.position < s)
    return total


def distribution_function(string: KreinString, s_values) -> np.ndarray:
    return np.array([cumulative_mass(string, float(s)) for s in np.atleast_1d(s_values)])


def is_positive_lipschitz(string: KreinString) -> bool:
    """Positive density, no atoms, continuous across internal boundaries."""
    if string.atoms or not all(seg.is_positive for seg in string.segments):
        return False
    for left, right in zip(string.segments, string.segments[1:]):
        a = float(left.density(left.s_hi))
        b = float(right.density(right.s_lo))
        if not math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12):
            return False
    return True


# =============================================================================
# COEFFICIENTS a(t) AND THE CHANGE OF VARIABLE
# =============================================================================

@dataclass(frozen=True)
class CoefficientA:
    """Coefficient a(t) on [0, r); pieces use the DensitySegment menu in the t variable."""
    pieces: Tuple[DensitySegment, ...]
    length: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "length", float(self.length))
        is_valid, message = validate_coefficient(self)
        if not is_valid:
            raise InvalidCoefficientError(message)

    def to_dict(self) -> Dict[str, object]:
        return {
            "pieces": [piece.to_dict() for piece in self.pieces],
            "r": None if math.isinf(self.length) else self.length,
        }


def _piece_sigma(piece: DensitySegment, a: float, b: float) -> float:
    if piece.family == "tabulated":
        return _reciprocal_linear_integral(piece.knots, piece.values, a, b)
    return piece.reciprocal().mass(a, b)


def validate_coefficient(coeff: CoefficientA) -> Tuple[bool, str]:
    """
    Validate a coefficient: tiling, positivity and local integrability of 1/a

    Args:
        coeff: Coefficient to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    pieces = coeff.pieces
    if not pieces:
        return False, "A coefficient needs at least one piece"
    if pieces[0].s_lo != 0.0:
        return False, "Coefficient pieces must start at t = 0"
    for left, right in zip(pieces, pieces[1:]):
        if not _close(left.s_hi, right.s_lo):
            return False, "Coefficient pieces must tile without gaps"
    if not _close(pieces[-1].s_hi, coeff.length):
        return False, "Last coefficient piece must end at r"
    for i, piece in enumerate(pieces):
        if not piece.is_positive:
            return False, "Coefficient a(t) must be positive"
        try:
            sigma = _piece_sigma(piece, piece.s_lo, piece.s_hi)
        except DomainError:
            return False, "1/a is not integrable at the start of a piece"
        if not math.isfinite(sigma) and i < len(pieces) - 1:
            return False, f"sigma(t) is infinite before t = {piece.s_hi}"
    return True, ""


def coefficient_value(coeff: CoefficientA, t) -> np.ndarray:
    return _evaluate_pieces(coeff.pieces, t)


def coefficient_sigma(coeff: CoefficientA, t: float) -> float:
    """sigma(t) = integral of 1/a over [0, t]."""
    if t < 0.0 or t > coeff.length:
        raise DomainError(f"sigma needs 0 <= t <= r, got t={t}")
    total = 0.0
    for piece in coeff.pieces:
        if piece.s_lo >= t:
            break
        total += _piece_sigma(piece, piece.s_lo, min(piece.s_hi, t))
    return total


def _push_forward_closed(piece: DensitySegment, s_lo: float, s_hi: float, s_origin: float) -> DensitySegment:
    c, p, q, r = piece.c, piece.p, piece.q, piece.r
    family = piece.family
    if (family == "constant" or (family == "power" and p == 0.0)
            or (family == "exponential" and q == 0.0)
            or (family == "rational_power" and (q == 0.0 or r == 0.0))):
        return DensitySegment(s_lo, s_hi, "constant", c=c * c)
    if family == "power":
        exponent = 2.0 * p / (1.0 - p)
        coef = c * c * (c * (1.0 - p)) ** exponent
        return DensitySegment(s_lo, s_hi, "power", c=coef, p=exponent, origin=s_origin)
    if family == "exponential":
        return DensitySegment(s_lo, s_hi, "rational_power", c=c * c, q=-c * q, r=-2.0, origin=s_origin)
    if r == 1.0:
        return DensitySegment(s_lo, s_hi, "exponential", c=c * c, q=2.0 * c * q, origin=s_origin)
    return DensitySegment(s_lo, s_hi, "rational_power", c=c * c, q=c * q * (1.0 - r),
                          r=2.0 * r / (1.0 - r), origin=s_origin)


def _refined_knots(lo: float, hi: float, base: Sequence[float], n_knots: int) -> np.ndarray:
    """Original knots plus geometric (accumulating at lo) and uniform refinements."""
    half = max(n_knots // 2, 2)
    geometric = lo + (hi - lo) * np.geomspace(1e-6, 1.0, half)
    uniform = np.linspace(lo, hi, half)
    return np.unique(np.concatenate((np.asarray(base, dtype=float), geometric, uniform, [lo, hi])))


def _push_forward_tabulated(piece: DensitySegment, s0: float, n_knots: int) -> Tuple[DensitySegment, float]:
    t_knots = _refined_knots(piece.s_lo, piece.s_hi, piece.knots, n_knots)
    a_values = np.interp(t_knots, piece.knots, piece.values)
    steps = [_reciprocal_linear_integral(piece.knots, piece.values, a, b)
             for a, b in zip(t_knots[:-1], t_knots[1:])]
    sigma = np.concatenate(([0.0], np.cumsum(steps)))
    ds = float(sigma[-1])
    segment = DensitySegment(s0, s0 + ds, "tabulated",
                             knots=tuple(s0 + sigma), values=tuple(a_values ** 2))
    return segment, ds


def from_coefficient_a(coeff: CoefficientA, n_knots: int = DEFAULT_PUSH_FORWARD_KNOTS,
                       end_condition: Optional[str] = None) -> KreinString:
    """
    Push a coefficient a(t) forward to the string A(sigma(t)) = a(t)^2

    Args:
        coeff: Coefficient on [0, r)
        n_knots: Knot count for tabulated pieces
        end_condition: Override for finite R; otherwise neumann when a is integrable, dirichlet when not

    Returns:
        The corresponding KreinString
    """
    s0 = 0.0
    segments: List[DensitySegment] = []
    for i, piece in enumerate(coeff.pieces):
        if piece.family == "tabulated":
            segment, ds = _push_forward_tabulated(piece, s0, n_knots)
        else:
            reciprocal = piece.reciprocal()
            ds = reciprocal.mass(piece.s_lo, piece.s_hi)
            if not math.isfinite(ds) and i < len(coeff.pieces) - 1:
                raise InvalidCoefficientError(f"sigma(t) is infinite before t = {piece.s_hi}")
            s_origin = s0 - reciprocal.primitive(piece.s_lo - piece.x0)
            segment = _push_forward_closed(piece, s0, s0 + ds, s_origin)
        segments.append(segment)
        s0 += ds
        logger.debug("pushed %s piece [%g, %g) to [%g, %g)", piece.family, piece.s_lo, piece.s_hi,
                     segment.s_lo, segment.s_hi)

    R = s0
    if math.isinf(R):
        end = "natural"
    elif end_condition is not None:
        end = end_condition
    else:
        last = coeff.pieces[-1]
        integrable = math.isfinite(last.mass(last.s_lo, last.s_hi))
        end = "neumann" if integrable else "dirichlet"
        if end == "neumann" and not math.isfinite(segments[-1].mass(segments[-1].s_lo, R)):
            end = "dirichlet"
    return make_string(segments, (), R, end)


def _root_mass_function(string: KreinString) -> Callable[[float], float]:
    """s -> integral of sqrt(A) over [0, s]."""
    roots = [None if seg.family == "tabulated" else seg.sqrt_segment() for seg in string.segments]

    def root_mass(s: float) -> float:
        total = 0.0
        for seg, root_seg in zip(string.segments, roots):
            if seg.s_lo >= s:
                break
            b = min(seg.s_hi, s)
            if root_seg is None:
                inner = [k for k in seg.knots if seg.s_lo < k < b]
                value, _ = integrate.quad(lambda x: math.sqrt(float(np.interp(x, seg.knots, seg.values))),
                                          seg.s_lo, b, points=inner[:50] or None, limit=200)
                total += value
            else:
                total += root_seg.mass(seg.s_lo, b)
        return total

    return root_mass


def to_coefficient_a(string: KreinString, n_knots: int = DEFAULT_COEFFICIENT_KNOTS,
                     t_max: Optional[float] = None) -> CoefficientA:
    """
    Invert the change of variable: tabulated a(t) = sqrt(A(sigma(t)))

    Args:
        string: Atom-free string with positive density
        n_knots: Number of t knots (geometric, accumulating at t = 0)
        t_max: Last knot; defaults to r, or to a far point when r is infinite

    Returns:
        Tabulated CoefficientA on [0, t_max]
    """
    if string.atoms:
        raise NotRepresentableError("Strings with atoms have no coefficient a(t)")
    if not all(seg.is_positive for seg in string.segments):
        raise NotRepresentableError("Density vanishes on a set of positive measure")

    root_mass = _root_mass_function(string)
    if string.is_finite:
        s_far = string.length - 1e-6 * (string.length - string.last_feature)
    else:
        s_far = 1e3 * max(1.0, string.last_feature)
    t_total = root_mass(string.length) if string.is_finite else math.inf

    if t_max is None:
        if math.isfinite(t_total):
            s_far = string.length
            t_max = t_total
        else:
            t_max = root_mass(s_far)
    else:
        while root_mass(s_far) < t_max:
            if string.is_finite:
                s_far = string.length - 0.5 * (string.length - s_far)
            else:
                s_far *= 2.0

    t_knots = np.concatenate(([0.0], np.geomspace(1e-6 * t_max, t_max, max(n_knots - 1, 2))))
    s_knots = np.zeros_like(t_knots)
    for i, t in enumerate(t_knots[1:], start=1):
        s_knots[i] = optimize.brentq(lambda s: root_mass(s) - t, s_knots[i - 1], s_far,
                                     xtol=INVERSION_XTOL)
    with np.errstate(invalid="ignore"):
        a_values = np.sqrt(density_at(string, s_knots))
    bad = ~np.isfinite(a_values) | (a_values <= 0.0)
    if bad[0]:
        a_values[0] = a_values[1]
    if np.any(bad[1:]):
        a_values[1:][bad[1:]] = np.interp(t_knots[1:][bad[1:]], t_knots[~bad], a_values[~bad])

    piece = DensitySegment(0.0, float(t_knots[-1]), "tabulated", knots=tuple(t_knots), values=tuple(a_values))
    return CoefficientA((piece,), float(t_knots[-1]))


# =============================================================================
# COMPLEMENTARY AND SHIFTED STRINGS
# =============================================================================

def _inverse_closed(seg: DensitySegment, u_lo: float, u_hi: float, u_origin: float) -> DensitySegment:
    """Density of the inverse distribution of a positive closed-form segment."""
    c, p, q, r = seg.c, seg.p, seg.q, seg.r
    family = seg.family
    if (family == "constant" or (family == "power" and p == 0.0)
            or (family == "exponential" and q == 0.0)
            or (family == "rational_power" and (q == 0.0 or r == 0.0))):
        return DensitySegment(u_lo, u_hi, "constant", c=1.0 / c)
    if family == "power":
        gamma = 1.0 / (p + 1.0)
        scale = ((p + 1.0) / c) ** gamma
        return DensitySegment(u_lo, u_hi, "power", c=scale * gamma, p=gamma - 1.0, origin=u_origin)
    if family == "exponential":
        return DensitySegment(u_lo, u_hi, "rational_power", c=1.0 / c, q=q / c, r=-1.0, origin=u_origin)
    if r == -1.0:
        return DensitySegment(u_lo, u_hi, "exponential", c=1.0 / c, q=q / c, origin=u_origin)
    return DensitySegment(u_lo, u_hi, "rational_power", c=1.0 / c, q=q * (r + 1.0) / c,
                          r=-r / (r + 1.0), origin=u_origin)


def _inverse_tabulated(seg: DensitySegment, u_lo: float) -> DensitySegment:
    if not seg.is_positive:
        raise NotRepresentableError("Tabulated density with zeros has no tabulated complement")
    knots = np.asarray(seg.knots)
    steps = [_linear_integral(seg.knots, seg.values, a, b) for a, b in zip(knots[:-1], knots[1:])]
    u_knots = u_lo + np.concatenate(([0.0], np.cumsum(steps)))
    return DensitySegment(u_lo, float(u_knots[-1]), "tabulated",
                          knots=tuple(u_knots), values=tuple(1.0 / np.asarray(seg.values)))


def _split_at_atoms(string: KreinString) -> List[DensitySegment]:
    cuts = sorted({a.position for a in string.atoms})
    pieces: List[DensitySegment] = []
    for seg in string.segments:
        inner = [x for x in cuts if seg.s_lo < x < seg.s_hi]
        bounds = [seg.s_lo] + inner + [seg.s_hi]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            pieces.append(seg if (lo, hi) == (seg.s_lo, seg.s_hi) else seg.with_bounds(lo, hi))
    return pieces


def _append_zero(segments: List[DensitySegment], lo: float, hi: float) -> None:
    last = segments[-1] if segments else None
    if last is not None and last.family == "constant" and last.c == 0.0 and last.s_hi == lo:
        segments[-1] = last.with_bounds(last.s_lo, hi)
    else:
        segments.append(DensitySegment(lo, hi, "constant", c=0.0))


def complementary(string: KreinString) -> KreinString:
    """
    String whose distribution function is the left-continuous generalised inverse of A([0, s))

    Plateaus of A([0, .)) become atoms, atoms become zero-density segments.

    Args:
        string: The string A

    Returns:
        The complementary string B, with psi_A * psi_B = lambda
    """
    atoms = string.atom_mass_at()
    u = 0.0
    b_segments: List[DensitySegment] = []
    b_atoms: Dict[float, float] = {}
    b_end: Optional[str] = None
    b_length = 0.0

    for piece in _split_at_atoms(string):
        mass = atoms.pop(piece.s_lo, 0.0)
        if mass > 0.0:
            _append_zero(b_segments, u, u + mass)
            u += mass
        if piece.is_zero:
            if math.isinf(piece.s_hi):
                b_atoms.pop(u, None)
                b_length, b_end = u, "dirichlet"
                break
            b_atoms[u] = b_atoms.get(u, 0.0) + (piece.s_hi - piece.s_lo)
            continue
        if piece.family == "tabulated":
            b_seg = _inverse_tabulated(piece, u)
            du = b_seg.s_hi - u
        else:
            du = piece.mass(piece.s_lo, piece.s_hi)
            u_origin = u - piece.primitive(piece.s_lo - piece.x0)
            b_seg = _inverse_closed(piece, u, u + du, u_origin)
        b_segments.append(b_seg)
        u += du
        if math.isinf(u):
            b_length, b_end = math.inf, "natural"
            break

    if b_end is None:
        if string.end_condition in ("natural", "neumann"):
            b_atoms.pop(u, None)
            b_length, b_end = u, "dirichlet"
        elif u in b_atoms:
            # a terminal atom cannot sit at a neumann end; the zero tail is equivalent
            _append_zero(b_segments, u, math.inf)
            b_length, b_end = math.inf, "natural"
        else:
            b_length, b_end = u, "neumann"

    if b_length <= 0.0:
        raise NotRepresentableError("The zero string has no complementary string")
    if not b_segments:
        b_segments.append(DensitySegment(0.0, b_length, "constant", c=0.0))
    b_atom_list = [Atom(pos, m) for pos, m in sorted(b_atoms.items()) if pos < b_length]
    logger.debug("complementary string: %d segments, %d atoms, R=%g, %s",
                 len(b_segments), len(b_atom_list), b_length, b_end)
    return KreinString(tuple(b_segments), tuple(b_atom_list), b_length, b_end)


def shift_string(coeff: CoefficientA, mu: float, solver: Optional[Callable] = None,
                 n_knots: int = DEFAULT_COEFFICIENT_KNOTS) -> CoefficientA:
    """
    Coefficient b(t) = a(t) * phi_mu(sigma(t))^2 of the shifted characteristic psi(mu + .) - psi(mu)

    Args:
        coeff: Coefficient a(t)
        mu: Shift, nonnegative
        solver: phi-profile solver (string, lambda, s_grid) -> profile; defaults to ode_engine.phi
        n_knots: Knot count of the tabulated part

    Returns:
        CoefficientA: an exact head piece near t = 0 followed by a tabulated piece
    """
    from . import ode_engine

    if mu < 0.0 or not math.isfinite(mu):
        raise DomainError(f"Shift must be a nonnegative real, got {mu}")
    string = from_coefficient_a(coeff)
    if mu == 0.0 and ode_engine.psi_at_zero(string) == 0.0:
        return coeff
    solver = solver or ode_engine.phi

    if math.isfinite(coeff.length):
        t_max = coeff.length * (1.0 - 1e-6) if string.end_condition == "dirichlet" else coeff.length
    else:
        candidates = [2.0 ** k for k in range(-2, 11)]
        s_candidates = [coefficient_sigma(coeff, t) for t in candidates]
        usable = [(t, s) for t, s in zip(candidates, s_candidates) if math.isfinite(s) and s < string.length]
        profile = solver(string, mu, np.array([s for _, s in usable]))
        t_max = usable[-1][0]
        for (t, _), value in zip(usable, profile.phi):
            if value * value < SHIFT_CUTOFF:
                t_max = t
                break
        else:
            logger.warning("phi_%g has not decayed by t = %g; truncating there", mu, t_max)

    head_piece = coeff.pieces[0]
    t_head = min(SHIFT_HEAD_FRACTION * t_max, 0.5 * (head_piece.s_hi - head_piece.s_lo))
    half = max(n_knots // 2, 2)
    t_knots = np.unique(np.concatenate((np.linspace(t_head, t_max, half),
                                        np.geomspace(t_head, t_max, half))))
    s_knots = np.array([coefficient_sigma(coeff, float(t)) for t in t_knots])
    s_knots = np.minimum(s_knots, np.nextafter(string.length, 0.0))
    profile = solver(string, mu, s_knots)
    b_values = coefficient_value(coeff, t_knots) * np.asarray(profile.phi) ** 2

    head = head_piece.with_bounds(0.0, t_head).scaled(float(profile.phi[0]) ** 2)
    tail = DensitySegment(t_head, float(t_knots[-1]), "tabulated", knots=tuple(t_knots), values=tuple(b_values))
    return CoefficientA((head, tail), float(t_knots[-1]))
