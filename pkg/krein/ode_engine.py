"""
Krein String Toolkit - ODE Engine
Fundamental solutions of f'' = lambda f A(ds), the characteristic psi(lambda)
and the profile phi_lambda(s).

The forward march integrates (f_N, f_N', f_D, f_D') cell by cell with DOP853,
applying atom jumps between cells and renormalising by a common factor when
the values grow past RENORMALIZE_THRESHOLD. Density singularities at a segment
end are absorbed by graded coordinates s = lo + u**k (or hi - u**k).

phi is obtained from a backward march of q = -phi'/phi (or of p = 1/q relative
to R - s near a Dirichlet end), which never subtracts two exponentially large quantities.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from utils.constants import (
    ODE_METHOD, ODE_RTOL, ODE_ATOL, DEFAULT_STEPS_PER_SEGMENT, RENORMALIZE_THRESHOLD,
    LOG_RESCALE_STEP, UNDERFLOW_LOG, PSI_TOL, MAX_REFINEMENTS, DECAY_LENGTH,
    GRADED_CELL_WIDTH, EXPONENT_SNAP, DIRICHLET_START_OFFSET, DIRICHLET_SEED_RATIO,
    DIRICHLET_SEED_REFINEMENTS, CANCELLATION_DIGITS, PSI_CROSSCHECK_RTOL
)
from .errors import AccuracyError, DomainError
from .string_core import DensitySegment, KreinString, density_at

logger = logging.getLogger(__name__)


# =============================================================================
# RESULT TYPES
# =============================================================================

@dataclass(frozen=True)
class TailModel:
    """State of the march at its last point, used to continue it analytically."""
    s_end: float
    ratio: float       # f_D / f_N
    rho: float         # lambda * A * (f_N / f_N')**2
    j_linear: float    # integral of f_N**-2 along the linear continuation
    j_model: float     # j_linear / (1 + rho)
    vanishing: bool    # density is zero beyond s_end


@dataclass(frozen=True)
class StringSolution:
    """Fundamental pair at the knots; true values are the scaled ones times exp(log_scale)."""
    lam: float
    s_grid: np.ndarray
    f_neumann: np.ndarray
    fN_prime: np.ndarray
    f_dirichlet: np.ndarray
    fD_prime: np.ndarray
    log_scale: np.ndarray
    psi_value: float
    tail_model: Optional[TailModel] = None

    @property
    def wronskian(self) -> np.ndarray:
        scaled = self.fD_prime * self.f_neumann - self.fN_prime * self.f_dirichlet
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.where(scaled > 0.0, np.exp(np.log(np.abs(scaled)) + 2.0 * self.log_scale), np.nan)

    def wronskian_defect(self, max_log: float = 5.0) -> float:
        """Largest |W - 1| over knots where log f_N <= max_log (beyond that W is lost to cancellation)."""
        with np.errstate(divide="ignore"):
            log_fn = np.log(np.abs(self.f_neumann)) + self.log_scale
        mask = log_fn <= max_log
        if not np.any(mask):
            return 0.0
        return float(np.max(np.abs(self.wronskian[mask] - 1.0)))

    def true_values(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        with np.errstate(over="ignore"):
            scale = np.exp(self.log_scale)
        return (self.f_neumann * scale, self.fN_prime * scale,
                self.f_dirichlet * scale, self.fD_prime * scale)


@dataclass(frozen=True)
class PhiProfile:
    lam: float
    s_grid: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    psi_value: float
    cancellation: np.ndarray   # knots where f_N - f_D/psi loses CANCELLATION_DIGITS digits

    @property
    def clamped(self) -> bool:
        return bool(np.any(self.cancellation))


@dataclass(frozen=True)
class EnergyBreakdown:
    """Parts of the minimised energy: gradient + lambda * mass = psi."""
    gradient: float
    mass: float
    psi: float


# =============================================================================
# CELLS
# =============================================================================

def _scalar_density(seg: DensitySegment) -> Callable[[float], float]:
    if seg.family == "tabulated":
        xs, ys = np.asarray(seg.knots), np.asarray(seg.values)
        return lambda s: float(np.interp(s, xs, ys))
    c, p, q, r, x0 = seg.c, seg.p, seg.q, seg.r, seg.x0
    if c == 0.0:
        return lambda s: 0.0
    if seg.family == "constant":
        return lambda s: c
    if seg.family == "power":
        def power(s: float) -> float:
            x = s - x0
            if x <= 0.0:
                return math.inf if p < 0.0 else (c if p == 0.0 else 0.0)
            return c * x ** p
        return power
    if seg.family == "rational_power":
        def rational(s: float) -> float:
            base = 1.0 + q * (s - x0)
            if base <= 0.0:
                return math.inf if r < 0.0 else (c if r == 0.0 else 0.0)
            return c * base ** r
        return rational
    return lambda s: c * math.exp(min(q * (s - x0), 700.0))


class _Cell:
    """An s-interval of one segment with its integration coordinate t."""

    def __init__(self, lo: float, hi: float, segment: DensitySegment, side: str = "plain", k: float = 1.0):
        self.lo, self.hi, self.segment, self.side, self.k = lo, hi, segment, side, k
        self._density = _scalar_density(segment)
        if side != "plain":
            exponent = segment.p if segment.family == "power" else segment.r
            e = k * (1.0 + exponent) - 1.0
            self._w_exponent = 0.0 if abs(e) < EXPONENT_SNAP else e
            self._w_coef = float(segment.graded_weight(1.0, k, side))

    def t_of(self, s):
        if self.side == "plain":
            return s
        if self.side == "left":
            return np.maximum(np.asarray(s, dtype=float) - self.lo, 0.0) ** (1.0 / self.k)
        return np.maximum(self.hi - np.asarray(s, dtype=float), 0.0) ** (1.0 / self.k)

    def s_of(self, t: float) -> float:
        if self.side == "plain":
            return t
        if self.side == "left":
            return self.lo + t ** self.k
        return self.hi - t ** self.k

    def gap(self, t: float, R: float) -> float:
        """R - s(t), exact in graded coordinates that end at R."""
        if self.side == "right" and self.hi == R:
            return t ** self.k
        return R - self.s_of(t)

    def jacobian(self, t: float) -> Tuple[float, float]:
        """(ds/dt, A(s) ds/dt) at t."""
        if self.side == "plain":
            return 1.0, self._density(t)
        j = self.k * t ** (self.k - 1.0)
        w = self._w_coef if self._w_exponent == 0.0 else self._w_coef * t ** self._w_exponent
        return (j, w) if self.side == "left" else (-j, -w)


def _cell_layout(string: KreinString) -> List[_Cell]:
    cells: List[_Cell] = []
    for seg in string.segments:
        lo, hi = seg.s_lo, seg.s_hi
        left = seg.left_singular_exponent()
        right = seg.right_singular_exponent()
        if right is not None and right <= -1.0:
            right = None
        width = min(0.5 * (hi - lo), GRADED_CELL_WIDTH) if math.isfinite(hi) else GRADED_CELL_WIDTH
        a, b = lo, hi
        if left is not None:
            cells.append(_Cell(lo, lo + width, seg, "left", 1.0 / (1.0 + left)))
            a = lo + width
        if right is not None:
            b = hi - width
        if b > a:
            cells.append(_Cell(a, b, seg))
        if right is not None:
            cells.append(_Cell(hi - width, hi, seg, "right", 1.0 / (1.0 + right)))
    return cells


class _Layout:
    """Cells plus atom positions; yields the pieces between consecutive breakpoints."""

    def __init__(self, string: KreinString):
        self.string = string
        self.cells = _cell_layout(string)
        self.starts = np.array([cell.lo for cell in self.cells])
        self.atoms: Dict[float, float] = string.atom_mass_at()
        bounds = {cell.lo for cell in self.cells} | {cell.hi for cell in self.cells if math.isfinite(cell.hi)}
        self.breaks = np.array(sorted(bounds | set(self.atoms)))

    def cell_at(self, s: float) -> _Cell:
        idx = int(np.clip(np.searchsorted(self.starts, s, side="right") - 1, 0, len(self.cells) - 1))
        return self.cells[idx]

    def pieces(self, a: float, b: float) -> Iterator[Tuple[float, float, _Cell]]:
        inner = self.breaks[(self.breaks > a) & (self.breaks < b)]
        points = [a] + [float(x) for x in inner] + [b]
        for lo, hi in zip(points[:-1], points[1:]):
            if hi > lo:
                yield lo, hi, self.cell_at(0.5 * (lo + hi))


# =============================================================================
# INTEGRATION
# =============================================================================

def _terminal(fn: Callable) -> Callable:
    fn.terminal = True
    fn.direction = 1
    return fn


def _solve_piece(rhs: Callable, t0: float, t1: float, y: np.ndarray, t_eval: np.ndarray,
                 max_step: float, overflow: Callable, renormalise: Callable,
                 on_record: Callable, stop: Optional[Callable] = None) -> Tuple[np.ndarray, Optional[float]]:
    """
    Integrate across one piece, restarting after each renormalisation

    Args:
        rhs: Right-hand side in the piece's t coordinate
        t0, t1: Piece bounds in t (either direction)
        y: Initial state
        t_eval: Record points inside [t0, t1]; every one is reported exactly once
        max_step: Step cap for the integrator
        overflow: Terminal event that triggers renormalise
        renormalise: Maps the state at the event to its rescaled value
        on_record: Called with (index into t_eval, state)
        stop: Optional terminal event that ends the piece early

    Returns:
        Tuple of (final state, t where stop fired or None)
    """
    sign = 1.0 if t1 >= t0 else -1.0
    t_eval = np.asarray(t_eval, dtype=float)
    keys = sign * t_eval
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    cursor = 0
    events = [overflow] + ([stop] if stop is not None else [])
    y = np.asarray(y, dtype=float)

    while True:
        while cursor < len(keys) and keys[cursor] <= sign * t0:
            on_record(order[cursor], y)
            cursor += 1
        ahead = keys[cursor:]
        targets = sign * np.unique(ahead[ahead < sign * t1])
        sol = integrate.solve_ivp(rhs, (t0, t1), y, method=ODE_METHOD, t_eval=np.append(targets, t1),
                                  events=events, rtol=ODE_RTOL, atol=ODE_ATOL, max_step=max_step)
        if sol.status == -1:
            raise AccuracyError(f"ODE integration failed: {sol.message}")
        # sol.t stays a list when an event fires before the first t_eval point
        ts = np.asarray(sol.t, dtype=float)
        ys = np.asarray(sol.y, dtype=float).reshape(y.size, -1)
        hits = ts.size - (1 if sol.status == 0 else 0)
        for j in range(hits):
            while cursor < len(keys) and keys[cursor] <= sign * ts[j]:
                on_record(order[cursor], ys[:, j])
                cursor += 1
        if sol.status == 0:
            y_end = ys[:, -1]
            while cursor < len(keys):
                on_record(order[cursor], y_end)
                cursor += 1
            return y_end, None
        if stop is not None and sol.t_events[1].size:
            return sol.y_events[1][0], float(sol.t_events[1][0])
        t0 = float(sol.t_events[0][0])
        y = renormalise(np.array(sol.y_events[0][0]))


def _step_cap(t0: float, t1: float, steps: int) -> float:
    return max(abs(t1 - t0) / max(steps, 1), 1e-300)


@_terminal
def _forward_overflow(t, y):
    return max(abs(y[0]), abs(y[2])) - RENORMALIZE_THRESHOLD


class _ForwardMarch:
    """Incremental march of y = (f_N, f_N', f_D, f_D') from s = 0."""

    def __init__(self, string: KreinString, lam: float, layout: Optional[_Layout] = None,
                 knots: Sequence[float] = (), steps: int = DEFAULT_STEPS_PER_SEGMENT):
        self.string = string
        self.lam = lam
        self.layout = layout or _Layout(string)
        self.steps = steps
        self.s = 0.0
        self.y = np.array([1.0, 0.0, 0.0, 1.0])
        self.log_scale = 0.0
        self.knots = np.asarray(knots, dtype=float)
        self.rec_y = np.full((self.knots.size, 4), np.nan)
        self.rec_log = np.zeros(self.knots.size)
        self.recorded = np.zeros(self.knots.size, dtype=bool)
        self._jump(self.layout.atoms.get(0.0, 0.0))
        self._record(self.knots == 0.0)

    @property
    def log_fn(self) -> float:
        return self.log_scale + math.log(max(abs(self.y[0]), 1e-300))

    def _jump(self, mass: float) -> None:
        if mass:
            self.y[1] += self.lam * mass * self.y[0]
            self.y[3] += self.lam * mass * self.y[2]

    def _record(self, mask: np.ndarray) -> None:
        self.rec_y[mask] = self.y
        self.rec_log[mask] = self.log_scale
        self.recorded[mask] = True

    def _renormalise(self, y: np.ndarray) -> np.ndarray:
        scale = max(abs(y[0]), abs(y[2]))
        self.log_scale += math.log(scale)
        logger.debug("renormalised forward march, log scale %.1f", self.log_scale)
        return y / scale

    def advance(self, s_target: float, stop_log: Optional[float] = None) -> bool:
        """March to s_target (atoms at s_target included). False when stop_log was reached first."""
        lam = self.lam
        for lo, hi, cell in self.layout.pieces(self.s, s_target):
            if stop_log is not None and self.log_fn >= stop_log:
                return False

            def rhs(t, y, cell=cell):
                ds, wa = cell.jacobian(t)
                return [ds * y[1], lam * wa * y[0], ds * y[3], lam * wa * y[2]]

            inner = np.flatnonzero((self.knots > lo) & (self.knots < hi))

            def on_record(i, y, inner=inner):
                j = inner[i]
                self.rec_y[j] = y
                self.rec_log[j] = self.log_scale
                self.recorded[j] = True

            stop = None
            if stop_log is not None:
                stop = _terminal(lambda t, y: self.log_scale + math.log(max(abs(y[0]), 1e-300)) - stop_log)
            t0, t1 = float(cell.t_of(lo)), float(cell.t_of(hi))
            y_end, t_stop = _solve_piece(rhs, t0, t1, self.y, np.atleast_1d(cell.t_of(self.knots[inner])),
                                         _step_cap(t0, t1, self.steps), _forward_overflow,
                                         self._renormalise, on_record, stop)
            self.y = np.array(y_end, dtype=float)
            if t_stop is not None:
                self.s = cell.s_of(t_stop)
                return False
            self.s = hi
            self._jump(self.layout.atoms.get(hi, 0.0))
            self._record(self.knots == hi)
        self.s = max(self.s, s_target)
        return True

    def tail_model(self) -> TailModel:
        fN, fNp, fD, _ = self.y
        s = self.s
        vanishing = self.string.density_vanishes_beyond(s)
        if fNp <= 0.0:
            return TailModel(s, fD / fN, 0.0, math.inf, math.inf, vanishing)
        j_linear = math.exp(-2.0 * self.log_scale) / (fN * fNp)
        a = 0.0 if vanishing else float(density_at(self.string, s))
        rho = self.lam * a * (fN / fNp) ** 2
        return TailModel(s, fD / fN, rho, j_linear, j_linear / (1.0 + rho), vanishing)


# =============================================================================
# BACKWARD RICCATI MARCH
# =============================================================================

@dataclass
class _BackwardRun:
    y: np.ndarray           # final state at s = 0-
    shift: float
    records: np.ndarray
    rec_shift: np.ndarray
    recorded: np.ndarray


def _backward(layout: _Layout, lam: float, s_start: float, y0: Sequence[float], knots: np.ndarray,
              form: str, steps: int = DEFAULT_STEPS_PER_SEGMENT) -> _BackwardRun:
    """
    March the Riccati state from s_start down to 0

    q form: y = (q, L, Em, Eg), q = -phi'/phi, L = log phi.
    p form: y = (w, M, Em, Eg), w = p - (R - s) with p = 1/q, phi = (R - s) exp(M).
    Em and Eg accumulate the mass and gradient integrals of phi**2 in the same scale.
    """
    R = layout.string.length
    shift = [0.0]
    records = np.full((knots.size, 4), np.nan)
    rec_shift = np.zeros(knots.size)
    recorded = np.zeros(knots.size, dtype=bool)
    y = np.array(y0, dtype=float)

    def record(mask, state):
        records[mask] = state
        rec_shift[mask] = shift[0]
        recorded[mask] = True

    def renormalise(state):
        state[1] -= LOG_RESCALE_STEP
        state[2:] *= math.exp(-2.0 * LOG_RESCALE_STEP)
        shift[0] += LOG_RESCALE_STEP
        return state

    overflow = _terminal(lambda t, state: state[1] - LOG_RESCALE_STEP)

    def jump(state, s):
        mass = layout.atoms.get(s, 0.0)
        if not mass:
            return state
        if form == "q":
            state[0] += lam * mass
            state[2] += mass * math.exp(2.0 * state[1])
        else:
            x = R - s
            p = x + state[0]
            state[2] += mass * x * x * math.exp(2.0 * state[1])
            state[0] = p / (1.0 + lam * mass * p) - x
        return state

    record(knots == s_start, y)
    y = jump(y, s_start)
    for lo, hi, cell in reversed(list(layout.pieces(0.0, s_start))):
        if form == "q":
            def rhs(t, state, cell=cell):
                ds, wa = cell.jacobian(t)
                q, growth = state[0], math.exp(2.0 * state[1])
                return [q * q * ds - lam * wa, -q * ds, -wa * growth, -q * q * ds * growth]
        else:
            def rhs(t, state, cell=cell):
                ds, wa = cell.jacobian(t)
                x = cell.gap(t, R)
                w, growth = state[0], math.exp(2.0 * state[1])
                p, x2 = x + w, x * x
                return [lam * wa * p * p, ds * w / (p * x),
                        -wa * x2 * growth, -ds * x2 * growth / (p * p)]

        inner = np.flatnonzero((knots > lo) & (knots < hi))

        def on_record(i, state, inner=inner):
            j = inner[i]
            records[j] = state
            rec_shift[j] = shift[0]
            recorded[j] = True

        t0, t1 = float(cell.t_of(hi)), float(cell.t_of(lo))
        y, _ = _solve_piece(rhs, t0, t1, y, np.atleast_1d(cell.t_of(knots[inner])),
                            _step_cap(t0, t1, steps), overflow, renormalise, on_record)
        y = np.array(y, dtype=float)
        record(knots == lo, y)
        y = jump(y, lo)
    return _BackwardRun(y, shift[0], records, rec_shift, recorded)


# =============================================================================
# PSI
# =============================================================================

@dataclass
class _PsiState:
    psi: float
    kind: str
    s_end: float


def _tail_kind(string: KreinString) -> str:
    if string.end_condition == "neumann":
        return "zero_tail"
    if string.end_condition == "natural":
        return "zero_tail" if string.density_vanishes_beyond(string.last_feature) else "persistent"
    if string.total_mass_is_finite:
        return "dirichlet_finite"
    return "dirichlet_moment" if string.moment_is_finite else "dirichlet_infinite"


def _pform_start(layout: _Layout, lam: float) -> Tuple[float, List[float]]:
    """
    Start of the backward march near a dirichlet end

    Near R, p = 1/q is (R - s) - lambda * I(s) up to a relative error of order
    (lambda * I(s) / (R - s))**2, with I(s) the integral of (R - s')**2 A(ds')
    over [s, R). The offset shrinks from a fraction of the last cell until the
    correction is small against R - s.
    """
    string = layout.string
    R = string.length
    atoms = [(pos, m) for pos, m in layout.atoms.items() if pos < R]
    offset = DIRICHLET_START_OFFSET * (R - layout.cells[-1].lo)
    for attempt in range(DIRICHLET_SEED_REFINEMENTS):
        if attempt:
            offset *= 0.1
        s_start = R - offset
        moment, _ = integrate.quad(lambda s: float(density_at(string, s)) * (R - s) ** 2, s_start, R, limit=200)
        moment += sum(m * (R - pos) ** 2 for pos, m in atoms if pos > s_start)
        if lam * moment <= DIRICHLET_SEED_RATIO * offset:
            break
    else:
        logger.warning("dirichlet start at R - %g: seed correction %.3g is not small", offset, lam * moment / offset)
    return s_start, [-lam * moment, 0.0, moment, offset]


def _psi_run(string: KreinString, lam: float, tol: float, march: _ForwardMarch) -> _PsiState:
    kind = _tail_kind(string)
    R = string.length

    if kind == "zero_tail":
        s_end = R if string.end_condition == "neumann" else string.last_feature
        march.advance(s_end)
        fN, fNp, fD, _ = march.y
        if fNp <= 0.0:
            return _PsiState(0.0, kind, s_end)
        inverse = fD / fN + math.exp(-2.0 * march.log_scale) / (fN * fNp)
        return _PsiState(1.0 / inverse, kind, s_end)

    if kind == "dirichlet_finite":
        march.advance(R)
        fN, _, fD, _ = march.y
        return _PsiState(fN / fD, kind, R)

    if kind == "dirichlet_moment":
        s_start, y0 = _pform_start(march.layout, lam)
        run = _backward(march.layout, lam, s_start, y0, np.empty(0), "p", march.steps)
        return _PsiState(1.0 / (R + run.y[0]), kind, s_start)

    estimate = None
    if kind == "persistent":
        base = string.last_feature
        distance = DECAY_LENGTH / math.sqrt(lam)
    else:
        base = string.last_feature
        distance = 0.5 * (R - base)
    for _ in range(MAX_REFINEMENTS):
        s_end = base + distance if kind == "persistent" else R - distance
        if s_end <= march.s or (kind != "persistent" and s_end >= R):
            break
        march.advance(s_end)
        tail = march.tail_model()
        if kind == "persistent":
            current = tail.ratio + tail.j_model
        else:
            fN, fNp, _, _ = march.y
            j_linear = distance * math.exp(-2.0 * march.log_scale) / (fN * (fN + fNp * distance))
            current = tail.ratio + min(j_linear, tail.j_model)
        logger.debug("psi refinement at s=%g: 1/psi=%.17g", s_end, current)
        if estimate is not None and abs(current - estimate) <= tol * current:
            return _PsiState(1.0 / current, kind, s_end)
        estimate = current
        distance = 2.0 * distance if kind == "persistent" else 0.5 * distance
    best = None if estimate is None else 1.0 / estimate
    raise AccuracyError(f"psi({lam}) did not converge after {MAX_REFINEMENTS} refinements", best)


def psi_at_zero(string: KreinString) -> float:
    """psi(0): zero for natural and neumann ends, 1/R for a dirichlet end."""
    if string.end_condition == "dirichlet":
        return 1.0 / string.length
    return 0.0


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0.0:
        raise DomainError(f"lambda must be a nonnegative real, got {lam}")
    return lam


def psi(string: KreinString, lam: float, tol: float = PSI_TOL,
        steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT) -> float:
    """
    Characteristic psi(lambda) of the string

    Args:
        string: The string
        lam: Spectral parameter, lambda >= 0 (lambda = 0 returns psi_at_zero)
        tol: Relative tolerance of the adaptive tail extension
        steps_per_segment: Minimum steps per cell

    Returns:
        psi(lambda)
    """
    lam = _check_lambda(lam)
    if lam == 0.0:
        return psi_at_zero(string)
    march = _ForwardMarch(string, lam, steps=steps_per_segment)
    state = _psi_run(string, lam, tol, march)
    logger.debug("psi(%g) = %.17g (%s, s_end=%g)", lam, state.psi, state.kind, state.s_end)
    return state.psi


def _default_grid(layout: _Layout, s_max: float, steps: int) -> np.ndarray:
    points = [0.0]
    for lo, hi, _ in layout.pieces(0.0, s_max):
        points.extend(np.linspace(lo, hi, steps + 1)[1:])
    return np.unique(np.array(points))


def solve_fundamental(string: KreinString, lam: float, s_max: float,
                      steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT,
                      s_grid: Optional[Sequence[float]] = None) -> StringSolution:
    """
    Fundamental pair f_N, f_D on [0, s_max]

    Args:
        string: The string
        lam: lambda >= 0
        s_max: End of the march, below R
        steps_per_segment: Knots per cell for the default grid, and minimum steps per cell
        s_grid: Optional knots in [0, s_max]

    Returns:
        StringSolution at the knots (derivatives are right derivatives at atoms)
    """
    lam = _check_lambda(lam)
    if not (0.0 <= s_max < string.length) or not math.isfinite(s_max):
        raise DomainError(f"s_max must satisfy 0 <= s_max < R, got {s_max}")
    layout = _Layout(string)
    grid = _default_grid(layout, s_max, steps_per_segment) if s_grid is None else np.asarray(s_grid, dtype=float)
    if grid.size and (grid.min() < 0.0 or grid.max() > s_max):
        raise DomainError("s_grid must lie inside [0, s_max]")

    if lam == 0.0:
        ones = np.ones_like(grid)
        return StringSolution(lam, grid, ones, np.zeros_like(grid), grid.copy(), ones.copy(),
                              np.zeros_like(grid), psi_at_zero(string), None)

    march = _ForwardMarch(string, lam, layout, grid, steps_per_segment)
    march.advance(s_max)
    values = march.rec_y
    solution = StringSolution(lam, grid, values[:, 0], values[:, 1], values[:, 2], values[:, 3],
                              march.rec_log.copy(), psi(string, lam), march.tail_model())
    logger.debug("solve_fundamental: lambda=%g, s_max=%g, %d knots", lam, s_max, grid.size)
    return solution


# =============================================================================
# PHI AND ENERGIES
# =============================================================================

@dataclass
class _ProfileRun:
    psi: float
    q0: float
    form: str
    s_start: float
    beyond: str            # "constant", "linear" or "zero" for knots past s_start
    run: Optional[_BackwardRun]
    march: _ForwardMarch


def _profile_run(string: KreinString, lam: float, knots: np.ndarray, tol: float, steps: int) -> _ProfileRun:
    layout = _Layout(string)
    march = _ForwardMarch(string, lam, layout, knots, steps)
    state = _psi_run(string, lam, tol, march)
    if state.psi == 0.0:
        return _ProfileRun(0.0, 0.0, "q", state.s_end, "constant", None, march)

    if state.kind in ("dirichlet_finite", "dirichlet_moment"):
        s_start, y0 = _pform_start(layout, lam)
        form, beyond = "p", "linear"
    elif state.kind == "zero_tail":
        s_start, y0 = state.s_end, [0.0, 0.0, 0.0, 0.0]
        form, beyond = "q", "constant"
    else:
        max_knot = float(knots.max()) if knots.size else 0.0
        if max_knot > march.s and march.log_fn < UNDERFLOW_LOG:
            march.advance(max_knot, stop_log=UNDERFLOW_LOG)
        s_start = march.s
        fN, fNp, _, _ = march.y
        a = float(density_at(string, s_start))
        q = lam * a * fN / fNp
        frac = lam * a / (q * q + lam * a) if q > 0.0 else 0.0
        y0 = [q, 0.0, frac * q / lam, (1.0 - frac) * q]
        form, beyond = "q", "zero"

    run = _backward(layout, lam, s_start, y0, knots, form, steps)
    q0 = run.y[0] if form == "q" else 1.0 / (string.length + run.y[0])
    if abs(q0 - state.psi) > PSI_CROSSCHECK_RTOL * state.psi:
        logger.warning("psi(%g): forward %.12g and backward %.12g estimates disagree", lam, state.psi, q0)
    return _ProfileRun(state.psi, q0, form, s_start, beyond, run, march)


def _check_knots(string: KreinString, s_grid) -> np.ndarray:
    knots = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if knots.size and (knots.min() < 0.0 or knots.max() >= string.length or not np.all(np.isfinite(knots))):
        raise DomainError("phi knots must lie in [0, R)")
    return knots


def phi(string: KreinString, lam: float, s_grid: Sequence[float], tol: float = PSI_TOL,
        steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT) -> PhiProfile:
    """
    Profile phi_lambda and its right derivative at the knots

    Args:
        string: The string
        lam: lambda >= 0
        s_grid: Knots in [0, R)
        tol: psi tolerance
        steps_per_segment: Minimum steps per cell

    Returns:
        PhiProfile with phi(0) = 1 and -phi'(0-) = psi(lambda)
    """
    lam = _check_lambda(lam)
    knots = _check_knots(string, s_grid)
    if lam == 0.0:
        slope = psi_at_zero(string)
        return PhiProfile(lam, knots, 1.0 - slope * knots, np.full_like(knots, -slope), slope,
                          np.zeros(knots.size, dtype=bool))

    prof = _profile_run(string, lam, knots, tol, steps_per_segment)
    if prof.run is None:
        return PhiProfile(lam, knots, np.ones_like(knots), np.zeros_like(knots), 0.0,
                          np.zeros(knots.size, dtype=bool))

    run, R = prof.run, string.length
    y_end = run.y
    values = np.zeros_like(knots)
    slopes = np.zeros_like(knots)
    inside = run.recorded
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        if prof.form == "q":
            log_end = y_end[1] + run.shift
            log_phi = run.records[inside, 1] + run.rec_shift[inside] - log_end
            values[inside] = np.exp(log_phi)
            slopes[inside] = -run.records[inside, 0] * values[inside]
        else:
            log_end = math.log(R) + y_end[1] + run.shift
            log_phi = np.log(R - knots[inside]) + run.records[inside, 1] + run.rec_shift[inside] - log_end
            values[inside] = np.exp(log_phi)
            slopes[inside] = -values[inside] / (run.records[inside, 0] + R - knots[inside])

        outside = ~inside
        if np.any(outside):
            if prof.beyond == "constant":
                values[outside] = math.exp(-log_end)
            elif prof.beyond == "linear":
                values[outside] = np.exp(np.log(R - knots[outside]) - log_end)
                slopes[outside] = -values[outside] / (R - knots[outside])

    march = prof.march
    cancellation = np.zeros(knots.size, dtype=bool)
    seen = march.recorded
    if np.any(seen):
        fN, fD = march.rec_y[seen, 0], march.rec_y[seen, 2]
        forward = fN - fD / prof.psi
        cancellation[seen] = np.abs(forward) < 10.0 ** (-CANCELLATION_DIGITS) * np.abs(fN)
    if np.any(cancellation):
        logger.warning("phi(%g): forward formula loses %d digits at %d knots; backward values used",
                       lam, CANCELLATION_DIGITS, int(cancellation.sum()))

    return PhiProfile(lam, knots, np.maximum(values, 0.0), np.minimum(slopes, 0.0), prof.psi, cancellation)


def phi_energy(string: KreinString, lam: float, tol: float = PSI_TOL,
               steps_per_segment: int = DEFAULT_STEPS_PER_SEGMENT) -> EnergyBreakdown:
    """Gradient and mass parts of the energy of phi_lambda; gradient + lambda * mass = psi."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        raise DomainError("phi_energy needs lambda > 0")
    prof = _profile_run(string, lam, np.empty(0), tol, steps_per_segment)
    if prof.run is None:
        return EnergyBreakdown(0.0, 0.0, 0.0)
    y = prof.run.y
    if prof.form == "q":
        norm = math.exp(-2.0 * y[1])
    else:
        norm = 1.0 / (string.length ** 2 * math.exp(2.0 * y[1]))
    return EnergyBreakdown(float(y[3] * norm), float(y[2] * norm), prof.psi)


def phi_mass_integral(string: KreinString, lam: float, tol: float = PSI_TOL) -> float:
    """Integral of phi_lambda**2 against A(ds), atoms included; equals dpsi/dlambda."""
    return phi_energy(string, lam, tol).mass
