"""
Krein String Toolkit - Self Test
Acceptance suites run by `python -m krein selftest`, and the seeded random
string generator they share with the test scripts.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from utils.constants import (
    CBF_GRID, DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, ENERGY_FD_STEP, EST_RTOL, NODAL_THRESHOLD,
    SELFTEST_SUITES
)
from . import catalog, cbf, extension, nodal, ode_engine, spectral
from .errors import InputError, KreinError
from .string_core import Atom, DensitySegment, KreinString, complementary, make_string

logger = logging.getLogger(__name__)

RANDOM_SEED = 20240611
RANDOM_STRING_COUNT = 100
COMPLEMENTARY_RANDOM_COUNT = 20
GOLDEN_LAMBDAS = [0.1, 1.0, 10.0, 100.0]
PAIR_LAMBDAS = [0.5, 1.0, 2.0, 10.0]

GOLDEN_ENTRIES = [
    ("classical", {}),
    ("quasi_relativistic", {"m": 1.0}),
    ("finite_dual", {"m": 1.0}),
    ("water_waves_neumann", {"R": 1.0}),
    ("water_waves_dirichlet", {"R": 1.0}),
    ("caffarelli_silvestre", {"alpha": 0.5}),
    ("caffarelli_silvestre", {"alpha": 1.0}),
    ("caffarelli_silvestre", {"alpha": 1.5}),
    ("bessel", {"alpha": 0.5}),
    ("bessel", {"alpha": 1.0}),
]


# =============================================================================
# RANDOM STRINGS
# =============================================================================

def _random_segment(rng: np.random.Generator, lo: float, hi: float) -> DensitySegment:
    family = rng.choice(["constant", "power", "rational_power", "exponential"])
    c = float(rng.uniform(0.2, 3.0))
    if family == "constant":
        return DensitySegment(lo, hi, "constant", c=c)
    if family == "power":
        return DensitySegment(lo, hi, "power", c=c, p=float(rng.uniform(-0.6, 1.5)))
    if family == "rational_power":
        return DensitySegment(lo, hi, "rational_power", c=c, q=float(rng.uniform(0.2, 2.0)),
                              r=float(rng.uniform(-2.5, 1.0)))
    return DensitySegment(lo, hi, "exponential", c=c, q=float(rng.uniform(-1.0, 0.5)))


def random_string(rng: np.random.Generator) -> KreinString:
    """
    A random string: one to three closed-form segments and up to two atoms

    Args:
        rng: Seeded generator

    Returns:
        KreinString, infinite with a natural end or finite with a random end condition
    """
    count = int(rng.integers(1, 4))
    breaks = np.cumsum(rng.uniform(0.3, 2.0, count))
    finite = bool(rng.random() < 0.4)
    bounds = [0.0] + breaks[:-1].tolist() + [float(breaks[-1]) if finite else math.inf]
    segments = [_random_segment(rng, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    top = float(breaks[-1])
    atoms = [Atom(float(rng.uniform(0.0, top)), float(rng.uniform(0.1, 2.0)))
             for _ in range(int(rng.integers(0, 3)))]
    end = str(rng.choice(["dirichlet", "neumann"])) if finite else None
    return make_string(segments, atoms, end_condition=end)


def random_strings(count: int = RANDOM_STRING_COUNT, seed: int = RANDOM_SEED) -> List[KreinString]:
    rng = np.random.default_rng(seed)
    return [random_string(rng) for _ in range(count)]


def band_limited(rng: np.random.Generator, n: int, half_length: float, modes: int = 8) -> extension.GridFunction:
    """Random real combination of the lowest modes, unit L2 norm."""
    x = extension.grid_points(n, half_length)
    values = np.zeros(n)
    for k in range(1, modes + 1):
        xi = math.pi * k / half_length
        values += rng.normal() * np.cos(xi * x) + rng.normal() * np.sin(xi * x)
    f = extension.GridFunction(n, half_length, values)
    return f.with_values(values / f.norm())


# =============================================================================
# REPORT
# =============================================================================

@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: Any
    tol: Optional[float]
    passed: bool
    informational: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"suite": self.suite, "check": self.name, "value": self.value, "tol": self.tol,
                "passed": self.passed, "informational": self.informational}


@dataclass
class SelftestReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed or c.informational for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not (c.passed or c.informational)]

    def to_dict(self) -> Dict[str, Any]:
        suites: Dict[str, Dict[str, int]] = {}
        for c in self.checks:
            tally = suites.setdefault(c.suite, {"passed": 0, "failed": 0})
            tally["passed" if c.passed or c.informational else "failed"] += 1
        return {"passed": self.passed, "suites": suites, "checks": [c.to_dict() for c in self.checks]}


def _relative(value: float, reference: float) -> float:
    return abs(value / reference - 1.0)


def _failed(suite: str, name: str, error: Exception) -> Check:
    if isinstance(error, KreinError):
        logger.warning("%s/%s raised %s", suite, name, error)
        return Check(suite, name, str(error), None, False)
    logger.exception("%s/%s failed unexpectedly", suite, name)
    return Check(suite, name, f"{type(error).__name__}: {error}", None, False)


def _guard(suite: str, name: str, fn: Callable[[], Check]) -> Check:
    """Run one check; any exception becomes a failed check carrying its text."""
    try:
        return fn()
    except Exception as e:
        return _failed(suite, name, e)


# =============================================================================
# SUITES
# =============================================================================

def suite_golden(count: int) -> List[Check]:
    checks = []
    for name, params in GOLDEN_ENTRIES:
        entry = catalog.lookup(name, params)
        for lam in GOLDEN_LAMBDAS:
            label = f"{name}{params} lambda={lam:g}"

            def run(entry=entry, lam=lam, label=label):
                err = _relative(ode_engine.psi(entry.string, lam), entry.psi(lam))
                return Check("golden", label, err, entry.tolerance, err <= entry.tolerance)
            checks.append(_guard("golden", label, run))
    return checks


def suite_atoms(count: int) -> List[Check]:
    entry = catalog.lookup("single_atom", {"mass": 1.0, "position": 1.0})
    checks = []
    for lam in PAIR_LAMBDAS:
        err = _relative(ode_engine.psi(entry.string, lam), lam / (1.0 + lam))
        checks.append(Check("atoms", f"single_atom lambda={lam:g}", err, 1e-8, err <= 1e-8))
    return checks


def _energy_checks(label: str, string: KreinString, lam: float = 1.0) -> List[Check]:
    levels = np.concatenate(([0.0], np.geomspace(1e-4, 1.0, 60) * min(10.0, 0.999 * string.length)))
    profile = ode_engine.phi(string, lam, levels)
    values, slopes = profile.phi, profile.phi_prime
    monotone = bool(np.all(np.diff(values) <= 1e-10 * values[0]))
    atoms = {a.position for a in string.atoms}
    convex = all(b >= a - 1e-8 * max(abs(a), 1.0)
                 for (s0, a), (s1, b) in zip(zip(levels, slopes), zip(levels[1:], slopes[1:]))
                 if not any(s0 <= p < s1 for p in atoms))
    inside = levels > 0.0
    slope_bound = bool(np.all(-slopes[inside] <= (1.0 + 1e-8) / levels[inside]))

    energy = ode_engine.phi_energy(string, lam)
    equality = _relative(energy.gradient + lam * energy.mass, energy.psi)
    h = ENERGY_FD_STEP
    derivative = (ode_engine.psi(string, lam * (1 + h)) - ode_engine.psi(string, lam * (1 - h))) / (2 * h * lam)
    hellmann = _relative(energy.mass, derivative)
    return [
        Check("energy", f"{label} phi monotone", monotone, None, monotone),
        Check("energy", f"{label} phi convex between atoms", convex, None, convex),
        Check("energy", f"{label} -phi' <= 1/s", slope_bound, None, slope_bound),
        Check("energy", f"{label} energy equals psi", equality, 1e-5, equality <= 1e-5),
        Check("energy", f"{label} mass integral equals dpsi/dlambda", hellmann, 1e-4, hellmann <= 1e-4),
    ]


def suite_energy(count: int) -> List[Check]:
    checks = []
    strings = [(f"{name}{params}", catalog.lookup(name, params).string) for name, params in GOLDEN_ENTRIES]
    strings += [(f"random[{i}]", s) for i, s in enumerate(random_strings(count))]
    for label, string in strings:
        try:
            checks.extend(_energy_checks(label, string))
        except Exception as e:
            checks.append(_failed("energy", label, e))
    return checks


def suite_complementary(count: int) -> List[Check]:
    pairs = [
        ("classical", catalog.lookup("classical").string),
        ("water_waves_neumann", catalog.lookup("water_waves_neumann").string),
        ("water_waves_dirichlet", catalog.lookup("water_waves_dirichlet").string),
    ]
    pairs += [(f"random[{i}]", s) for i, s in enumerate(random_strings(min(count, COMPLEMENTARY_RANDOM_COUNT)))]
    checks = []
    for label, string in pairs:
        def run(string=string, label=label):
            partner = complementary(string)
            worst = max(_relative(ode_engine.psi(string, lam) * ode_engine.psi(partner, lam), lam)
                        for lam in PAIR_LAMBDAS)
            return Check("complementary", label, worst, 1e-4, worst <= 1e-4)
        checks.append(_guard("complementary", label, run))
    return checks


def suite_extension(count: int) -> List[Check]:
    rng = np.random.default_rng(RANDOM_SEED)
    string = catalog.lookup("classical").string
    n, X = 256, 20.0
    levels = extension.default_levels()
    f = band_limited(rng, n, X)
    u = extension.harmonic_extension(string, f, levels)
    boundary = extension.form_boundary(string, f)
    e_u = extension.form_halfspace(string, u)
    ratio = abs(e_u / boundary - 1.0)
    checks = [Check("extension", "half-space form equals boundary form", ratio, 5e-3, ratio <= 5e-3)]

    decreased, worst_cross = 0, 0.0
    for _ in range(20):
        v = random_perturbation(rng, levels, n, X)
        e_v = extension.form_halfspace(string, v)
        cross = abs(extension.cross_form(string, u, v)) / math.sqrt(e_u * e_v)
        worst_cross = max(worst_cross, cross)
        if extension.form_halfspace(string, u + v) < e_u * (1.0 - 1e-12):
            decreased += 1
    checks.append(Check("extension", "perturbations never lower the form", decreased, 0, decreased == 0))
    checks.append(Check("extension", "cross form with zero-trace perturbations", worst_cross, 1e-3,
                        worst_cross <= 1e-3))

    derivative = extension.boundary_derivative(string, f)
    dtn = extension.dtn_apply(string, f)
    err = float(np.max(np.abs(derivative.values - dtn.values)) / np.max(np.abs(dtn.values)))
    checks.append(Check("extension", "Richardson s-derivative matches the DtN map", err, 1e-2, err <= 1e-2))
    return checks


def random_perturbation(rng: np.random.Generator, levels: np.ndarray, n: int,
                        half_length: float) -> extension.HalfSpaceField:
    """Smooth product bump h(s) g(x) vanishing at s = 0, supported inside the level range."""
    top = float(levels[-1])
    a = float(rng.uniform(0.05, 0.3)) * top
    b = a + float(rng.uniform(0.1, 0.5)) * top
    inside = (levels > a) & (levels < b)
    h = np.zeros(levels.size)
    h[inside] = np.sin(np.pi * (levels[inside] - a) / (b - a)) ** 2
    g = band_limited(rng, n, half_length, modes=4).values
    return extension.HalfSpaceField(levels, n, half_length, np.outer(h, g))


def suite_spectral(count: int) -> List[Check]:
    potential = spectral.make_potential("power", DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, p=2.0)
    result = spectral.solve_problem(spectral.SpectralProblem("identity", potential), 10)
    exact = 2.0 * np.arange(1, 11) - 1.0
    err = float(np.max(np.abs(result.eigenvalues / exact - 1.0)))
    checks = [Check("spectral", "oscillator spectrum", err, 1e-3, err <= 1e-3)]

    finer = spectral.make_potential("power", 2 * DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, p=2.0)
    doubled = spectral.solve_problem(spectral.SpectralProblem("identity", finer), 10)
    shift = float(np.max(np.abs(doubled.eigenvalues / result.eigenvalues - 1.0)))
    checks.append(Check("spectral", "grid doubling", shift, 1e-4, shift <= 1e-4))
    return checks


def suite_est(count: int) -> List[Check]:
    cases = [("classical", {}, 2.0, lam) for lam in (2.0, 5.0, 9.0)]
    cases += [("quasi_relativistic", {"m": 1.0}, 4.0, lam) for lam in (5.0, 10.0)]
    checks = []
    for name, params, p, lam in cases:
        label = f"{name} V=|x|^{p:g} lambda={lam:g}"

        def run(name=name, params=params, p=p, lam=lam, label=label):
            entry = catalog.lookup(name, params)
            potential = spectral.make_potential("power", DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, p=p)
            report = spectral.check_theorem_est(entry, potential, lam)
            return Check("est", label, report.to_dict(), EST_RTOL, report.passed)
        checks.append(_guard("est", label, run))
    return checks


def suite_nodal(count: int) -> List[Check]:
    entry = catalog.lookup("classical")
    n, X = 256, DEFAULT_HALF_LENGTH
    potential = spectral.make_potential("power", n, X, p=2.0)
    problem = spectral.SpectralProblem(entry, potential)
    eig = spectral.solve_problem(problem, 8)
    levels = extension.default_levels(count=100)
    profiles = extension.extension_profiles(entry.string, n, X, levels)
    checks = []
    for index in range(1, 7):
        f = eig.eigenfunction(index - 1)
        u = extension.harmonic_extension(entry.string, f, levels, profiles=profiles)
        labeling = nodal.nodal_components(u, NODAL_THRESHOLD)
        verdict = nodal.courant_check(problem, index, labeling, eig)
        checks.append(Check("nodal", f"ext(f_{index}) nodal parts", verdict.to_dict(), None,
                            verdict.passed and verdict.strong_pass))
        trace = nodal.boundary_nodal_count(f)
        checks.append(Check("nodal", f"f_{index} boundary nodal intervals", trace, 2 * index - 1,
                            trace <= 2 * index - 1))
        sweep = nodal.threshold_sweep(u, [1e-6, 1e-5, 1e-4])
        checks.append(Check("nodal", f"ext(f_{index}) threshold sweep", sweep.counts, 0, sweep.spread == 0))
    return checks


def suite_cbf(count: int) -> List[Check]:
    grid = cbf.geometric_grid(CBF_GRID["lo"], CBF_GRID["hi"], CBF_GRID["count"])
    strings = [(f"{name}{params}", catalog.lookup(name, params).string) for name, params in GOLDEN_ENTRIES]
    strings.append(("single_atom", catalog.lookup("single_atom").string))
    strings += [(f"random[{i}]", s) for i, s in enumerate(random_strings(count))]
    checks = []
    for label, string in strings:
        def run(string=string, label=label):
            report = cbf.check_cbf(cbf.sample_psi(string, grid))
            return Check("cbf", label, report.conditions_failed(), report.tol, report.passed)
        checks.append(_guard("cbf", label, run))
    return checks


def suite_report(count: int) -> List[Check]:
    report = spectral.homogeneous_bound_report(1.0, 2.0)
    return [Check("report", f"homogeneous bound alpha=1 p=2 n={row['n']}", row, None,
                  row["stated_holds"], informational=True)
            for row in report.rows]


SUITES: Dict[str, Callable[[int], List[Check]]] = {
    "golden": suite_golden,
    "atoms": suite_atoms,
    "energy": suite_energy,
    "complementary": suite_complementary,
    "extension": suite_extension,
    "spectral": suite_spectral,
    "est": suite_est,
    "nodal": suite_nodal,
    "cbf": suite_cbf,
    "report": suite_report,
}


def run_selftest(suite: str = "all", count: int = RANDOM_STRING_COUNT) -> SelftestReport:
    """
    Run one acceptance suite, or all of them

    Args:
        suite: Suite name or "all"
        count: Number of random strings in the suites that use them

    Returns:
        SelftestReport
    """
    names = SELFTEST_SUITES if suite == "all" else [suite]
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise InputError(f"Unknown suite '{unknown[0]}'; expected one of {', '.join(SELFTEST_SUITES)} or all")
    report = SelftestReport()
    for name in names:
        try:
            checks = SUITES[name](count)
        except Exception as e:
            checks = [_failed(name, "suite", e)]
        failed = sum(1 for c in checks if not (c.passed or c.informational))
        logger.info("suite %s: %d checks, %d failed", name, len(checks), failed)
        report.checks.extend(checks)
    return report
