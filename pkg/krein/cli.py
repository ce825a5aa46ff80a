"""
Krein String Toolkit - Command Line
`python -m krein <command>`: psi and phi tables, extensions, spectra, bounds,
nodal counts, the catalog and the self-test driver.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from utils.constants import (
    DEFAULT_GRID_POINTS, DEFAULT_HALF_LENGTH, DEFAULT_LEVEL_COUNT, DEFAULT_S_SCALE, DEFAULT_EIGEN_COUNT,
    DEFAULT_LAMBDA_GRID, NODAL_THRESHOLD, NODAL_SWEEP, PSI_TOL, MIN_LEVELS,
    EXIT_OK, EXIT_FAILURE, EXIT_INPUT_ERROR, SELFTEST_SUITES
)
from utils.storage import save_calculation_result
from . import catalog, cbf, extension, io, nodal, ode_engine, selftest, spectral
from .errors import DomainError, InputError, KreinError
from .extension import GridFunction
from .string_core import KreinString

logger = logging.getLogger(__name__)

# =============================================================================
# CONFIGURATION
# =============================================================================

@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    lambda_grid: str = DEFAULT_LAMBDA_GRID
    lam: Optional[float] = None
    n: int = DEFAULT_GRID_POINTS
    half_length: float = DEFAULT_HALF_LENGTH
    levels: int = DEFAULT_LEVEL_COUNT
    s_scale: float = DEFAULT_S_SCALE
    tol: float = PSI_TOL
    k: int = DEFAULT_EIGEN_COUNT
    index: int = 1
    threshold: float = NODAL_THRESHOLD
    boundary: Optional[str] = None
    vectors: Optional[str] = None
    labels: Optional[str] = None
    alpha: Optional[float] = None
    p: float = 2.0
    action: str = "list"
    name: Optional[str] = None
    params: Optional[str] = None
    suite: str = "all"
    count: int = selftest.RANDOM_STRING_COUNT
    record: bool = False


def validate_config(config: RunConfig) -> Tuple[bool, str]:
    """
    Check overrides against their documented ranges

    Args:
        config: Parsed configuration

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, message = extension.validate_grid(config.n, config.half_length)
    if not is_valid:
        return False, message
    if config.levels < MIN_LEVELS:
        return False, f"--levels must be at least {MIN_LEVELS}"
    if not (config.s_scale > 0.0):
        return False, "--s-scale must be positive"
    if not (0.0 < config.tol <= 1e-2):
        return False, "--tol must lie in (0, 1e-2]"
    if not (1 <= config.k <= config.n):
        return False, "--k must lie in [1, n]"
    if config.index < 1:
        return False, "--index must be at least 1"
    if not (0.0 < config.threshold < 0.1):
        return False, "--threshold must lie in (0, 0.1)"
    if config.lam is not None and config.lam < 0.0:
        return False, "--lam must be nonnegative"
    if config.count < 0:
        return False, "--count must be nonnegative"
    if config.suite != "all" and config.suite not in SELFTEST_SUITES:
        return False, f"--suite must be one of {', '.join(SELFTEST_SUITES)} or all"
    return True, ""


def parse_lambda_grid(text: str) -> np.ndarray:
    """'a:b:n' for n geometric points in [a, b], or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return cbf.geometric_grid(float(lo), float(hi), int(count))
        grid = np.array([float(item) for item in text.split(",")])
    except (ValueError, DomainError) as e:
        raise InputError(f"Invalid lambda grid '{text}': {e}") from e
    is_valid, message = cbf.validate_lambda_grid(grid)
    if not is_valid:
        raise InputError(message)
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krein", description="Krein string toolkit")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log solver progress")
    parser.add_argument("--quiet", "-q", action="store_true", help="Log errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", help="String spec, catalog reference or problem spec (JSON)")
        p.add_argument("--output", help="Output path (default: stdout)")
        p.add_argument("--tol", type=float, default=PSI_TOL, help=f"psi tolerance (default: {PSI_TOL:g})")
        p.add_argument("--record", action="store_true", help="Append the run to the history file")

    def grid(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int, default=DEFAULT_GRID_POINTS, help="Grid points, a power of two")
        p.add_argument("--half-length", type=float, default=DEFAULT_HALF_LENGTH, dest="half_length",
                       help="Grid covers [-X, X)")

    def levels(p: argparse.ArgumentParser) -> None:
        p.add_argument("--levels", type=int, default=DEFAULT_LEVEL_COUNT, help="Number of s-levels")
        p.add_argument("--s-scale", type=float, default=DEFAULT_S_SCALE, dest="s_scale", help="Deepest s-level")

    p = sub.add_parser("psi", help="Tabulate psi on a lambda grid (CSV)")
    common(p)
    p.add_argument("--lambda-grid", default=DEFAULT_LAMBDA_GRID, dest="lambda_grid",
                   help="a:b:n geometric, or a comma-separated list")

    p = sub.add_parser("phi", help="phi profile for one lambda (CSV)")
    common(p)
    levels(p)
    p.add_argument("--lam", type=float, required=True, help="Spectral parameter")

    p = sub.add_parser("extend", help="Harmonic extension of boundary data (CSV matrix)")
    common(p)
    grid(p)
    levels(p)
    p.add_argument("--boundary", help="Boundary data CSV with columns x,value (default: exp(-x^2))")

    p = sub.add_parser("spectrum", help="Eigenvalues of psi(-Laplacian) + V (JSON)")
    common(p)
    grid(p)
    p.add_argument("--k", type=int, default=DEFAULT_EIGEN_COUNT, help="Number of eigenvalues")
    p.add_argument("--vectors", help="Directory for eigenvector CSVs")

    p = sub.add_parser("bound", help="Eigenvalue estimate report (JSON)")
    common(p)
    grid(p)
    p.add_argument("--lam", type=float, help="lambda of the estimate")
    p.add_argument("--alpha", type=float, help="Homogeneous report for (-Laplacian)^(alpha/2) + |x|^p instead")
    p.add_argument("--p", type=float, default=2.0, help="Degree of the homogeneous potential")

    p = sub.add_parser("nodal", help="Nodal parts of an extended eigenfunction (JSON)")
    common(p)
    grid(p)
    levels(p)
    p.add_argument("--index", type=int, default=1, help="1-based eigenfunction index")
    p.add_argument("--threshold", type=float, default=NODAL_THRESHOLD, help="Relative zero threshold")
    p.add_argument("--labels", help="Path for the label matrix CSV")

    p = sub.add_parser("catalog", help="List or show closed-form entries (JSON)")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?", help="Entry name for show")
    p.add_argument("--params", help="JSON object of parameters for show")
    p.add_argument("--output", help="Output path (default: stdout)")

    p = sub.add_parser("selftest", help="Run the acceptance suites (JSON)")
    p.add_argument("--suite", default="all", help=f"One of {', '.join(SELFTEST_SUITES)} or all")
    p.add_argument("--count", type=int, default=selftest.RANDOM_STRING_COUNT, help="Random strings per suite")
    p.add_argument("--output", help="Output path (default: stdout)")
    p.add_argument("--record", action="store_true", help="Append the run to the history file")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> Tuple[RunConfig, int]:
    """Parse argv into (RunConfig, verbosity)."""
    args = build_parser().parse_args(argv)
    values = {key: value for key, value in vars(args).items() if key in RunConfig.__dataclass_fields__}
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    return RunConfig(**values), level


# =============================================================================
# COMMANDS
# =============================================================================

def _read_input(config: RunConfig) -> Any:
    if not config.input:
        raise InputError(f"'{config.command}' needs --input")
    return io.load_json(config.input)


def _string_of(source: Any) -> KreinString:
    if isinstance(source, KreinString):
        return source
    if isinstance(source, catalog.CatalogEntry):
        return source.string
    raise InputError("This command needs a string spec or a catalog reference")


def _record(config: RunConfig, result: Dict[str, Any]) -> None:
    if config.record:
        inputs = {key: value for key, value in asdict(config).items() if value is not None}
        save_calculation_result(config.command, inputs, io.plain(result))


def cmd_psi(config: RunConfig) -> int:
    string = _string_of(io.source_from_dict(_read_input(config)))
    grid = parse_lambda_grid(config.lambda_grid)
    table = cbf.sample_psi(string, grid, config.tol)
    io.write_csv(table.to_frame(), config.output)
    _record(config, {"points": int(grid.size)})
    return EXIT_OK


def cmd_phi(config: RunConfig) -> int:
    string = _string_of(io.source_from_dict(_read_input(config)))
    if string.is_finite:
        knots = np.linspace(0.0, 1.0, config.levels) * string.length * (1.0 - 1e-9)
    else:
        knots = np.linspace(0.0, config.s_scale, config.levels)
    profile = ode_engine.phi(string, config.lam, knots, config.tol)
    frame = pd.DataFrame({"s": profile.s_grid, "phi": profile.phi, "phi_prime": profile.phi_prime})
    io.write_csv(frame, config.output)
    _record(config, {"psi": profile.psi_value, "clamped": profile.clamped})
    return EXIT_OK


def _boundary_data(config: RunConfig) -> GridFunction:
    if not config.boundary:
        return GridFunction.from_callable(lambda x: np.exp(-x * x), config.n, config.half_length)
    try:
        frame = pd.read_csv(config.boundary)
    except (OSError, ValueError) as e:
        raise InputError(f"Cannot read boundary data {config.boundary}: {e}") from e
    if list(frame.columns) != ["x", "value"]:
        raise InputError("Boundary data must have exactly the columns x,value")
    n = len(frame)
    half_length = -float(frame["x"].iloc[0])
    f = GridFunction(n, half_length, frame["value"].to_numpy())
    if not np.allclose(frame["x"].to_numpy(), f.x, rtol=0.0, atol=1e-9 * half_length):
        raise InputError("Boundary x values must be the periodic grid -X + 2Xk/n")
    return f


def cmd_extend(config: RunConfig) -> int:
    string = _string_of(io.source_from_dict(_read_input(config)))
    f = _boundary_data(config)
    levels = extension.default_levels(config.s_scale, config.levels, string.length)
    u = extension.harmonic_extension(string, f, levels, config.tol)
    io.write_csv(u.to_frame(), config.output)
    boundary_form = extension.form_boundary(string, f)
    halfspace_form = extension.form_halfspace(string, u)
    logger.info("boundary form %.10g, half-space form %.10g", boundary_form, halfspace_form)
    _record(config, {"form_boundary": boundary_form, "form_halfspace": halfspace_form})
    return EXIT_OK


def cmd_spectrum(config: RunConfig) -> int:
    problem = io.problem_from_dict(_read_input(config), config.n, config.half_length)
    result = spectral.solve_problem(problem, config.k)
    io.write_json(result.to_dict(), config.output)
    if config.vectors:
        os.makedirs(config.vectors, exist_ok=True)
        for i in range(config.k):
            io.write_csv(result.eigenfunction(i).to_frame(), os.path.join(config.vectors, f"f_{i + 1}.csv"))
    _record(config, result.to_dict())
    return EXIT_OK


def cmd_bound(config: RunConfig) -> int:
    if config.alpha is not None:
        report = spectral.homogeneous_bound_report(config.alpha, config.p, config.n, config.half_length)
        io.write_json(report.to_dict(), config.output)
        _record(config, report.to_dict())
        return EXIT_OK
    if config.lam is None:
        raise InputError("'bound' needs --lam, or --alpha for the homogeneous report")
    problem_spec = _read_input(config)
    problem = io.problem_from_dict(problem_spec, config.n, config.half_length)
    source = problem_spec.get("source", problem_spec) if isinstance(problem_spec, dict) else problem_spec
    report = spectral.check_theorem_est(io.source_from_dict(source), problem.potential, config.lam)
    io.write_json(report.to_dict(), config.output)
    _record(config, report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_nodal(config: RunConfig) -> int:
    problem_spec = _read_input(config)
    problem = io.problem_from_dict(problem_spec, config.n, config.half_length)
    string = problem.multiplier.string
    if string is None:
        raise InputError("Nodal counts need a string to extend with")
    k = min(config.index + 2, config.n)
    eig = spectral.solve_problem(problem, k)
    f = eig.eigenfunction(config.index - 1)
    levels = extension.default_levels(config.s_scale, config.levels, string.length)
    u = extension.harmonic_extension(string, f, levels, config.tol)
    labeling = nodal.nodal_components(u, config.threshold)
    verdict = nodal.courant_check(problem, config.index, labeling, eig)
    sweep = nodal.threshold_sweep(u, NODAL_SWEEP)
    result = {
        "verdict": verdict.to_dict(),
        "boundary_nodal_count": nodal.boundary_nodal_count(f, config.threshold),
        "threshold": config.threshold,
        "sweep": {f"{t:g}": c for t, c in sweep.counts.items()},
        "sweep_unstable": sweep.unstable,
        "eigenvalues": eig.eigenvalues,
    }
    io.write_json(result, config.output)
    if config.labels:
        io.write_csv(labeling.to_frame(), config.labels)
    _record(config, result)
    return EXIT_OK if verdict.passed else EXIT_FAILURE


def cmd_catalog(config: RunConfig) -> int:
    if config.action == "list":
        entries = [{"name": name, "params": catalog.default_params(name)} for name in catalog.list_entries()]
        io.write_json(entries, config.output)
        return EXIT_OK
    if not config.name:
        raise InputError("'catalog show' needs an entry name")
    params = json.loads(config.params) if config.params else None
    io.write_json(catalog.lookup(config.name, params).to_json(), config.output)
    return EXIT_OK


def cmd_selftest(config: RunConfig) -> int:
    report = selftest.run_selftest(config.suite, config.count)
    io.write_json(report.to_dict(), config.output)
    _record(config, {"passed": report.passed, "failures": len(report.failures())})
    return EXIT_OK if report.passed else EXIT_FAILURE


HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    "psi": cmd_psi,
    "phi": cmd_phi,
    "extend": cmd_extend,
    "spectrum": cmd_spectrum,
    "bound": cmd_bound,
    "nodal": cmd_nodal,
    "catalog": cmd_catalog,
    "selftest": cmd_selftest,
}


def run(config: RunConfig) -> int:
    """Run one command, mapping errors to exit codes."""
    try:
        is_valid, message = validate_config(config)
        if not is_valid:
            raise InputError(message)
        return HANDLERS[config.command](config)
    except (InputError, DomainError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_INPUT_ERROR
    except KreinError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    config, level = parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
