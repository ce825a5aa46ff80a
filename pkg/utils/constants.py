"""
Krein String Toolkit - Constants and Configuration
Centralized configuration for solver tolerances, grids, CLI behaviour and app-wide settings.
"""

import os
from typing import Dict, List, Any, Tuple

# =============================================================================
# STRING MODEL
# =============================================================================

DENSITY_FAMILIES: Tuple[str, ...] = ("constant", "power", "rational_power", "exponential", "tabulated")
END_CONDITIONS: Tuple[str, ...] = ("natural", "dirichlet", "neumann")

# Long-form names accepted on input
END_CONDITION_ALIASES: Dict[str, str] = {
    "natural": "natural",
    "dirichlet": "dirichlet",
    "dirichlet_at_R": "dirichlet",
    "neumann": "neumann",
    "neumann_at_R": "neumann",
}

ROOT_MATCH_RTOL = 1e-12   # a rational-power root counts as a segment end within this
BOUNDARY_MATCH_RTOL = 1e-12
DEFAULT_COEFFICIENT_KNOTS = 400
DEFAULT_PUSH_FORWARD_KNOTS = 200
INVERSION_XTOL = 1e-12
SHIFT_CUTOFF = 1e-14      # shifted coefficient is truncated once phi_mu^2 drops below this
SHIFT_HEAD_FRACTION = 1e-6

# =============================================================================
# ODE SOLVER CONFIGURATION
# =============================================================================

ODE_METHOD = "DOP853"
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
DEFAULT_STEPS_PER_SEGMENT = 16
RENORMALIZE_THRESHOLD = 1e100
LOG_RESCALE_STEP = 300.0
UNDERFLOW_LOG = 700.0         # beyond this log-growth of f_N, phi is zero in double precision
PSI_TOL = 1e-10
MAX_REFINEMENTS = 60          # doublings of s_max, or halvings of the distance to R
DECAY_LENGTH = 40.0           # s_max heuristic: DECAY_LENGTH / sqrt(lambda) past the last feature
GRADED_CELL_WIDTH = 1.0
EXPONENT_SNAP = 1e-12
DIRICHLET_START_OFFSET = 1e-4   # fraction of the last cell where the backward Dirichlet march starts
DIRICHLET_SEED_RATIO = 1e-7     # lambda * seed moment must stay below this fraction of the offset
DIRICHLET_SEED_REFINEMENTS = 12 # tenfold reductions of the offset
CANCELLATION_DIGITS = 12
PSI_CROSSCHECK_RTOL = 1e-6
ENERGY_FD_STEP = 1e-5           # relative lambda step of the dpsi/dlambda central difference
WRONSKIAN_RTOL = 1e-9

# =============================================================================
# CBF CHECKS
# =============================================================================

CBF_TOL = 1e-7
CBF_GRID: Dict[str, Any] = {"lo": 1e-2, "hi": 1e4, "count": 32}
CBF_MIN_POINTS = 4

# =============================================================================
# GRIDS, EXTENSION AND SPECTRAL DEFAULTS
# =============================================================================

MIN_GRID_POINTS = 8
DEFAULT_GRID_POINTS = 512
DEFAULT_HALF_LENGTH = 20.0
DEFAULT_LEVEL_COUNT = 200
FIRST_LEVEL_FACTOR = 1e-4
DEFAULT_S_SCALE = 20.0
MIN_LEVELS = 3
MAX_GRID_POINTS = 4096
DEFAULT_EIGEN_COUNT = 10
EST_RTOL = 1e-6
MULTIPLICITY_RTOL = 1e-6
RESIDUAL_RTOL = 1e-8
POTENTIAL_KINDS: Tuple[str, ...] = ("power", "zero", "values")

# =============================================================================
# NODAL ANALYSIS
# =============================================================================

NODAL_THRESHOLD = 1e-5
NODAL_SWEEP: List[float] = [1e-6, 1e-5, 1e-4, 1e-3]
SWEEP_INSTABILITY = 0.10

# =============================================================================
# CLI AND RUNTIME
# =============================================================================

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2

FLOAT_FORMAT = "%.17g"
DEFAULT_LAMBDA_GRID = "0.01:10000:32"

THREADS_ENV = "KREIN_THREADS"
DATA_DIR_ENV = "KREIN_DATA_DIR"


def thread_count() -> int:
    """Parallelism cap from the environment, at least 1."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def data_directory() -> str:
    return os.environ.get(DATA_DIR_ENV, "data")


SELFTEST_SUITES: List[str] = [
    "golden", "atoms", "energy", "complementary", "extension",
    "spectral", "est", "nodal", "cbf", "report",
]

# =============================================================================
# APP-WIDE STRINGS
# =============================================================================

APP_STRINGS = {
    "app_title": "Krein String Toolkit",
    "app_description": "Strings, their characteristics, harmonic extensions and non-local spectra",
    "disclaimer": "ℹ️ Numerical results carry solver tolerances; check the reported tolerance before relying on a digit.",
    "input_validation_error": "Please check your inputs and try again.",
    "calculation_error": "An error occurred during the computation. Please verify your inputs.",
    "no_data_available": "No data available for this computation.",
    "loading_message": "Solving...",
    "success_message": "Computation completed successfully!",
    "warning_message": "Please review the results carefully.",
    "error_message": "An error occurred. Please try again."
}

# =============================================================================
# NAVIGATION AND PAGES
# =============================================================================

PAGE_CONFIG = {
    "string_characteristic": {
        "title": "String Characteristic",
        "description": "Compute psi(lambda), the phi profile and the CBF checks of a string",
        "icon": "🎻"
    },
    "spectrum_bounds": {
        "title": "Spectrum & Bounds",
        "description": "Eigenvalues of psi(-Laplacian) + V and the eigenvalue estimate",
        "icon": "📈"
    },
    "nodal_domains": {
        "title": "Nodal Domains",
        "description": "Nodal parts of extended eigenfunctions and the Courant bounds",
        "icon": "🧩"
    },
    "help_about": {
        "title": "Help & About",
        "description": "User guide, glossary and file formats",
        "icon": "❓"
    }
}

# Catalog entries offered in the dashboard, with default parameters
DASHBOARD_ENTRIES: Dict[str, Dict[str, float]] = {
    "classical": {},
    "caffarelli_silvestre": {"alpha": 1.0},
    "quasi_relativistic": {"m": 1.0},
    "finite_dual": {"m": 1.0},
    "water_waves_neumann": {"R": 1.0},
    "water_waves_dirichlet": {"R": 1.0},
    "bessel": {"alpha": 0.5},
    "single_atom": {"mass": 1.0, "position": 1.0},
}

# Shown in the string-spec editor
DEFAULT_STRING_SPEC = """{
  "segments": [{"lo": 0.0, "hi": null, "family": "constant", "c": 1.0}],
  "atoms": [{"s": 1.0, "mass": 0.5}],
  "R": null,
  "end": null
}"""
