"""
Krein String Toolkit - Catalog
Closed-form string/characteristic pairs used as golden references, and the
Bessel helpers they need.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from scipy import special

from . import ode_engine
from .errors import DomainError, InputError
from .string_core import (
    Atom, CoefficientA, DensitySegment, KreinString, from_coefficient_a, make_string, shift_string
)

logger = logging.getLogger(__name__)


# =============================================================================
# BESSEL HELPERS
# =============================================================================

def bessel_K(nu: float, x: float) -> float:
    """Modified Bessel function of the second kind; underflows to 0 for large x."""
    if x <= 0.0:
        raise DomainError(f"bessel_K needs x > 0, got {x}")
    return float(special.kv(nu, x))


def bessel_I(nu: float, x: float) -> float:
    """Modified Bessel function of the first kind; overflows to inf for large x."""
    if x <= 0.0:
        raise DomainError(f"bessel_I needs x > 0, got {x}")
    return float(special.iv(nu, x))


def log_bessel_K(nu: float, x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"log_bessel_K needs x > 0, got {x}")
    return float(np.log(special.kve(nu, x)) - x)


def log_bessel_I(nu: float, x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"log_bessel_I needs x > 0, got {x}")
    return float(np.log(special.ive(nu, x)) + x)


def bessel_I_ratio(nu_top: float, nu_bottom: float, x: float) -> float:
    """I_nu_top(x) / I_nu_bottom(x) through the exponentially scaled functions."""
    return float(special.ive(nu_top, x) / special.ive(nu_bottom, x))


def fractional_constants(alpha: float) -> Dict[str, float]:
    """c_alpha = 2^alpha Gamma(alpha/2) / |Gamma(-alpha/2)| and C_alpha = 2^(1-alpha/2) / Gamma(alpha/2)."""
    small = float(special.gamma(alpha / 2.0))
    c_alpha = 2.0 ** alpha * small / abs(float(special.gamma(-alpha / 2.0)))
    big_c = 2.0 ** (1.0 - alpha / 2.0) / small
    return {"c_alpha": c_alpha, "C_alpha": big_c}


# =============================================================================
# ENTRIES
# =============================================================================

@dataclass(frozen=True)
class CatalogEntry:
    """
    A string with closed-form psi, and phi where one is known

    phi_s evaluates phi_lambda in the s variable, phi_t in the t variable.
    """
    name: str
    params: Dict[str, float]
    string: KreinString
    psi: Callable[[float], float]
    coefficient: Optional[CoefficientA] = None
    phi_s: Optional[Callable[[float, float], float]] = None
    phi_t: Optional[Callable[[float, float], float]] = None
    lipschitz_positive: bool = True
    tolerance: float = 1e-5
    notes: str = ""

    @property
    def variable(self) -> str:
        if self.phi_s and self.phi_t:
            return "both"
        if self.phi_t:
            return "t"
        return "s"

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "params": dict(self.params),
            "string": self.string.to_dict(),
            "coefficient": None if self.coefficient is None else self.coefficient.to_dict(),
            "variable": self.variable,
            "lipschitz_positive": self.lipschitz_positive,
            "tolerance": self.tolerance,
            "notes": self.notes,
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DomainError(message)


def _classical() -> CatalogEntry:
    string = make_string([DensitySegment(0.0, math.inf, "constant", c=1.0)])
    coefficient = CoefficientA((DensitySegment(0.0, math.inf, "constant", c=1.0),))
    phi = lambda lam, s: math.exp(-math.sqrt(lam) * s)
    return CatalogEntry("classical", {}, string, lambda lam: math.sqrt(lam), coefficient, phi, phi,
                        notes="psi = lambda^(1/2); the half-space Laplacian")


def _caffarelli_silvestre(alpha: float) -> CatalogEntry:
    _require(0.0 < alpha < 2.0, f"caffarelli_silvestre needs alpha in (0, 2), got {alpha}")
    consts = fractional_constants(alpha)
    c_alpha, big_c = consts["c_alpha"], consts["C_alpha"]
    coefficient = CoefficientA((DensitySegment(0.0, math.inf, "power", c=c_alpha / alpha, p=1.0 - alpha),))
    string = from_coefficient_a(coefficient)
    nu = alpha / 2.0

    def phi_t(lam: float, t: float) -> float:
        x = math.sqrt(lam) * t
        if x == 0.0:
            return 1.0
        return big_c * math.exp(nu * math.log(x) + log_bessel_K(nu, x))

    def phi_s(lam: float, s: float) -> float:
        return phi_t(lam, (c_alpha * s) ** (1.0 / alpha))

    return CatalogEntry("caffarelli_silvestre", {"alpha": alpha}, string, lambda lam: lam ** (alpha / 2.0),
                        coefficient, phi_s, phi_t, tolerance=1e-3 if alpha <= 0.5 else 1e-5,
                        notes="psi = lambda^(alpha/2); a(t) = c_alpha t^(1-alpha) / alpha")


def _quasi_relativistic(m: float) -> CatalogEntry:
    _require(m > 0.0, f"quasi_relativistic needs m > 0, got {m}")
    string = make_string([DensitySegment(0.0, math.inf, "rational_power", c=1.0, q=2.0 * m, r=-2.0)])
    coefficient = CoefficientA((DensitySegment(0.0, math.inf, "exponential", c=1.0, q=-2.0 * m),))
    root = lambda lam: math.sqrt(m * m + lam)
    phi_s = lambda lam, s: (1.0 + 2.0 * m * s) ** ((m - root(lam)) / (2.0 * m))
    phi_t = lambda lam, t: math.exp(t * (m - root(lam)))
    return CatalogEntry("quasi_relativistic", {"m": m}, string, lambda lam: root(lam) - m,
                        coefficient, phi_s, phi_t, notes="psi = (m^2 + lambda)^(1/2) - m")


def _finite_dual(m: float) -> CatalogEntry:
    _require(m > 0.0, f"finite_dual needs m > 0, got {m}")
    R = 1.0 / (2.0 * m)
    string = make_string([DensitySegment(0.0, R, "rational_power", c=1.0, q=-2.0 * m, r=-2.0)],
                         end_condition="dirichlet")
    coefficient = CoefficientA((DensitySegment(0.0, math.inf, "exponential", c=1.0, q=2.0 * m),))
    root = lambda lam: math.sqrt(m * m + lam)
    phi_s = lambda lam, s: max(1.0 - 2.0 * m * s, 0.0) ** ((m + root(lam)) / (2.0 * m))
    phi_t = lambda lam, t: math.exp(-t * (m + root(lam)))
    return CatalogEntry("finite_dual", {"m": m}, string, lambda lam: root(lam) + m,
                        coefficient, phi_s, phi_t, notes="psi = (m^2 + lambda)^(1/2) + m; dirichlet at R = 1/(2m)")


def _water_waves(R: float, end: str) -> CatalogEntry:
    _require(R > 0.0 and math.isfinite(R), f"water waves need a finite depth R > 0, got {R}")
    string = make_string([DensitySegment(0.0, R, "constant", c=1.0)], end_condition=end)
    coefficient = CoefficientA((DensitySegment(0.0, R, "constant", c=1.0),), R)

    if end == "neumann":
        def psi_fn(lam: float) -> float:
            x = math.sqrt(lam)
            return x * math.tanh(x * R)

        def phi(lam: float, s: float) -> float:
            x = math.sqrt(lam)
            return math.exp(-x * s) * (1.0 + math.exp(-2.0 * x * (R - s))) / (1.0 + math.exp(-2.0 * x * R))
    else:
        def psi_fn(lam: float) -> float:
            x = math.sqrt(lam)
            return x / math.tanh(x * R)

        def phi(lam: float, s: float) -> float:
            x = math.sqrt(lam)
            return math.exp(-x * s) * math.expm1(-2.0 * x * (R - s)) / math.expm1(-2.0 * x * R)

    symbol = "tanh" if end == "neumann" else "coth"
    return CatalogEntry(f"water_waves_{end}", {"R": R}, string, psi_fn, coefficient, phi, phi,
                        notes=f"psi = lambda^(1/2) {symbol}(lambda^(1/2) R)")


def _bessel(alpha: float) -> CatalogEntry:
    _require(alpha > 0.0, f"bessel needs alpha > 0, got {alpha}")
    coefficient = CoefficientA((DensitySegment(0.0, 1.0, "rational_power", c=1.0, q=-1.0, r=1.0 - 2.0 * alpha),), 1.0)
    string = from_coefficient_a(coefficient, end_condition="dirichlet")

    def psi_fn(lam: float) -> float:
        x = math.sqrt(lam)
        return x * bessel_I_ratio(alpha - 1.0, alpha, x)

    def phi_t(lam: float, t: float) -> float:
        x = math.sqrt(lam)
        y = x * (1.0 - t)
        if y <= 0.0:
            return 0.0
        scaled = float(special.ive(alpha, y) / special.ive(alpha, x))
        return (1.0 - t) ** alpha * scaled * math.exp(y - x)

    return CatalogEntry("bessel", {"alpha": alpha}, string, psi_fn, coefficient, None, phi_t,
                        notes="a(t) = (1-t)^(1-2 alpha) on [0, 1) with a dirichlet end")


def _single_atom(mass: float, position: float) -> CatalogEntry:
    _require(mass > 0.0 and position >= 0.0, "single_atom needs mass > 0 and position >= 0")
    string = make_string(atoms=[Atom(position, mass)])

    def psi_fn(lam: float) -> float:
        return lam * mass / (1.0 + lam * mass * position)

    def phi_s(lam: float, s: float) -> float:
        return 1.0 - psi_fn(lam) * min(s, position)

    return CatalogEntry("single_atom", {"mass": mass, "position": position}, string, psi_fn, None, phi_s,
                        lipschitz_positive=False, tolerance=1e-8,
                        notes="zero density with one atom; psi = lambda m / (1 + lambda m l)")


def _shifted(base: str, mu: float, **base_params: float) -> CatalogEntry:
    _require(mu >= 0.0, f"shifted needs mu >= 0, got {mu}")
    if base == "shifted":
        raise InputError("shifted entries cannot be nested")
    parent = lookup(base, base_params)
    if parent.coefficient is None:
        raise DomainError(f"catalog entry '{base}' has no coefficient a(t) to shift")
    coefficient = shift_string(parent.coefficient, mu)
    string = from_coefficient_a(coefficient)
    base_psi = parent.psi
    offset = base_psi(mu) if mu > 0.0 else ode_engine.psi_at_zero(parent.string)

    phi_t = None
    if parent.phi_t is not None and mu > 0.0:
        parent_phi = parent.phi_t
        phi_t = lambda lam, t: parent_phi(mu + lam, t) / parent_phi(mu, t)

    params = {"base": base, "mu": mu, **base_params}
    return CatalogEntry("shifted", params, string, lambda lam: base_psi(mu + lam) - offset, coefficient,
                        None, phi_t, tolerance=1e-3,
                        notes=f"psi = psi_{base}(mu + lambda) - psi_{base}(mu); tabulated coefficient")


_BUILDERS: Dict[str, Callable[..., CatalogEntry]] = {
    "classical": _classical,
    "caffarelli_silvestre": _caffarelli_silvestre,
    "quasi_relativistic": _quasi_relativistic,
    "finite_dual": _finite_dual,
    "shifted": _shifted,
    "water_waves_neumann": lambda R=1.0: _water_waves(R, "neumann"),
    "water_waves_dirichlet": lambda R=1.0: _water_waves(R, "dirichlet"),
    "bessel": _bessel,
    "single_atom": _single_atom,
}

_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "classical": {},
    "caffarelli_silvestre": {"alpha": 1.0},
    "quasi_relativistic": {"m": 1.0},
    "finite_dual": {"m": 1.0},
    "shifted": {"base": "classical", "mu": 1.0},
    "water_waves_neumann": {"R": 1.0},
    "water_waves_dirichlet": {"R": 1.0},
    "bessel": {"alpha": 0.5},
    "single_atom": {"mass": 1.0, "position": 1.0},
}


def list_entries() -> List[str]:
    return list(_BUILDERS)


def default_params(name: str) -> Dict[str, Any]:
    if name not in _DEFAULTS:
        raise InputError(f"Unknown catalog entry '{name}'")
    return dict(_DEFAULTS[name])


def lookup(name: str, params: Optional[Dict[str, Any]] = None) -> CatalogEntry:
    """
    Build a catalog entry

    Args:
        name: Entry name, see list_entries()
        params: Parameters; missing ones take the defaults. For 'shifted', extra
            keys are passed to the base entry.

    Returns:
        CatalogEntry with all evaluators wired
    """
    if name not in _BUILDERS:
        raise InputError(f"Unknown catalog entry '{name}'; known entries: {', '.join(_BUILDERS)}")
    merged = default_params(name)
    merged.update(params or {})
    if name != "shifted":
        unknown = set(merged) - set(_DEFAULTS[name])
        if unknown:
            raise InputError(f"Unknown parameters for '{name}': {', '.join(sorted(unknown))}")
        merged = {key: float(value) for key, value in merged.items()}
    else:
        merged["mu"] = float(merged["mu"])
    logger.debug("catalog lookup %s %s", name, merged)
    return _BUILDERS[name](**merged)
