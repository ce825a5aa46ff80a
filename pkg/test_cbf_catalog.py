#!/usr/bin/env python3
"""
Test script for the catalog and the CBF checks of the Krein String Toolkit
"""

import math
import sys
import os

import numpy as np

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import catalog, cbf
from krein.errors import DomainError, InputError


def test_bessel_helpers():
    """Half-integer Bessel functions and the fractional constants"""
    print("Testing Bessel helpers...")

    for x in (0.1, 1.0, 10.0):
        expected = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
        assert math.isclose(catalog.bessel_K(0.5, x), expected, rel_tol=1e-12)
        assert math.isclose(catalog.log_bessel_K(0.5, x), math.log(expected), rel_tol=1e-12)
        assert math.isclose(catalog.bessel_I(0.5, x), math.sqrt(2.0 / (math.pi * x)) * math.sinh(x), rel_tol=1e-12)
    # far beyond the overflow of K itself
    assert math.isfinite(catalog.log_bessel_K(0.5, 2000.0))
    assert math.isclose(catalog.bessel_I_ratio(-0.5, 0.5, 2.0), 1.0 / math.tanh(2.0), rel_tol=1e-12)
    print("✅ K, I and their logarithms")

    consts = catalog.fractional_constants(1.0)
    assert math.isclose(consts["c_alpha"], 1.0, rel_tol=1e-12)
    assert math.isclose(consts["C_alpha"], math.sqrt(2.0 / math.pi), rel_tol=1e-12)
    print("✅ Fractional constants at alpha = 1")


def test_catalog_lookup():
    """Entries, defaults and parameter validation"""
    print("\nTesting catalog lookup...")

    names = catalog.list_entries()
    for name in ("classical", "caffarelli_silvestre", "quasi_relativistic", "finite_dual", "shifted",
                 "water_waves_neumann", "water_waves_dirichlet", "bessel", "single_atom"):
        assert name in names, name
    assert catalog.default_params("caffarelli_silvestre") == {"alpha": 1.0}
    print(f"✅ {len(names)} entries listed")

    for bad_call in (
        lambda: catalog.lookup("nonexistent"),
        lambda: catalog.lookup("classical", {"alpha": 1.0}),
        lambda: catalog.default_params("nonexistent"),
        lambda: catalog.lookup("shifted", {"base": "shifted", "mu": 1.0}),
    ):
        try:
            bad_call()
            raise AssertionError("lookup accepted bad input")
        except InputError:
            pass

    for name, params in [("caffarelli_silvestre", {"alpha": 2.0}), ("quasi_relativistic", {"m": 0.0}),
                         ("water_waves_neumann", {"R": -1.0}), ("shifted", {"mu": -1.0})]:
        try:
            catalog.lookup(name, params)
            raise AssertionError(f"{name} accepted {params}")
        except DomainError:
            pass
    print("✅ Unknown names and out-of-range parameters rejected")

    entry = catalog.lookup("caffarelli_silvestre", {"alpha": 1.0})
    assert math.isclose(entry.psi(4.0), 2.0)
    assert math.isclose(entry.phi_t(1.0, 1.0), math.exp(-1.0), rel_tol=1e-12)
    assert entry.variable == "both"
    payload = entry.to_json()
    assert payload["name"] == "caffarelli_silvestre" and payload["string"]["R"] is None
    print("✅ Caffarelli-Silvestre closed forms")

    atom = catalog.lookup("single_atom")
    assert not atom.lipschitz_positive
    assert math.isclose(atom.psi(1.0), 0.5)
    assert catalog.lookup("bessel").variable == "t"
    print("✅ Entry metadata")


def test_shifted_entry():
    """psi_base(mu + lambda) - psi_base(mu)"""
    print("\nTesting shifted entries...")

    entry = catalog.lookup("shifted", {"base": "classical", "mu": 1.0})
    assert math.isclose(entry.psi(3.0), 1.0, rel_tol=1e-12)
    assert entry.psi(0.0) == 0.0
    assert entry.params["base"] == "classical"

    # b(t) = a(t) phi_1(t)^2 = exp(-2t)
    tail = entry.coefficient.pieces[-1]
    assert tail.family == "tabulated"
    assert np.allclose(tail.values, np.exp(-2.0 * np.asarray(tail.knots)), rtol=1e-6)

    table = cbf.tabulate_closed_form(entry.psi, cbf.geometric_grid(0.01, 100.0, 12), "shifted")
    assert cbf.check_cbf(table).passed
    print("✅ Shifted classical entry is a CBF")


def test_cbf_checks():
    """Necessary conditions on sampled values"""
    print("\nTesting CBF checks...")

    grid = cbf.geometric_grid()
    assert grid.size == 32 and math.isclose(grid[0], 1e-2) and math.isclose(grid[-1], 1e4)

    sqrt_table = cbf.tabulate_closed_form(math.sqrt, grid, "sqrt")
    report = cbf.check_cbf(sqrt_table)
    assert report.passed and report.to_dict()["violations"] == []
    print("✅ sqrt passes")

    square = cbf.check_cbf(cbf.tabulate_closed_form(lambda lam: lam * lam, grid, "square"))
    assert not square.passed
    assert "concave" in square.conditions_failed()
    assert "ratio_nonincreasing" in square.conditions_failed()

    decreasing = cbf.check_cbf(cbf.tabulate_closed_form(lambda lam: 1.0 / lam, grid, "inverse"))
    assert "nondecreasing" in decreasing.conditions_failed()
    print("✅ lambda^2 and 1/lambda fail with located violations")

    is_valid, _ = cbf.validate_lambda_grid([1.0, 0.5])
    assert not is_valid
    is_valid, _ = cbf.validate_lambda_grid([-1.0, 1.0])
    assert not is_valid
    try:
        cbf.check_cbf(cbf.tabulate_closed_form(math.sqrt, [1.0, 2.0, 3.0], "short"))
        raise AssertionError("three points accepted")
    except DomainError:
        pass
    print("✅ Bad grids rejected")


def test_sampled_psi():
    """psi sampled from a string is a CBF"""
    print("\nTesting sampled psi...")

    entry = catalog.lookup("quasi_relativistic", {"m": 2.0})
    grid = cbf.geometric_grid(0.01, 1000.0, 10)
    table = cbf.sample_psi(entry.string, grid, processes=1)
    assert table.source == "string"
    expected = np.array([entry.psi(lam) for lam in grid])
    assert np.allclose(table.psi, expected, rtol=1e-5)
    assert cbf.check_cbf(table).passed
    frame = table.to_frame()
    assert list(frame.columns) == ["lambda", "psi"] and len(frame) == 10
    print("✅ Sampled quasi-relativistic psi")


def main():
    """Run all tests"""
    print("🧪 Testing the catalog and CBF checks")
    print("=" * 50)

    tests = [
        test_bessel_helpers,
        test_catalog_lookup,
        test_shifted_entry,
        test_cbf_checks,
        test_sampled_psi,
    ]

    passed = 0
    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"❌ {test.__name__}: {type(e).__name__}: {e}")

    print("\n" + "=" * 50)
    print(f"📊 Test Results: {passed}/{len(tests)} tests passed")
    return passed == len(tests)


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
