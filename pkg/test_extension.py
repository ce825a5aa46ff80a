#!/usr/bin/env python3
"""
Test script for harmonic extensions of the Krein String Toolkit
Grids, multipliers, the extension itself and the two quadratic forms
"""

import math
import sys
import os

import numpy as np

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import catalog, extension
from krein.errors import DomainError, InputError
from krein.extension import GridFunction, HalfSpaceField

CLASSICAL = catalog.lookup("classical")


def _cosine(k: int, n: int = 16) -> GridFunction:
    return GridFunction.from_callable(lambda x: np.cos(k * x), n, math.pi)


def test_grids():
    """Grid validation, frequencies and Parseval"""
    print("Testing grids...")

    assert extension.validate_grid(8, math.pi)[0]
    assert extension.validate_grid(4096, 1.0)[0]
    for n, half_length in [(4, 1.0), (12, 1.0), (8192, 1.0), (16, 0.0), (16, math.inf)]:
        assert not extension.validate_grid(n, half_length)[0], (n, half_length)
    print("✅ Power-of-two grids between 8 and 4096")

    xi = extension.grid_frequencies(8, math.pi)
    assert np.allclose(xi, [0, 1, 2, 3, -4, -3, -2, -1])
    x = extension.grid_points(8, math.pi)
    assert x[0] == -math.pi and math.isclose(x[-1], 3.0 * math.pi / 4.0)
    print("✅ Points and frequencies in FFT order")

    f = GridFunction.from_callable(lambda x: np.exp(-x * x) + 0.3 * np.sin(3 * x), 64, 5.0)
    assert math.isclose(float(np.sum(np.abs(f.coefficients()) ** 2)), f.inner(f), rel_tol=1e-12)
    assert list(f.to_frame().columns) == ["x", "value"]
    print("✅ Parseval normalisation")

    for bad in (lambda: GridFunction(8, 1.0, np.ones(7)), lambda: GridFunction(8, 1.0, np.full(8, np.nan))):
        try:
            bad()
            raise AssertionError("bad grid function accepted")
        except DomainError:
            pass
    print("✅ Mismatched and non-finite values rejected")


def test_multipliers():
    """psi(-Laplacian) on single modes"""
    print("\nTesting multipliers...")

    f = _cosine(2)
    assert np.allclose(extension.dtn_apply("identity", f).values, 4.0 * f.values, atol=1e-12)
    assert np.allclose(extension.dtn_apply(CLASSICAL, f).values, 2.0 * f.values, atol=1e-12)
    assert np.allclose(extension.dtn_apply(CLASSICAL.string, f).values, 2.0 * f.values, atol=1e-7)
    print("✅ Identity, closed-form and string multipliers agree on cos(2x)")

    assert math.isclose(extension.form_boundary(CLASSICAL, _cosine(1)), math.pi, rel_tol=1e-12)
    assert math.isclose(extension.form_boundary("identity", _cosine(3)), 9.0 * math.pi, rel_tol=1e-12)
    print("✅ Boundary form of single modes")

    multiplier = extension.as_multiplier(lambda lam: 2.0 * lam)
    assert isinstance(multiplier, extension.ClosedFormMultiplier)
    assert multiplier.psi_values(np.array([0.0, 1.0]))[1] == 2.0

    dirichlet = catalog.lookup("water_waves_dirichlet", {"R": 1.0})
    string_multiplier = extension.as_multiplier(dirichlet.string)
    assert string_multiplier.psi_values(np.array([0.0]))[0] == 1.0
    assert string_multiplier.lipschitz_positive
    assert not extension.as_multiplier(catalog.lookup("single_atom")).lipschitz_positive

    for bad in ("laplacian", 42):
        try:
            extension.as_multiplier(bad)
            raise AssertionError(f"{bad!r} accepted as a multiplier")
        except InputError:
            pass
    print("✅ Multiplier sources normalised")


def test_levels():
    """Default and validated s-levels"""
    print("\nTesting levels...")

    levels = extension.default_levels(20.0, 50)
    assert levels.size == 50 and levels[0] == 0.0 and math.isclose(levels[-1], 20.0)
    assert np.all(np.diff(levels) > 0.0)
    clipped = extension.default_levels(20.0, 10, length=1.0)
    assert clipped[-1] < 1.0
    assert extension.validate_levels(clipped, 1.0)[0]
    print("✅ Geometric levels, clipped below R")

    assert not extension.validate_levels([0.1, 1.0])[0]
    assert not extension.validate_levels([0.0, 1.0, 1.0])[0]
    assert not extension.validate_levels([0.0, 2.0], 1.0)[0]
    try:
        extension.default_levels(count=2)
        raise AssertionError("two levels accepted")
    except DomainError:
        pass
    print("✅ Bad levels rejected")


def test_harmonic_extension():
    """cos(x) extends to cos(x) exp(-s) for the classical string"""
    print("\nTesting harmonic extensions...")

    f = _cosine(1)
    levels = [0.0, 0.5, 1.0, 2.0]
    u = extension.harmonic_extension(CLASSICAL.string, f, levels)
    assert np.array_equal(u.values[0], f.values)
    for j, s in enumerate(levels):
        assert np.allclose(u.values[j], f.values * math.exp(-s), rtol=1e-7, atol=1e-12), s
    print("✅ Modes decay with phi")

    constant = GridFunction(16, math.pi, np.full(16, 3.0))
    u_const = extension.harmonic_extension(CLASSICAL.string, constant, levels)
    assert np.allclose(u_const.values, 3.0)
    print("✅ Constants extend to constants")

    frame = u.to_frame()
    assert list(frame.columns)[:2] == ["x", "0"]
    assert frame.shape == (16, 5)
    assert np.allclose((u + u).values, 2.0 * u.values)
    print("✅ Field table and addition")

    profiles = extension.extension_profiles(CLASSICAL.string, 16, math.pi, levels)
    reused = extension.harmonic_extension(CLASSICAL.string, _cosine(2), levels, profiles=profiles)
    assert np.allclose(reused.values[1], _cosine(2).values * math.exp(-1.0), rtol=1e-7, atol=1e-12)
    try:
        extension.harmonic_extension(CLASSICAL.string, f, [0.0, 1.0], profiles=profiles)
        raise AssertionError("mismatched profile table accepted")
    except DomainError:
        pass
    print("✅ Profile tables reused across boundary data")


def test_forms():
    """Half-space form against the boundary form, and the boundary derivative"""
    print("\nTesting forms...")

    f = GridFunction.from_callable(lambda x: np.cos(x) + 0.5 * np.sin(2 * x), 16, math.pi)
    u = extension.harmonic_extension(CLASSICAL.string, f, extension.default_levels(20.0, 200))
    boundary = extension.form_boundary(CLASSICAL, f)
    halfspace = extension.form_halfspace(CLASSICAL.string, u)
    assert math.isclose(halfspace, boundary, rel_tol=1e-2), (halfspace, boundary)
    print(f"✅ Energy identity: {halfspace:.6f} vs {boundary:.6f}")

    derivative = extension.boundary_derivative(CLASSICAL.string, f)
    assert np.allclose(derivative.values, extension.dtn_apply(CLASSICAL, f).values, atol=1e-5)
    print("✅ -du/ds at s = 0 is the Dirichlet-to-Neumann map")

    other = HalfSpaceField(np.array([0.0, 1.0, 2.0]), 16, math.pi, np.zeros((3, 16)))
    try:
        extension.cross_form(CLASSICAL.string, u, other)
        raise AssertionError("fields on different grids accepted")
    except DomainError:
        pass
    print("✅ Mismatched fields rejected")


def main():
    """Run all tests"""
    print("🧪 Testing harmonic extensions")
    print("=" * 50)

    tests = [
        test_grids,
        test_multipliers,
        test_levels,
        test_harmonic_extension,
        test_forms,
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
