#!/usr/bin/env python3
"""
Test script for the ODE engine of the Krein String Toolkit
psi, phi profiles and energies against closed forms
"""

import math
import sys
import os

import numpy as np
from scipy import integrate

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import catalog, ode_engine, spectral
from krein.errors import DomainError
from krein.string_core import Atom, DensitySegment, density_at, make_string

CLASSICAL = make_string([DensitySegment(0.0, math.inf, "constant", c=1.0)])


def test_classical_psi():
    """psi(lambda) = sqrt(lambda) for the unit density"""
    print("Testing psi of the classical string...")

    for lam in (0.1, 1.0, 4.0, 100.0):
        value = ode_engine.psi(CLASSICAL, lam)
        assert math.isclose(value, math.sqrt(lam), rel_tol=1e-8), (lam, value)
    assert ode_engine.psi(CLASSICAL, 0.0) == 0.0
    print("✅ psi matches sqrt(lambda)")

    try:
        ode_engine.psi(CLASSICAL, -1.0)
        raise AssertionError("negative lambda accepted")
    except DomainError:
        print("✅ Negative lambda rejected")


def test_catalog_psi():
    """Finite strings, atoms and the exponential family"""
    print("\nTesting psi against the catalog...")

    for name, params in [
        ("quasi_relativistic", {"m": 1.0}),
        ("water_waves_neumann", {"R": 1.0}),
        ("water_waves_dirichlet", {"R": 2.0}),
        ("finite_dual", {"m": 0.5}),
        ("single_atom", {"mass": 2.0, "position": 0.5}),
    ]:
        entry = catalog.lookup(name, params)
        for lam in (0.5, 3.0, 50.0):
            value = ode_engine.psi(entry.string, lam)
            expected = entry.psi(lam)
            assert math.isclose(value, expected, rel_tol=entry.tolerance), (name, lam, value, expected)
        print(f"✅ {name}")


def test_psi_at_zero():
    """psi(0) by end condition"""
    print("\nTesting psi(0)...")

    assert ode_engine.psi_at_zero(CLASSICAL) == 0.0
    dirichlet = catalog.lookup("water_waves_dirichlet", {"R": 2.0}).string
    assert ode_engine.psi_at_zero(dirichlet) == 0.5
    neumann = catalog.lookup("water_waves_neumann", {"R": 2.0}).string
    assert ode_engine.psi_at_zero(neumann) == 0.0
    print("✅ Zero for natural and neumann ends, 1/R for dirichlet")


def test_phi_profile():
    """phi(0) = 1 and the classical exponential"""
    print("\nTesting phi profiles...")

    knots = np.array([0.0, 0.5, 1.0, 2.0])
    profile = ode_engine.phi(CLASSICAL, 1.0, knots)
    assert profile.phi[0] == 1.0 or math.isclose(profile.phi[0], 1.0, rel_tol=1e-12)
    assert np.allclose(profile.phi, np.exp(-knots), rtol=1e-7)
    assert np.allclose(profile.phi_prime, -np.exp(-knots), rtol=1e-6)
    assert math.isclose(profile.psi_value, 1.0, rel_tol=1e-8)
    assert not profile.clamped
    print("✅ Classical profile is exp(-s)")

    dirichlet = catalog.lookup("water_waves_dirichlet", {"R": 1.0})
    knots = np.linspace(0.0, 0.99, 12)
    profile = ode_engine.phi(dirichlet.string, 4.0, knots)
    expected = [dirichlet.phi_s(4.0, s) for s in knots]
    assert np.allclose(profile.phi, expected, rtol=1e-6, atol=1e-12)
    assert np.all(np.diff(profile.phi) <= 0.0)
    print("✅ Dirichlet profile decreases to zero at R")

    flat = ode_engine.phi(dirichlet.string, 0.0, knots)
    assert np.allclose(flat.phi, 1.0 - knots)
    print("✅ lambda = 0 gives the affine profile")

    atom = catalog.lookup("single_atom", {"mass": 1.0, "position": 1.0})
    knots = np.array([0.0, 0.5, 1.0, 3.0])
    profile = ode_engine.phi(atom.string, 2.0, knots)
    expected = [atom.phi_s(2.0, s) for s in knots]
    assert np.allclose(profile.phi, expected, rtol=1e-7)
    print("✅ Atom profile is piecewise linear")


def test_energy():
    """gradient + lambda * mass = psi, and mass = dpsi/dlambda"""
    print("\nTesting energies...")

    energy = ode_engine.phi_energy(CLASSICAL, 4.0)
    assert math.isclose(energy.gradient + 4.0 * energy.mass, energy.psi, rel_tol=1e-7)
    # dpsi/dlambda = 1 / (2 sqrt(lambda))
    assert math.isclose(ode_engine.phi_mass_integral(CLASSICAL, 4.0), 0.25, rel_tol=1e-6)

    entry = catalog.lookup("quasi_relativistic", {"m": 1.0})
    lam, h = 3.0, 1e-4
    derivative = (entry.psi(lam + h) - entry.psi(lam - h)) / (2.0 * h)
    assert math.isclose(ode_engine.phi_mass_integral(entry.string, lam), derivative, rel_tol=1e-5)
    print("✅ Energy identities hold")

    atom = make_string(atoms=[Atom(1.0, 1.0)])
    energy = ode_engine.phi_energy(atom, 1.0)
    assert math.isclose(energy.gradient + energy.mass, energy.psi, rel_tol=1e-7)
    print("✅ Atoms enter the mass part")


def test_fundamental_pair():
    """f_N, f_D and their Wronskian"""
    print("\nTesting the fundamental pair...")

    solution = ode_engine.solve_fundamental(CLASSICAL, 1.0, 3.0)
    f_n, _, f_d, _ = solution.true_values()
    s = solution.s_grid
    assert np.allclose(f_n, np.cosh(s), rtol=1e-8)
    assert np.allclose(f_d, np.sinh(s), rtol=1e-8, atol=1e-14)
    assert solution.wronskian_defect() < 1e-9
    print("✅ cosh and sinh with unit Wronskian")


def test_dirichlet_profiles():
    """phi, energies and gamma near a dirichlet end against closed forms"""
    print("\nTesting dirichlet ends...")

    water = catalog.lookup("water_waves_dirichlet", {"R": 1.0})
    knots = np.linspace(0.0, 0.999, 20)
    for lam in (0.5, 4.0, 100.0):
        x = math.sqrt(lam)
        profile = ode_engine.phi(water.string, lam, knots)
        expected = [water.phi_s(lam, s) for s in knots]
        slopes = -x * np.cosh(x * (1.0 - knots)) / math.sinh(x)
        assert np.allclose(profile.phi, expected, rtol=1e-7, atol=1e-14), lam
        assert np.allclose(profile.phi_prime, slopes, rtol=1e-6), lam
        # dpsi/dlambda of sqrt(lambda) coth(sqrt(lambda))
        derivative = (1.0 / math.tanh(x) - x / math.sinh(x) ** 2) / (2.0 * x)
        assert math.isclose(spectral.bound_gamma(water.string, lam), 1.0 / derivative, rel_tol=1e-6), lam
    print("✅ Water waves with a dirichlet end")

    bessel = catalog.lookup("bessel", {"alpha": 1.0})
    for lam in (0.1, 1.0, 10.0, 100.0):
        value = ode_engine.psi(bessel.string, lam)
        assert math.isclose(value, bessel.psi(lam), rel_tol=bessel.tolerance), (lam, value)
    # s = t - t^2 / 2 on [0, 1/2)
    knots = np.linspace(0.0, 0.45, 10)
    profile = ode_engine.phi(bessel.string, 4.0, knots)
    expected = [bessel.phi_t(4.0, 1.0 - math.sqrt(1.0 - 2.0 * s)) for s in knots]
    assert np.allclose(profile.phi, expected, rtol=1e-6, atol=1e-12)
    energy = ode_engine.phi_energy(bessel.string, 4.0)
    assert math.isclose(energy.gradient + 4.0 * energy.mass, energy.psi, rel_tol=1e-6)
    print("✅ Bessel string with infinite mass at R")

    half = catalog.lookup("bessel", {"alpha": 0.5})
    for lam in (0.1, 1.0, 10.0, 100.0):
        assert math.isclose(ode_engine.psi(half.string, lam), half.psi(lam), rel_tol=half.tolerance), lam
    assert math.isclose(ode_engine.phi_mass_integral(half.string, 1.0),
                        ode_engine.phi_mass_integral(water.string, 1.0), rel_tol=1e-9)
    print("✅ Bessel alpha = 1/2 is the water-wave string")


def test_renormalisation():
    """Large lambda and long marches across rescaling events"""
    print("\nTesting renormalisation...")

    profile = ode_engine.phi(CLASSICAL, 1e4, [0.0, 5.0])
    assert math.isclose(profile.phi[0], 1.0, rel_tol=1e-12)
    assert math.isclose(profile.phi[1], math.exp(-500.0), rel_tol=1e-6)
    assert math.isclose(profile.psi_value, 100.0, rel_tol=1e-8)
    print("✅ phi at lambda = 1e4 down to exp(-500)")

    solution = ode_engine.solve_fundamental(CLASSICAL, 400.0, 20.0, s_grid=[0.0, 19.0])
    log_fn = math.log(solution.f_neumann[1]) + solution.log_scale[1]
    assert math.isclose(log_fn, 380.0 - math.log(2.0), rel_tol=1e-9)
    # f_D = sinh(20 s) / 20, so f_D / f_N = tanh(380) / 20
    assert math.isclose(solution.f_dirichlet[1] / solution.f_neumann[1], 0.05, rel_tol=1e-9)
    assert solution.log_scale[1] > 0.0 and solution.log_scale[0] == 0.0
    print("✅ Fundamental pair up to cosh(380)")

    fractional = catalog.lookup("caffarelli_silvestre", {"alpha": 0.5})
    for lam in (0.1, 1.0, 10.0, 100.0):
        value = ode_engine.psi(fractional.string, lam)
        assert math.isclose(value, fractional.psi(lam), rel_tol=fractional.tolerance), (lam, value)
    print("✅ Fractional alpha = 1/2 across the lambda range")


def test_phi_minimality():
    """phi minimises the energy among profiles with value 1 at s = 0"""
    print("\nTesting phi minimality...")

    string = make_string([DensitySegment(0.0, 1.0, "power", c=2.0, p=0.5),
                          DensitySegment(1.0, math.inf, "constant", c=1.0)], [Atom(0.5, 0.3)])
    lam, top = 2.0, 3.0
    grid = np.linspace(0.0, top, 3001)
    density = density_at(string, grid)
    atom_index = 500

    def energy(g):
        gradient = np.sum(np.diff(g) ** 2 / np.diff(grid))
        mass = integrate.trapezoid(density * g ** 2, grid) + 0.3 * g[atom_index] ** 2
        return gradient + lam * mass

    phi = ode_engine.phi(string, lam, grid).phi
    bump = np.sin(np.pi * grid / top) ** 2
    base, curvature = energy(phi), energy(bump)
    for eps in (0.05, -0.05):
        change = energy(phi + eps * bump) - base
        assert change > 0.0, eps
        assert math.isclose(change, eps * eps * curvature, rel_tol=0.05), (eps, change)
    print("✅ Perturbations raise the energy to second order")


def main():
    """Run all tests"""
    print("🧪 Testing the ODE engine")
    print("=" * 50)

    tests = [
        test_classical_psi,
        test_catalog_psi,
        test_psi_at_zero,
        test_phi_profile,
        test_energy,
        test_fundamental_pair,
        test_dirichlet_profiles,
        test_renormalisation,
        test_phi_minimality,
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
