#!/usr/bin/env python3
"""
Test script for the string model of the Krein String Toolkit
Covers segments, strings, the distribution function and the changes of variable
"""

import math
import sys
import os

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import ode_engine
from krein.errors import DomainError, InvalidCoefficientError, NotRepresentableError
from krein.string_core import (
    Atom, CoefficientA, DensitySegment, KreinString, complementary, cumulative_mass, density_at,
    from_coefficient_a, is_positive_lipschitz, make_string, shift_string, to_coefficient_a, validate_segment
)


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def test_segments():
    """Segment families and their masses"""
    print("Testing density segments...")

    const = DensitySegment(0.0, 2.0, "constant", c=3.0)
    assert math.isclose(const.mass(0.0, 2.0), 6.0)
    assert math.isclose(float(const.density(1.0)), 3.0)

    power = DensitySegment(0.0, 1.0, "power", c=2.0, p=1.0)
    assert math.isclose(power.mass(0.0, 1.0), 1.0, rel_tol=1e-12)

    table = DensitySegment(0.0, 1.0, "tabulated", knots=(0.0, 0.5, 1.0), values=(1.0, 2.0, 1.0))
    assert math.isclose(float(table.density(0.25)), 1.5)
    assert math.isclose(table.mass(0.0, 1.0), 1.5, rel_tol=1e-12)
    print("✅ Masses of constant, power and tabulated segments")

    assert _raises(DomainError, DensitySegment, 0.0, 1.0, "power", c=1.0, p=-1.0)
    assert _raises(DomainError, DensitySegment, 0.0, 1.0, "constant", c=-1.0)
    assert _raises(DomainError, DensitySegment, 1.0, 1.0, "constant", c=1.0)
    assert _raises(DomainError, DensitySegment, 0.0, 1.0, "wavelet", c=1.0)
    # base 1 - 2s vanishes at s = 0.5, inside [0, 1)
    assert _raises(DomainError, DensitySegment, 0.0, 1.0, "rational_power", c=1.0, q=-2.0, r=1.0)

    is_valid, message = validate_segment(const)
    assert is_valid and message == ""
    print("✅ Invalid segments rejected")


def test_strings():
    """String construction and end conditions"""
    print("\nTesting strings...")

    classical = make_string([DensitySegment(0.0, math.inf, "constant", c=1.0)])
    assert not classical.is_finite
    assert classical.end_condition == "natural"
    print("✅ Infinite string takes the natural end")

    singular = make_string([DensitySegment(0.0, 1.0, "rational_power", c=1.0, q=-1.0, r=-2.0)])
    assert singular.length == 1.0
    assert singular.end_condition == "dirichlet"
    assert not singular.total_mass_is_finite
    print("✅ Infinite mass near R forces the dirichlet end")

    assert _raises(DomainError, make_string, [DensitySegment(0.0, 1.0, "constant", c=1.0)])
    neumann = make_string([DensitySegment(0.0, 1.0, "constant", c=1.0)], end_condition="neumann")
    assert neumann.moment_is_finite
    print("✅ Finite strings with finite mass need an explicit end")

    gap = (DensitySegment(0.0, 1.0, "constant", c=1.0), DensitySegment(2.0, math.inf, "constant", c=1.0))
    assert _raises(DomainError, KreinString, gap)
    assert _raises(DomainError, KreinString, (DensitySegment(0.0, 1.0, "constant", c=1.0),), (), 1.0, "natural")
    assert _raises(DomainError, make_string, [DensitySegment(0.0, 1.0, "rational_power", c=1.0, q=-1.0, r=-2.0)],
                   end_condition="neumann")
    assert _raises(DomainError, Atom, 1.0, 0.0)
    assert _raises(DomainError, make_string, [DensitySegment(0.0, 1.0, "constant", c=1.0)],
                   [Atom(1.0, 1.0)], None, "dirichlet")
    print("✅ Gaps, wrong ends and misplaced atoms rejected")


def test_distribution_function():
    """A([0, s)) with atoms"""
    print("\nTesting the distribution function...")

    string = make_string([DensitySegment(0.0, math.inf, "constant", c=2.0)], [Atom(1.0, 0.5)])
    assert math.isclose(cumulative_mass(string, 1.0), 2.0)
    assert math.isclose(cumulative_mass(string, 2.0), 4.5)
    assert cumulative_mass(string, 0.0) == 0.0
    assert _raises(DomainError, cumulative_mass, string, -1.0)
    print("✅ Atoms count strictly left of s")

    assert is_positive_lipschitz(make_string([DensitySegment(0.0, math.inf, "constant", c=1.0)]))
    assert not is_positive_lipschitz(string)
    assert not is_positive_lipschitz(make_string(atoms=[Atom(1.0, 1.0)]))
    print("✅ Positive Lipschitz classification")


def test_coefficient_round_trip():
    """a(t) to string and back"""
    print("\nTesting coefficients...")

    unit = CoefficientA((DensitySegment(0.0, math.inf, "constant", c=1.0),))
    string = from_coefficient_a(unit)
    assert math.isclose(float(density_at(string, 0.5)), 1.0, rel_tol=1e-12)
    assert math.isclose(float(density_at(string, 7.0)), 1.0, rel_tol=1e-12)

    # a(t) = e^{-2t}: sigma(t) = (e^{2t} - 1)/2, density (1 + 2s)^{-2}
    decaying = CoefficientA((DensitySegment(0.0, math.inf, "exponential", c=1.0, q=-2.0),))
    pushed = from_coefficient_a(decaying)
    for s in (0.0, 0.5, 3.0):
        assert math.isclose(float(density_at(pushed, s)), (1.0 + 2.0 * s) ** -2, rel_tol=1e-6)
    print("✅ Push-forward of constant and exponential coefficients")

    back = to_coefficient_a(make_string([DensitySegment(0.0, math.inf, "constant", c=4.0)]))
    # a = sqrt(A) = 2 and t = 2s
    assert math.isclose(float(back.pieces[0].density(1.0)), 2.0, rel_tol=1e-9)
    print("✅ Coefficient of a constant string")

    assert _raises(NotRepresentableError, to_coefficient_a, make_string(atoms=[Atom(1.0, 1.0)]))
    assert _raises(InvalidCoefficientError, CoefficientA, (DensitySegment(1.0, 2.0, "constant", c=1.0),))
    print("✅ Atoms and broken coefficients rejected")

    assert shift_string(unit, 0.0) is unit
    assert _raises(DomainError, shift_string, unit, -1.0)
    print("✅ Zero shift keeps the coefficient")


def test_complementary():
    """psi_A * psi_B = lambda"""
    print("\nTesting complementary strings...")

    classical = make_string([DensitySegment(0.0, math.inf, "constant", c=1.0)])
    dual = complementary(classical)
    assert math.isclose(float(density_at(dual, 3.0)), 1.0, rel_tol=1e-9)

    atom = make_string(atoms=[Atom(1.0, 2.0)])
    atom_dual = complementary(atom)
    for lam in (0.5, 1.0, 4.0):
        product = ode_engine.psi(atom, lam) * ode_engine.psi(atom_dual, lam)
        assert math.isclose(product, lam, rel_tol=1e-6), (lam, product)
    print("✅ Complementary pairs multiply to lambda")

    zero = make_string()
    assert _raises(NotRepresentableError, complementary, zero)
    print("✅ The zero string has no complement")


def _same_psi(first, second, lams=(0.5, 1.0, 4.0)) -> bool:
    return all(math.isclose(ode_engine.psi(first, lam), ode_engine.psi(second, lam), rel_tol=1e-6)
               for lam in lams)


def test_complementary_involution():
    """Complementing twice gives the string back"""
    print("\nTesting the complementary involution...")

    # atom at s = 0: the complement is a bare dirichlet interval of length 1
    origin = make_string(atoms=[Atom(0.0, 1.0)])
    dual = complementary(origin)
    assert dual.end_condition == "dirichlet" and dual.length == 1.0 and not dual.atoms
    back = complementary(dual)
    assert back.end_condition == "natural" and math.isinf(back.length)
    assert [(a.position, a.mass) for a in back.atoms] == [(0.0, 1.0)]
    assert float(density_at(back, 5.0)) == 0.0
    assert math.isclose(ode_engine.psi(back, 2.0), 2.0, rel_tol=1e-9)
    print("✅ Atom at the origin")

    # atom at the last feature: psi = lambda / (1 + lambda)
    atom = make_string(atoms=[Atom(1.0, 1.0)])
    dual = complementary(atom)
    assert dual.end_condition == "dirichlet" and dual.length == 1.0
    back = complementary(dual)
    assert [(a.position, a.mass) for a in back.atoms] == [(1.0, 1.0)]
    assert math.isclose(ode_engine.psi(back, 1.0), 0.5, rel_tol=1e-9)
    assert _same_psi(atom, back)
    print("✅ Atom at the end of the string")

    water = make_string([DensitySegment(0.0, 1.0, "constant", c=1.0)], end_condition="dirichlet")
    dual = complementary(water)
    assert dual.end_condition == "neumann" and math.isclose(dual.length, 1.0)
    back = complementary(dual)
    assert back.end_condition == "dirichlet" and math.isclose(back.length, 1.0)
    assert _same_psi(water, back)
    print("✅ Dirichlet and neumann ends swap")

    # a zero stretch before a dirichlet end turns into an atom at the end of the complement
    plateau = make_string([DensitySegment(0.0, 1.0, "constant", c=1.0),
                           DensitySegment(1.0, 2.0, "constant", c=0.0)], end_condition="dirichlet")
    dual = complementary(plateau)
    assert [(a.position, a.mass) for a in dual.atoms] == [(1.0, 1.0)]
    for lam in (0.5, 2.0):
        product = ode_engine.psi(plateau, lam) * ode_engine.psi(dual, lam)
        assert math.isclose(product, lam, rel_tol=1e-6), (lam, product)
    back = complementary(dual)
    assert back.end_condition == "dirichlet" and math.isclose(back.length, 2.0)
    assert _same_psi(plateau, back)
    print("✅ Terminal plateau kept as an atom")


def main():
    """Run all tests"""
    print("🧪 Testing the string model")
    print("=" * 50)

    tests = [
        test_segments,
        test_strings,
        test_distribution_function,
        test_coefficient_round_trip,
        test_complementary,
        test_complementary_involution,
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
