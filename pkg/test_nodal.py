#!/usr/bin/env python3
"""
Test script for nodal domains in the Krein String Toolkit
"""

import math
import sys
import os

import numpy as np

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import catalog, extension, nodal
from krein.errors import DomainError
from krein.extension import GridFunction

SEAM_FIELD = np.array([[1.0, 1.0, -1.0, 1.0]])


def test_disjoint_set():
    """Union-find keeps the smallest label as root"""
    print("Testing the disjoint set...")

    ds = nodal.DisjointSet()
    for label in range(1, 6):
        ds.makeset(label)
    ds.union(4, 2)
    ds.union(5, 4)
    assert ds.find(5) == 2 and ds.find(4) == 2
    assert ds.find(3) == 3
    assert ds.find(9) == 9
    print("✅ Unions and lazy sets")


def test_components():
    """Sign components with and without the periodic seam"""
    print("\nTesting nodal components...")

    wrapped = nodal.nodal_components(SEAM_FIELD)
    assert wrapped.count == 2
    assert wrapped.labels.tolist() == [[1, 1, 2, 1]]
    assert wrapped.signs == [1, -1] and wrapped.sizes == [3, 1]
    assert nodal.nodal_components(SEAM_FIELD, wrap=False).count == 3
    print("✅ The seam joins same-sign columns")

    alternating = nodal.nodal_components(np.array([[1.0, -1.0, 1.0, -1.0], [1.0, -1.0, 1.0, -1.0]]))
    assert alternating.count == 4
    assert alternating.sizes == [2, 2, 2, 2]

    zero = nodal.nodal_components(np.zeros((3, 4)))
    assert zero.count == 0 and not zero.labels.any()
    print("✅ Alternating columns and the zero field")

    for bad in (lambda: nodal.nodal_components(SEAM_FIELD, 0.2),
                lambda: nodal.nodal_components(np.ones(4)),
                lambda: nodal.nodal_components(np.array([[1.0, np.nan]]))):
        try:
            bad()
            raise AssertionError("bad labelling input accepted")
        except DomainError:
            pass
    print("✅ Bad thresholds and fields rejected")


def test_extended_mode():
    """ext(cos 2x) has four nodal parts"""
    print("\nTesting an extended mode...")

    f = GridFunction.from_callable(lambda x: np.cos(2 * x), 64, math.pi)
    u = extension.harmonic_extension(catalog.lookup("classical").string, f, extension.default_levels(4.0, 40))
    labeling = nodal.nodal_components(u)
    assert labeling.count == 4
    assert sorted(labeling.signs) == [-1, -1, 1, 1]
    assert labeling.to_frame().shape == (40, 64)
    print("✅ Four half-space components")

    assert nodal.boundary_nodal_count(f) == 4
    assert nodal.boundary_nodal_count(np.ones(8)) == 1
    assert nodal.boundary_nodal_count(np.zeros(8)) == 0
    print("✅ Boundary intervals")


def test_courant_check():
    """Weak and strong bounds from the multiplicity cluster"""
    print("\nTesting Courant checks...")

    labeling = nodal.nodal_components(SEAM_FIELD)
    verdict = nodal.courant_check(None, 2, labeling, [1.0, 2.0, 2.0, 3.0])
    assert verdict.weak_bound == 3 and verdict.strong_bound == 2
    assert verdict.weak_pass and verdict.strong_pass
    assert not verdict.strong_asserted and verdict.passed
    assert verdict.to_dict()["count"] == 2
    print("✅ Cluster {2, 3} around mu_2")

    simple = nodal.courant_check(None, 1, labeling, [1.0, 2.0])
    assert simple.weak_bound == 1 and not simple.weak_pass and not simple.passed
    print("✅ Two components exceed the bound for mu_1")

    try:
        nodal.courant_check(None, 5, labeling, [1.0, 2.0])
        raise AssertionError("index beyond the spectrum accepted")
    except DomainError:
        pass


def test_threshold_sweep():
    """Counts across thresholds"""
    print("\nTesting threshold sweeps...")

    sweep = nodal.threshold_sweep(SEAM_FIELD, [1e-3, 1e-2])
    assert sweep.counts == {1e-3: 2, 1e-2: 2}
    assert sweep.spread == 0 and not sweep.unstable

    # the small negative cell drops out above 0.001
    field = np.array([[1.0, 1.0, -5e-3, 1.0, -1.0]])
    sweep = nodal.threshold_sweep(field, [1e-3, 5e-2], wrap=False)
    assert sweep.counts[1e-3] == 4 and sweep.counts[5e-2] == 3
    assert sweep.unstable
    print("✅ Stable and unstable sweeps")


def main():
    """Run all tests"""
    print("🧪 Testing nodal domains")
    print("=" * 50)

    tests = [
        test_disjoint_set,
        test_components,
        test_extended_mode,
        test_courant_check,
        test_threshold_sweep,
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
