#!/usr/bin/env python3
"""
Test script for the self-test driver of the Krein String Toolkit
"""

import sys
import os

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from krein import catalog, selftest
from krein.errors import InputError
from krein.string_core import KreinString
from utils.constants import ENERGY_FD_STEP


def test_random_strings():
    """Seeded generator"""
    print("Testing random strings...")

    first = selftest.random_strings(5)
    second = selftest.random_strings(5)
    assert len(first) == 5 and all(isinstance(s, KreinString) for s in first)
    assert first == second
    assert selftest.random_strings(5, seed=1) != first
    print("✅ Same seed, same strings")


def test_energy_checks():
    """Profile invariants and the dpsi/dlambda difference at step ENERGY_FD_STEP"""
    print("\nTesting energy checks...")

    assert ENERGY_FD_STEP == 1e-5
    for name, params in [("classical", {}), ("water_waves_dirichlet", {"R": 1.0}), ("bessel", {"alpha": 1.0})]:
        checks = selftest._energy_checks(name, catalog.lookup(name, params).string)
        assert len(checks) == 5
        assert all(c.passed for c in checks), [c.to_dict() for c in checks if not c.passed]
        print(f"✅ {name}")


def test_golden_suite():
    """Catalog entries against the ODE engine"""
    print("\nTesting the golden suite...")

    report = selftest.run_selftest("golden")
    assert report.checks and report.passed, [c.to_dict() for c in report.failures()]
    payload = report.to_dict()
    assert payload["suites"]["golden"]["failed"] == 0
    assert set(payload["checks"][0]) == {"suite", "check", "value", "tol", "passed", "informational"}
    print(f"✅ {len(report.checks)} golden checks passed")


def test_report_suite():
    """Informational checks never fail a run"""
    print("\nTesting the informational suite...")

    report = selftest.run_selftest("report", count=0)
    assert all(c.informational for c in report.checks)
    assert report.passed
    print("✅ Informational report")


def test_failures():
    """Failed checks and unknown suites"""
    print("\nTesting failures...")

    report = selftest.SelftestReport([selftest.Check("golden", "broken", 1.0, 1e-6, False),
                                      selftest.Check("report", "note", 1.0, None, False, informational=True)])
    assert not report.passed
    assert [c.name for c in report.failures()] == ["broken"]
    assert report.to_dict()["suites"] == {"golden": {"passed": 0, "failed": 1}, "report": {"passed": 1, "failed": 0}}

    try:
        selftest.run_selftest("nonexistent")
        raise AssertionError("unknown suite accepted")
    except InputError:
        pass
    print("✅ Failures tallied, unknown suites rejected")


def test_unexpected_errors():
    """Exceptions outside the error hierarchy become failed checks"""
    print("\nTesting unexpected errors...")

    check = selftest._guard("golden", "broken", lambda: 1.0 / 0.0)
    assert not check.passed and check.suite == "golden" and check.name == "broken"
    assert check.value.startswith("ZeroDivisionError")

    def crash(count):
        raise ValueError("bad table")

    original = selftest.SUITES["report"]
    selftest.SUITES["report"] = crash
    try:
        report = selftest.run_selftest("report", count=0)
    finally:
        selftest.SUITES["report"] = original
    assert not report.passed
    assert [(c.suite, c.name, c.value) for c in report.failures()] == [("report", "suite", "ValueError: bad table")]
    print("✅ Crashing checks and suites are reported, not raised")


def main():
    """Run all tests"""
    print("🧪 Testing the self-test driver")
    print("=" * 50)

    tests = [
        test_random_strings,
        test_energy_checks,
        test_golden_suite,
        test_report_suite,
        test_failures,
        test_unexpected_errors,
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
