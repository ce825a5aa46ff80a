#!/usr/bin/env python3
"""
Test script for Krein String Toolkit
Verifies the history store, the JSON codec and the command line without
running the full Streamlit app
"""

import json
import sys
import os
import tempfile

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def test_imports():
    """Test all module imports"""
    print("Testing module imports...")

    from utils.constants import APP_STRINGS, DASHBOARD_ENTRIES, DEFAULT_STRING_SPEC
    assert APP_STRINGS and DASHBOARD_ENTRIES
    json.loads(DEFAULT_STRING_SPEC)
    print("✅ Constants module imported")

    from utils.storage import save_history, load_history
    print("✅ Storage module imported")

    from utils.layout import use_theme, header, build_source
    print("✅ Layout module imported")

    import krein
    from krein import catalog, cbf, extension, io, nodal, ode_engine, selftest, spectral
    assert krein.__version__
    print("✅ krein package imported")


def test_storage():
    """History files in a scratch directory"""
    print("\nTesting storage...")

    from utils.storage import (
        clear_history, export_history_csv, get_history_summary, load_history, save_calculation_result
    )

    with tempfile.TemporaryDirectory() as data_dir:
        assert load_history("test_module", data_dir) == []
        assert export_history_csv("test_module", data_dir) is None

        assert save_calculation_result("test_module", {"lam": 1.0}, {"passed": True}, data_dir)
        assert save_calculation_result("test_module", {"lam": 2.0}, {"passed": False}, data_dir)
        assert save_calculation_result("test_module", {"lam": 3.0}, {"passed": True}, data_dir)
        history = load_history("test_module", data_dir)
        assert len(history) == 3 and history[0]["inputs"] == {"lam": 1.0}
        print(f"✅ Load history: {len(history)} records")

        summary = get_history_summary("test_module", data_dir)
        assert summary["total_calculations"] == 3
        assert summary["most_common_result"] == "Passed"

        csv_data = export_history_csv("test_module", data_dir)
        assert "inputs.lam" in csv_data.splitlines()[0]
        print("✅ Summary and CSV export")

        assert clear_history("test_module", data_dir)
        assert load_history("test_module", data_dir) == []
        print("✅ History cleared")


def test_io():
    """JSON specs and error reporting"""
    print("\nTesting the JSON codec...")

    from krein import catalog, io
    from krein.errors import InputError
    from krein.string_core import KreinString
    from utils.constants import DEFAULT_STRING_SPEC

    string = io.source_from_dict(io.parse_json(DEFAULT_STRING_SPEC))
    assert isinstance(string, KreinString)
    assert len(string.atoms) == 1

    entry = io.source_from_dict({"catalog": "quasi_relativistic", "params": {"m": 2.0}})
    assert isinstance(entry, catalog.CatalogEntry) and entry.params["m"] == 2.0
    assert io.source_from_dict("identity") == "identity"
    print("✅ String specs and catalog references")

    try:
        io.parse_json('{"segments": [', "spec.json")
        raise AssertionError("broken JSON accepted")
    except InputError as e:
        assert "spec.json" in str(e)
    try:
        io.load_json("/nonexistent/spec.json")
        raise AssertionError("missing file accepted")
    except InputError:
        pass
    print("✅ Broken and missing files reported as input errors")

    import pandas as pd

    with tempfile.TemporaryDirectory() as work:
        spec = os.path.join(work, "note.json")
        with open(spec, "w", encoding="utf-8") as f:
            f.write('{"catalog": "classical", "note": "ψ(λ) = √λ"}')
        assert io.load_json(spec)["note"] == "ψ(λ) = √λ"
        table = os.path.join(work, "table.csv")
        io.write_csv(pd.DataFrame({"λ": [1.0], "ψ": [1.0]}), table)
        with open(table, encoding="utf-8") as f:
            assert f.readline().strip() == "λ,ψ"
    print("✅ Files are read and written as UTF-8")


def test_cli():
    """Command line exit codes and outputs"""
    print("\nTesting the command line...")

    from krein import cli
    from krein.errors import InputError
    from utils.constants import EXIT_OK, EXIT_INPUT_ERROR

    grid = cli.parse_lambda_grid("0.1:10:5")
    assert grid.size == 5
    assert cli.parse_lambda_grid("1,2,4").tolist() == [1.0, 2.0, 4.0]
    for bad in ("4,2,1", "1:2", "a,b"):
        try:
            cli.parse_lambda_grid(bad)
            raise AssertionError(f"grid '{bad}' accepted")
        except InputError:
            pass
    print("✅ Lambda grids parsed")

    with tempfile.TemporaryDirectory() as work:
        listing = os.path.join(work, "catalog.json")
        assert cli.main(["--quiet", "catalog", "list", "--output", listing]) == EXIT_OK
        with open(listing, encoding="utf-8") as f:
            names = [item["name"] for item in json.load(f)]
        assert "classical" in names
        print(f"✅ catalog list: {len(names)} entries")

        spec = os.path.join(work, "quasi.json")
        with open(spec, "w", encoding="utf-8") as f:
            json.dump({"catalog": "quasi_relativistic", "params": {"m": 1.0}}, f)
        table = os.path.join(work, "psi.csv")
        code = cli.main(["--quiet", "psi", "--input", spec, "--lambda-grid", "0.1:10:4", "--output", table])
        assert code == EXIT_OK
        with open(table, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == "lambda,psi" and len(lines) == 5
        print("✅ psi table written")

        assert cli.main(["--quiet", "catalog", "show", "nonexistent"]) == EXIT_INPUT_ERROR
        assert cli.main(["--quiet", "psi"]) == EXIT_INPUT_ERROR
        assert cli.main(["--quiet", "spectrum", "--input", spec, "--n", "12"]) == EXIT_INPUT_ERROR
        assert cli.main(["--quiet", "catalog", "show", "classical", "--params", "{bad"]) == EXIT_INPUT_ERROR
    print("✅ Input errors exit with code 2")


def test_home_page():
    """Home page renders without exceptions"""
    print("\nTesting the home page...")

    from streamlit.testing.v1 import AppTest

    with tempfile.TemporaryDirectory() as data_dir:
        os.environ["KREIN_DATA_DIR"] = data_dir
        try:
            app = AppTest.from_file(os.path.join(os.path.dirname(os.path.abspath(__file__)), "Home.py"))
            app.run(timeout=30)
            assert not app.exception
        finally:
            os.environ.pop("KREIN_DATA_DIR", None)
    print("✅ Home page rendered")


def main():
    """Run all tests"""
    print("🧪 Testing Krein String Toolkit")
    print("=" * 50)

    tests = [
        test_imports,
        test_storage,
        test_io,
        test_cli,
        test_home_page,
    ]

    passed = 0
    total = len(tests)

    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"❌ {test.__name__}: {type(e).__name__}: {e}")

    print("\n" + "=" * 50)
    print(f"📊 Test Results: {passed}/{total} tests passed")

    if passed == total:
        print("🎉 All tests passed! Application is ready to run.")
        print("\nTo start the application:")
        print("streamlit run Home.py")
    else:
        print("❌ Some tests failed. Please check the errors above.")

    return passed == total


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
