"""
Krein String Toolkit - String Characteristic
Tabulate psi(lambda) of a string, check the CBF conditions and profile phi.
"""

from typing import Any, Dict

import numpy as np
import pandas as pd
import streamlit as st

from utils.layout import (
    set_page_config, header, render_sidebar, render_export_bar, render_success_message,
    render_warning_message, render_error_message, render_metric_card, render_calculation_summary,
    render_source_picker, build_source, theme_icon_toggle
)
from utils.constants import APP_STRINGS, CBF_GRID, CBF_TOL, DEFAULT_S_SCALE, PSI_TOL
from utils.storage import save_calculation_result
from krein import cbf, io, ode_engine
from krein.catalog import CatalogEntry
from krein.errors import KreinError

MODULE_NAME = "string_characteristic"


def main():
    """String characteristic page"""

    set_page_config("String Characteristic", "🎻")
    theme_icon_toggle()
    render_sidebar(MODULE_NAME)

    header(
        title="String Characteristic",
        subtitle="psi(lambda), the CBF conditions and the profile phi of a Krein string"
    )

    st.markdown("### 🎻 String")
    spec = render_source_picker("characteristic")

    st.markdown("### ⚙️ Grid")
    col1, col2, col3 = st.columns(3)

    with col1:
        lam_lo = st.number_input("Smallest λ", min_value=1e-8, value=float(CBF_GRID["lo"]), format="%.6g")
        lam_hi = st.number_input("Largest λ", min_value=1e-6, value=float(CBF_GRID["hi"]), format="%.6g")

    with col2:
        count = st.number_input("Grid points", min_value=4, max_value=256, value=int(CBF_GRID["count"]))
        tol = st.number_input("psi tolerance", min_value=1e-14, max_value=1e-2, value=PSI_TOL, format="%.1e")

    with col3:
        profile_lam = st.number_input("λ for the φ profile", min_value=0.0, value=1.0, format="%.6g")
        s_scale = st.number_input("Profile depth s", min_value=1e-3, value=DEFAULT_S_SCALE, format="%.6g")

    if st.button("🚀 Compute", type="primary"):
        if lam_hi <= lam_lo:
            render_error_message("The largest λ must exceed the smallest.")
            return
        inputs = {
            "source": spec, "lambda_lo": lam_lo, "lambda_hi": lam_hi, "count": int(count),
            "tol": tol, "profile_lambda": profile_lam, "s_scale": s_scale,
        }
        compute_characteristic(inputs)


def compute_characteristic(inputs: Dict[str, Any]) -> None:
    """
    Sample psi, check it and profile phi

    Args:
        inputs: Page inputs, as recorded in the history
    """
    try:
        with st.spinner(APP_STRINGS["loading_message"]):
            source = build_source(inputs["source"])
            entry = source if isinstance(source, CatalogEntry) else None
            string = entry.string if entry else source

            grid = cbf.geometric_grid(inputs["lambda_lo"], inputs["lambda_hi"], inputs["count"])
            table = cbf.sample_psi(string, grid, inputs["tol"])
            report = cbf.check_cbf(table, CBF_TOL)

            if string.is_finite:
                knots = np.linspace(0.0, string.length * (1.0 - 1e-9), 101)
            else:
                knots = np.linspace(0.0, inputs["s_scale"], 101)
            profile = ode_engine.phi(string, inputs["profile_lambda"], knots, inputs["tol"])
    except KreinError as e:
        render_error_message(f"{type(e).__name__}: {e}")
        return

    st.markdown("### 📊 Results")

    col1, col2, col3 = st.columns(3)

    with col1:
        render_metric_card("ψ(0)", f"{ode_engine.psi_at_zero(string):.6g}",
                           "finite string" if string.is_finite else "string on [0, ∞)")
    with col2:
        render_metric_card("CBF conditions", "Passed" if report.passed else "Failed",
                           f"{report.n_points} points, tol {report.tol:g}")
    with col3:
        render_metric_card(f"ψ({inputs['profile_lambda']:g})", f"{profile.psi_value:.10g}",
                           "from the φ profile")

    if report.passed:
        render_success_message("Sampled ψ is nonnegative, nondecreasing and concave on the grid.")
    else:
        render_warning_message(f"Violated conditions: {', '.join(report.conditions_failed())}")

    if profile.clamped:
        render_warning_message("φ lost precision to cancellation at some knots and was clamped there.")

    frame = table.to_frame()
    if entry is not None:
        frame["closed_form"] = [entry.psi(float(lam)) for lam in table.lambda_grid]
        frame["relative_error"] = np.abs(frame["psi"] - frame["closed_form"]) / np.maximum(frame["closed_form"].abs(), 1e-300)
        worst = float(frame["relative_error"].max())
        if worst <= entry.tolerance:
            render_success_message(f"Matches the closed form of '{entry.name}' within {entry.tolerance:g} (worst {worst:.2e}).")
        else:
            render_warning_message(f"Differs from the closed form of '{entry.name}' by up to {worst:.2e}.")

    st.markdown("### 📋 ψ table")
    st.dataframe(frame, use_container_width=True)

    if report.violations:
        st.markdown("### 🚩 Violations")
        st.dataframe(pd.DataFrame(report.to_dict()["violations"]), use_container_width=True)

    st.markdown("### 📈 φ profile")
    profile_frame = pd.DataFrame({"s": profile.s_grid, "phi": profile.phi, "phi_prime": profile.phi_prime})
    st.dataframe(profile_frame, use_container_width=True)

    summary = {
        "string_finite": string.is_finite,
        "total_mass_finite": string.total_mass_is_finite,
        "grid_points": int(table.lambda_grid.size),
        "cbf_passed": report.passed,
        "profile_lambda": inputs["profile_lambda"],
        "psi_at_profile_lambda": profile.psi_value,
    }
    render_calculation_summary(summary)

    render_export_bar(
        csv_data=io.frame_to_csv(frame),
        csv_filename="psi_table.csv",
        json_data=io.dumps({"summary": summary, "cbf": report.to_dict()}),
        json_filename="cbf_report.json"
    )

    save_calculation_result(MODULE_NAME, io.plain(inputs), io.plain({"passed": report.passed, **summary}))


if __name__ == "__main__":
    main()
