"""
Krein String Toolkit - Spectrum and Bounds
Eigenvalues of psi(-Laplacian) + V and the eigenvalue estimate against the classical operator.
"""

from typing import Any, Dict

import pandas as pd
import streamlit as st

from utils.layout import (
    set_page_config, header, render_sidebar, render_export_bar, render_success_message,
    render_warning_message, render_error_message, render_metric_card, render_calculation_summary,
    render_source_picker, build_source, theme_icon_toggle
)
from utils.constants import (
    APP_STRINGS, DEFAULT_EIGEN_COUNT, DEFAULT_HALF_LENGTH, MIN_GRID_POINTS, MAX_GRID_POINTS
)
from utils.storage import save_calculation_result
from krein import io, spectral
from krein.errors import KreinError
from krein.extension import validate_grid

MODULE_NAME = "spectrum_bounds"
GRID_SIZES = [2 ** k for k in range(MIN_GRID_POINTS.bit_length() - 1, MAX_GRID_POINTS.bit_length())]


def main():
    """Spectrum and bounds page"""

    set_page_config("Spectrum & Bounds", "📈")
    theme_icon_toggle()
    render_sidebar(MODULE_NAME)

    header(
        title="Spectrum & Bounds",
        subtitle="Eigenvalues of ψ(−Δ) + V on a periodic grid"
    )

    tab_spectrum, tab_homogeneous = st.tabs(["Spectrum and estimate", "Homogeneous report"])

    with tab_spectrum:
        render_spectrum_tab()

    with tab_homogeneous:
        render_homogeneous_tab()


def _grid_inputs(key: str) -> Dict[str, Any]:
    col1, col2 = st.columns(2)
    with col1:
        n = st.selectbox("Grid points n", GRID_SIZES, index=GRID_SIZES.index(256), key=f"{key}_n")
    with col2:
        half_length = st.number_input("Half length X", min_value=0.1, value=DEFAULT_HALF_LENGTH,
                                      format="%.6g", key=f"{key}_X")
    return {"n": int(n), "half_length": half_length}


def render_spectrum_tab() -> None:
    st.markdown("### 🎻 Multiplier")
    spec = render_source_picker("spectrum", allow_identity=True)

    st.markdown("### ⚙️ Potential and grid")
    col1, col2, col3 = st.columns(3)
    with col1:
        p = st.number_input("Potential degree p (V = scale·|x|^p)", min_value=0.1, value=2.0, format="%.4g")
    with col2:
        scale = st.number_input("Potential scale", min_value=0.0, value=1.0, format="%.6g")
    with col3:
        k = st.number_input("Eigenvalues", min_value=1, max_value=64, value=DEFAULT_EIGEN_COUNT)

    grid = _grid_inputs("spectrum")

    check_estimate = st.checkbox("Check the eigenvalue estimate", value=True)
    lam = st.number_input("λ for the estimate", min_value=1e-6, value=10.0, format="%.6g",
                          disabled=not check_estimate)

    if st.button("🚀 Solve", type="primary", key="solve_spectrum"):
        is_valid, message = validate_grid(grid["n"], grid["half_length"])
        if not is_valid:
            render_error_message(message)
            return
        inputs = {
            **spec, **grid, "potential": {"kind": "power", "p": p, "scale": scale},
            "k": int(k), "lambda": lam if check_estimate else None,
        }
        compute_spectrum(inputs)


def compute_spectrum(inputs: Dict[str, Any]) -> None:
    """
    Solve the eigenproblem and, when asked, check the estimate

    Args:
        inputs: Page inputs, as recorded in the history
    """
    try:
        with st.spinner(APP_STRINGS["loading_message"]):
            source = build_source(inputs)
            potential = io.potential_from_dict(inputs["potential"], inputs["n"], inputs["half_length"])
            problem = spectral.SpectralProblem(source, potential)
            result = spectral.solve_problem(problem, inputs["k"])
            report = None
            if inputs["lambda"] is not None and source != "identity":
                report = spectral.check_theorem_est(source, potential, inputs["lambda"])
    except KreinError as e:
        render_error_message(f"{type(e).__name__}: {e}")
        return

    st.markdown("### 📊 Eigenvalues")

    col1, col2 = st.columns(2)
    with col1:
        render_metric_card("μ₁", f"{result.eigenvalues[0]:.10g}", f"multiplier: {problem.multiplier.label}")
    with col2:
        render_metric_card("Largest residual", f"{result.residuals.max():.2e}", "relative to |μ|")

    frame = pd.DataFrame({
        "index": range(1, len(result.eigenvalues) + 1),
        "eigenvalue": result.eigenvalues,
        "residual": result.residuals,
    })
    st.dataframe(frame, use_container_width=True)

    result_dict = result.to_dict()
    if report is not None:
        st.markdown("### 📐 Eigenvalue estimate")
        if report.vacuous:
            render_warning_message(f"No comparison eigenvalue lies below λ = {report.lam:g}; the estimate is vacuous.")
        elif report.passed:
            render_success_message(f"μ_{report.index} = {report.mu:.10g} ≤ ψ(λ) = {report.psi_bound:.10g}")
        else:
            render_error_message(f"μ_{report.index} = {report.mu:.10g} exceeds ψ(λ) = {report.psi_bound:.10g}")
        render_calculation_summary(report.to_dict())
        result_dict["estimate"] = report.to_dict()

    render_export_bar(
        csv_data=io.frame_to_csv(frame),
        csv_filename="eigenvalues.csv",
        json_data=io.dumps(result_dict),
        json_filename="spectrum.json"
    )

    recorded = {"eigenvalues": result.eigenvalues}
    if report is not None:
        recorded["passed"] = report.passed
    save_calculation_result(MODULE_NAME, io.plain(inputs), io.plain(recorded))


def render_homogeneous_tab() -> None:
    st.markdown("""
    Compares μₙ of (−Δ)^(α/2) + |x|^p with powers of λₙ(−Δ + |x|^p). Both the stated
    bound and the bound with the exact constant are listed. The report is informational.
    """)

    col1, col2, col3 = st.columns(3)
    with col1:
        alpha = st.number_input("Order α", min_value=0.05, max_value=2.0, value=1.0, format="%.4g")
    with col2:
        p = st.number_input("Degree p", min_value=0.1, value=2.0, format="%.4g", key="homogeneous_p")
    with col3:
        count = st.number_input("Rows", min_value=1, max_value=32, value=8)

    grid = _grid_inputs("homogeneous")

    if st.button("🚀 Compare", type="primary", key="solve_homogeneous"):
        try:
            with st.spinner(APP_STRINGS["loading_message"]):
                report = spectral.homogeneous_bound_report(alpha, p, grid["n"], grid["half_length"], int(count))
        except KreinError as e:
            render_error_message(f"{type(e).__name__}: {e}")
            return

        st.markdown(f"Exponent (2+p)α / (2α+2p) = **{report.exponent:.10g}**")
        frame = report.to_frame()
        st.dataframe(frame, use_container_width=True)

        render_export_bar(
            csv_data=io.frame_to_csv(frame),
            csv_filename="homogeneous_bound.csv",
            json_data=io.dumps(report.to_dict()),
            json_filename="homogeneous_bound.json"
        )
        save_calculation_result(MODULE_NAME, {"alpha": alpha, "p": p, **grid}, io.plain(report.to_dict()))


if __name__ == "__main__":
    main()
