"""
Krein String Toolkit - Nodal Domains
Extend eigenfunctions into the half-space, count their nodal parts and check the Courant bounds.
"""

from typing import Any, Dict

import pandas as pd
import streamlit as st

from utils.layout import (
    set_page_config, header, render_sidebar, render_export_bar, render_success_message,
    render_warning_message, render_error_message, render_metric_card, render_calculation_summary,
    render_source_picker, build_source, theme_icon_toggle
)
from utils.constants import APP_STRINGS, DEFAULT_HALF_LENGTH, DEFAULT_S_SCALE, NODAL_SWEEP, NODAL_THRESHOLD
from utils.storage import save_calculation_result
from krein import extension, io, nodal, spectral
from krein.errors import InputError, KreinError

MODULE_NAME = "nodal_domains"


def main():
    """Nodal domains page"""

    set_page_config("Nodal Domains", "🧩")
    theme_icon_toggle()
    render_sidebar(MODULE_NAME)

    header(
        title="Nodal Domains",
        subtitle="Nodal parts of harmonic extensions of eigenfunctions"
    )

    st.markdown("### 🎻 String")
    spec = render_source_picker("nodal")

    st.markdown("### ⚙️ Problem")
    col1, col2, col3 = st.columns(3)

    with col1:
        index = st.number_input("Eigenfunction index n", min_value=1, max_value=32, value=3)
        p = st.number_input("Potential degree p (V = |x|^p)", min_value=0.1, value=2.0, format="%.4g")

    with col2:
        n = st.selectbox("Grid points", [64, 128, 256, 512], index=1)
        half_length = st.number_input("Half length X", min_value=0.1, value=DEFAULT_HALF_LENGTH / 2.0, format="%.6g")

    with col3:
        levels = st.number_input("Levels in s", min_value=3, max_value=400, value=60)
        s_scale = st.number_input("Depth s", min_value=1e-3, value=DEFAULT_S_SCALE / 4.0, format="%.6g")

    threshold = st.select_slider("Zero threshold (relative)", options=NODAL_SWEEP, value=NODAL_THRESHOLD)

    if st.button("🚀 Count", type="primary"):
        if index + 2 > n:
            render_error_message("The index must leave room for the multiplicity cluster on the grid.")
            return
        inputs = {
            **spec, "index": int(index), "potential": {"kind": "power", "p": p},
            "n": int(n), "half_length": half_length, "levels": int(levels),
            "s_scale": s_scale, "threshold": threshold,
        }
        compute_nodal(inputs)


def compute_nodal(inputs: Dict[str, Any]) -> None:
    """
    Solve, extend the requested eigenfunction and label its nodal parts

    Args:
        inputs: Page inputs, as recorded in the history
    """
    try:
        with st.spinner(APP_STRINGS["loading_message"]):
            source = build_source(inputs)
            potential = io.potential_from_dict(inputs["potential"], inputs["n"], inputs["half_length"])
            problem = spectral.SpectralProblem(source, potential)
            string = problem.multiplier.string
            if string is None:
                raise InputError("Nodal counts need a string to extend with")

            eig = spectral.solve_problem(problem, inputs["index"] + 2)
            f = eig.eigenfunction(inputs["index"] - 1)
            s_levels = extension.default_levels(inputs["s_scale"], inputs["levels"], string.length)
            u = extension.harmonic_extension(string, f, s_levels)
            labeling = nodal.nodal_components(u, inputs["threshold"])
            verdict = nodal.courant_check(problem, inputs["index"], labeling, eig)
            sweep = nodal.threshold_sweep(u, NODAL_SWEEP)
            boundary_count = nodal.boundary_nodal_count(f, inputs["threshold"])
    except KreinError as e:
        render_error_message(f"{type(e).__name__}: {e}")
        return

    st.markdown("### 📊 Results")

    col1, col2, col3 = st.columns(3)
    with col1:
        render_metric_card("Nodal parts in the half-space", str(verdict.count),
                           f"threshold {inputs['threshold']:g}")
    with col2:
        render_metric_card("Sign changes on the boundary", str(boundary_count), "nodal intervals of f_n")
    with col3:
        render_metric_card(f"μ_{verdict.n}", f"{eig.eigenvalues[verdict.n - 1]:.10g}",
                           f"cluster {verdict.strong_bound}..{verdict.weak_bound}")

    if not verdict.weak_pass:
        render_error_message(f"{verdict.count} nodal parts exceed the weak bound {verdict.weak_bound}.")
    elif verdict.strong_pass:
        render_success_message(f"{verdict.count} nodal parts satisfy the strong bound {verdict.strong_bound}.")
    elif verdict.strong_asserted:
        render_error_message(f"{verdict.count} nodal parts exceed the strong bound {verdict.strong_bound}.")
    else:
        render_warning_message(
            f"{verdict.count} nodal parts exceed the strong bound {verdict.strong_bound}; "
            "the string is not positive Lipschitz, so only the weak bound applies."
        )

    if sweep.unstable:
        render_warning_message("The count changes by more than 10% across thresholds; refine the grid.")

    st.markdown("### 🎚️ Threshold sweep")
    sweep_frame = pd.DataFrame({"threshold": list(sweep.counts), "count": list(sweep.counts.values())})
    st.dataframe(sweep_frame, use_container_width=True)

    st.markdown("### 🧩 Components")
    components = pd.DataFrame({
        "label": range(1, labeling.count + 1),
        "sign": labeling.signs,
        "cells": labeling.sizes,
    })
    st.dataframe(components, use_container_width=True)

    result = {
        "verdict": verdict.to_dict(),
        "boundary_nodal_count": boundary_count,
        "sweep": {f"{t:g}": c for t, c in sweep.counts.items()},
        "sweep_unstable": sweep.unstable,
        "eigenvalues": eig.eigenvalues,
    }
    render_calculation_summary(verdict.to_dict())

    render_export_bar(
        csv_data=io.frame_to_csv(labeling.to_frame()),
        csv_filename=f"nodal_labels_{verdict.n}.csv",
        json_data=io.dumps(result),
        json_filename=f"nodal_{verdict.n}.json"
    )

    save_calculation_result(MODULE_NAME, io.plain(inputs), io.plain({"passed": verdict.passed, **result}))


if __name__ == "__main__":
    main()
