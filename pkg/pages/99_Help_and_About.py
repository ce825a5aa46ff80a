"""
Krein String Toolkit - Help and About
User guide, glossary, file formats and application information.
"""

import streamlit as st

from utils.layout import (
    set_page_config, header, render_sidebar, render_info_card, render_footer, theme_icon_toggle
)
from utils.constants import DEFAULT_STRING_SPEC, DENSITY_FAMILIES, END_CONDITIONS
from krein import catalog


def main():
    """Help and About main function"""

    set_page_config("Help & About", "❓")
    theme_icon_toggle()
    render_sidebar()

    header(
        title="Help & About",
        subtitle="User guide, glossary and file formats"
    )

    tab1, tab2, tab3, tab4 = st.tabs([
        "📖 How to Use", "📚 Glossary", "🗂️ File Formats", "ℹ️ About"
    ])

    with tab1:
        render_how_to_use()

    with tab2:
        render_glossary()

    with tab3:
        render_file_formats()

    with tab4:
        render_about()


def render_how_to_use():
    """Render how to use guide"""

    st.markdown("## 📖 How to Use the Krein String Toolkit")

    col1, col2 = st.columns(2)

    with col1:
        render_info_card(
            title="1. Choose a String",
            content="Pick a catalog entry and its parameters, or paste a JSON string spec.",
            icon="🎻"
        )
        render_info_card(
            title="2. Set the Grid",
            content="λ grids are geometric. Periodic grids use a power of two between 8 and 4096 points on [−X, X).",
            icon="⚙️"
        )

    with col2:
        render_info_card(
            title="3. Compute",
            content="Nothing runs until you press the button. Large grids with a string multiplier solve one ODE per frequency.",
            icon="🚀"
        )
        render_info_card(
            title="4. Export",
            content="Tables export as CSV and reports as JSON, with 17 significant digits.",
            icon="📤"
        )

    st.markdown("### 🛠️ Tool-Specific Guides")

    st.markdown("""
    **🎻 String Characteristic**
    - Tabulates ψ on a geometric λ grid and checks it is nonnegative, nondecreasing and concave
    - Catalog entries are compared with their closed-form ψ
    - Profiles φ_λ on [0, s] (or [0, R) for finite strings)

    **📈 Spectrum & Bounds**
    - Lowest eigenvalues of ψ(−Δ) + V with residuals
    - The estimate μₙ ≤ ψ(λ), where n counts eigenvalues of −Δ + γV below λ
    - The homogeneous report for (−Δ)^(α/2) + |x|^p

    **🧩 Nodal Domains**
    - Extends the n-th eigenfunction into the half-space and labels its nodal parts
    - Weak bound: the largest index of μₙ's cluster. Strong bound: the smallest, asserted for positive Lipschitz strings
    """)

    st.markdown("### 💻 Command Line")

    st.code("""python -m krein catalog list
python -m krein psi --input string.json --lambda-grid 0.01:10000:32
python -m krein spectrum --input problem.json --n 512 --half-length 20 --k 10
python -m krein nodal --input problem.json --index 3
python -m krein selftest --suite all""", language="bash")


def render_glossary():
    """Render glossary of terms"""

    st.markdown("## 📚 Glossary")

    glossary_terms = {
        "Krein string": "A nonnegative measure A(ds) on [0, R), made here of density segments and atoms, with an end condition when R is finite.",
        "Characteristic ψ": "ψ(λ) = −φ_λ'(0), the Dirichlet-to-Neumann value of the string at spectral parameter λ. Always a complete Bernstein function.",
        "Profile φ_λ": "The solution of φ'' = λAφ with φ(0) = 1 that stays bounded (or meets the end condition at R).",
        "Complete Bernstein function": "A function whose sampled values must be nonnegative, nondecreasing and concave; those are the conditions checked.",
        "Coefficient a(t)": "The divergence-form description of the same extension problem; strings and coefficients convert into each other.",
        "Complementary string": "The string whose characteristic is λ / ψ(λ).",
        "Harmonic extension": "u(s, x) whose Fourier modes are φ_{ξ²}(s) times those of the boundary data f.",
        "Positive Lipschitz": "A string with a positive density bounded away from zero and no atoms; the strong Courant bound is asserted for these.",
        "Nodal part": "A connected component of {u > 0} or {u < 0} after cells below the zero threshold are cleared.",
        "Multiplicity cluster": "Eigenvalues within a relative 1e−6 of μₙ; its index range gives the strong and weak bounds.",
    }

    for term, definition in glossary_terms.items():
        with st.expander(f"**{term}**"):
            st.markdown(definition)


def render_file_formats():
    """Render the accepted JSON and CSV formats"""

    st.markdown("## 🗂️ String Spec")
    st.code(DEFAULT_STRING_SPEC, language="json")

    st.markdown(f"""
    - **family**: one of {', '.join(f'`{name}`' for name in DENSITY_FAMILIES)}
    - **hi** = `null` means +∞; **R** = `null` means the string lives on [0, ∞)
    - **end**: one of {', '.join(f'`{name}`' for name in END_CONDITIONS)} (finite strings only)
    - Unknown keys are rejected
    """)

    st.markdown("## 📚 Catalog References")
    st.code('{"catalog": "caffarelli_silvestre", "params": {"alpha": 1.0}}', language="json")
    st.markdown(", ".join(f"`{name}`" for name in catalog.list_entries()))

    st.markdown("## 📈 Problem Spec")
    st.code('{"source": {"catalog": "classical"}, "potential": {"kind": "power", "p": 2.0, "scale": 1.0}}',
            language="json")
    st.markdown("A bare string spec or catalog reference means V = x². `\"identity\"` selects ψ(λ) = λ.")

    st.markdown("## 📋 CSV")
    st.markdown("""
    - Boundary data: columns `x,value` on the grid −X + 2Xk/n
    - Extensions: column `x` and one column per s level
    - All floats carry 17 significant digits
    """)


def render_about():
    """Render about information"""

    st.markdown("## ℹ️ About")

    st.markdown("""
    The toolkit computes with strings directly: ψ and φ come from a stiff ODE solver with
    rescaling, spectra from a Fourier multiplier on a periodic grid, and nodal parts from
    connected-component labelling with a periodic seam.

    Numbers are as good as their tolerances. Use `python -m krein selftest` to rerun
    the checks against the closed-form catalog.
    """)

    render_footer()


if __name__ == "__main__":
    main()
