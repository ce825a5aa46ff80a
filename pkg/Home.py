"""
Krein String Toolkit - Main Application
Entry point for the Streamlit multi-page dashboard.
"""

import streamlit as st

from utils.layout import (
    set_page_config, header, render_sidebar, render_page_navigation,
    render_footer, render_info_card, theme_icon_toggle
)
from utils.constants import APP_STRINGS


def main():
    """Main application entry point"""

    set_page_config("Home", "🎻")
    theme_icon_toggle()
    render_sidebar()

    header(
        title=APP_STRINGS["app_title"],
        subtitle=APP_STRINGS["app_description"]
    )

    st.markdown("## 🎯 Welcome")

    st.markdown("""
    A Krein string is a mass distribution on a half-line or a finite interval. Its
    characteristic **ψ(λ)** is a complete Bernstein function, and every such function
    comes from exactly one string. The toolkit turns a string into ψ, into the profile
    **φ** used to extend boundary data into the half-space, and into the non-local
    operator **ψ(−Δ) + V** whose spectrum and nodal structure it then studies.
    """)

    col1, col2, col3 = st.columns(3)

    with col1:
        render_info_card(
            "Strings and ψ",
            "Build a string from densities and atoms, or pick a catalog entry. Tabulate ψ and check the CBF conditions.",
            "🎻"
        )

    with col2:
        render_info_card(
            "Spectra",
            "Eigenvalues of ψ(−Δ) + V on a periodic grid, with the estimate against the classical operator.",
            "📈"
        )

    with col3:
        render_info_card(
            "Nodal domains",
            "Extend eigenfunctions into the half-space and count their nodal parts against the Courant bounds.",
            "🧩"
        )

    render_page_navigation()

    st.markdown("## 🚀 Quick Start")

    st.markdown("""
    1. **Pick a tool** from the sidebar
    2. **Choose a string**: a catalog entry or a JSON string spec
    3. **Press the compute button**: nothing runs before you ask
    4. **Export** the tables as CSV or JSON

    The same computations run from the command line: `python -m krein --help`.
    """)

    st.markdown("## ⚠️ Accuracy")

    st.info(APP_STRINGS["disclaimer"])

    render_footer()


if __name__ == "__main__":
    main()
