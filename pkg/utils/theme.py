"""
Krein String Toolkit - Theme System
Design tokens and color palettes for the dashboard.
"""

from dataclasses import dataclass
from typing import Dict


@dataclass(frozen=True)
class Palette:
    name: str
    # Core neutrals
    bg: str
    bg_soft: str
    surface: str
    surface_alt: str
    text: str
    text_muted: str
    # Accents
    primary: str
    primary_hover: str
    ring: str
    # Semantic
    success: str
    warning: str
    danger: str
    # Borders / outlines
    border: str
    shadow: str


KREIN_DARK = Palette(
    name="Krein Dark",
    bg="#0b1020",
    bg_soft="#10172a",
    surface="#1a2238",
    surface_alt="#222c47",
    text="#e6e9f2",
    text_muted="#9aa5c0",
    primary="#6366f1",     # indigo
    primary_hover="#4f46e5",
    ring="#a5b4fc",
    success="#22c55e",
    warning="#f59e0b",
    danger="#ef4444",
    border="rgba(154,165,192,0.25)",
    shadow="0 8px 24px rgba(0,0,0,0.25)"
)

KREIN_LIGHT = Palette(
    name="Krein Light",
    bg="#f8fafc",
    bg_soft="#eef1f8",
    surface="#ffffff",
    surface_alt="#f3f4f9",
    text="#0b1020",
    text_muted="#3b4560",
    primary="#4f46e5",
    primary_hover="#4338ca",
    ring="#4f46e5",
    success="#16a34a",
    warning="#d97706",
    danger="#dc2626",
    border="rgba(11,16,32,0.12)",
    shadow="0 8px 20px rgba(11,16,32,0.08)"
)

PALETTES: Dict[str, Palette] = {
    "Krein Dark": KREIN_DARK,
    "Krein Light": KREIN_LIGHT,
}

DEFAULT_PALETTE = "Krein Dark"
CURRENT_THEME_KEY = "krein_palette"
