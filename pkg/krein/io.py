"""
Krein String Toolkit - File Formats
JSON string specs, catalog and problem references, and the CSV/JSON writers
used by the command line.
"""

import json
import logging
import math
import sys
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from utils.constants import END_CONDITION_ALIASES, FLOAT_FORMAT
from . import catalog
from .errors import InputError
from .extension import GridFunction
from .spectral import SpectralProblem, make_potential
from .string_core import Atom, CoefficientA, DensitySegment, KreinString, make_string

logger = logging.getLogger(__name__)

SEGMENT_KEYS = {"lo", "hi", "family", "c", "p", "q", "r", "origin", "knots", "values"}
STRING_KEYS = {"segments", "atoms", "R", "end"}
ATOM_KEYS = {"s", "mass"}
CATALOG_KEYS = {"catalog", "params"}
PROBLEM_KEYS = {"source", "potential"}
POTENTIAL_KEYS = {"kind", "p", "scale", "values"}


# =============================================================================
# READING
# =============================================================================

def _reject_unknown(data: Dict[str, Any], allowed: set, what: str) -> None:
    if not isinstance(data, dict):
        raise InputError(f"{what} must be a JSON object")
    unknown = set(data) - allowed
    if unknown:
        raise InputError(f"Unknown keys in {what}: {', '.join(sorted(unknown))}")


def _bound(value: Optional[float]) -> float:
    return math.inf if value is None else float(value)


def parse_json(text: str, origin: str = "input") -> Any:
    """Parse JSON text, reporting parse errors with their position."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"Malformed JSON in {origin}: {e.msg} at line {e.lineno}, column {e.colno}") from e


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError as e:
        raise InputError(f"Input file not found: {path}") from e
    return parse_json(text, path)


def segment_from_dict(data: Dict[str, Any]) -> DensitySegment:
    _reject_unknown(data, SEGMENT_KEYS, "segment")
    if "lo" not in data or "family" not in data:
        raise InputError("A segment needs 'lo' and 'family'")
    return DensitySegment(
        float(data["lo"]), _bound(data.get("hi")), data["family"],
        c=float(data.get("c", 0.0)), p=float(data.get("p", 0.0)),
        q=float(data.get("q", 0.0)), r=float(data.get("r", 0.0)),
        origin=None if data.get("origin") is None else float(data["origin"]),
        knots=tuple(data.get("knots", ())), values=tuple(data.get("values", ())),
    )


def string_from_dict(data: Dict[str, Any]) -> KreinString:
    """
    Decode the string-spec schema

    Args:
        data: {"segments": [...], "atoms": [{"s", "mass"}], "R": null|float, "end": ...}

    Returns:
        Validated KreinString
    """
    _reject_unknown(data, STRING_KEYS, "string spec")
    segments = [segment_from_dict(seg) for seg in data.get("segments", [])]
    atoms = []
    for atom in data.get("atoms", []):
        _reject_unknown(atom, ATOM_KEYS, "atom")
        atoms.append(Atom(float(atom["s"]), float(atom["mass"])))
    end = data.get("end")
    if end is not None:
        if end not in END_CONDITION_ALIASES:
            raise InputError(f"Unknown end condition '{end}'")
        end = END_CONDITION_ALIASES[end]
    length = data.get("R")
    return make_string(segments, atoms, None if length is None and segments else _bound(length), end)


def coefficient_from_dict(data: Dict[str, Any]) -> CoefficientA:
    _reject_unknown(data, {"pieces", "r"}, "coefficient")
    return CoefficientA(tuple(segment_from_dict(piece) for piece in data["pieces"]), _bound(data.get("r")))


def source_from_dict(data: Union[Dict[str, Any], str]) -> Union[KreinString, catalog.CatalogEntry, str]:
    """A string spec, a catalog reference {"catalog", "params"} or "identity"."""
    if data == "identity":
        return "identity"
    if isinstance(data, dict) and "catalog" in data:
        _reject_unknown(data, CATALOG_KEYS, "catalog reference")
        return catalog.lookup(data["catalog"], data.get("params"))
    if isinstance(data, dict):
        return string_from_dict(data)
    raise InputError("Expected a string spec, a catalog reference or \"identity\"")


def potential_from_dict(data: Dict[str, Any], n: int, half_length: float) -> GridFunction:
    _reject_unknown(data, POTENTIAL_KEYS, "potential")
    params = {key: value for key, value in data.items() if key != "kind"}
    return make_potential(data.get("kind", "power"), n, half_length, **params)


def problem_from_dict(data: Dict[str, Any], n: int, half_length: float) -> SpectralProblem:
    """Problem spec {"source": ..., "potential": {...}}; a bare source means V = x^2."""
    if isinstance(data, dict) and "source" in data:
        _reject_unknown(data, PROBLEM_KEYS, "problem spec")
        potential = potential_from_dict(data.get("potential", {"kind": "power", "p": 2.0}), n, half_length)
        return SpectralProblem(source_from_dict(data["source"]), potential)
    return SpectralProblem(source_from_dict(data), make_potential("power", n, half_length, p=2.0))


# =============================================================================
# WRITING
# =============================================================================

def plain(obj: Any) -> Any:
    """JSON-ready copy: numpy scalars and arrays unwrapped, non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(key): plain(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [plain(value) for value in obj.tolist()]
    if isinstance(obj, np.generic):
        return plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(plain(obj), indent=2) + "\n"


def write_json(obj: Any, path: Optional[str] = None) -> None:
    """Write JSON to path, or to stdout when path is None."""
    text = dumps(obj)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("wrote %s", path)


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: Optional[str] = None) -> None:
    """Write a table with 17 significant digits, to path or stdout."""
    text = frame_to_csv(frame)
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("wrote %s (%d rows)", path, len(frame))
