"""
Krein String Toolkit - Data Storage Utilities
Handles saving and loading computation history to JSON files.
"""

import json
import logging
import os
from datetime import datetime
from typing import List, Dict, Any, Optional

import pandas as pd

from .constants import data_directory

logger = logging.getLogger(__name__)


def ensure_data_directory(data_dir: Optional[str] = None) -> str:
    """
    Ensure the data directory exists

    Args:
        data_dir: Directory, defaults to KREIN_DATA_DIR or "data"

    Returns:
        Path to data directory
    """
    data_dir = data_dir or data_directory()
    os.makedirs(data_dir, exist_ok=True)
    return data_dir


def _history_path(module_name: str, data_dir: Optional[str]) -> str:
    return os.path.join(ensure_data_directory(data_dir), f"{module_name}_history.json")


def save_history(module_name: str, payload: Dict[str, Any], data_dir: Optional[str] = None) -> bool:
    """
    Append an entry to a module's history file

    Args:
        module_name: Name of the module (e.g., 'string_characteristic')
        payload: JSON-ready data to save
        data_dir: History directory

    Returns:
        True if successful, False otherwise
    """
    try:
        payload = dict(payload)
        payload.setdefault("timestamp", datetime.now().isoformat())

        existing_data = load_history(module_name, data_dir)
        existing_data.append(payload)

        with open(_history_path(module_name, data_dir), 'w', encoding='utf-8') as f:
            json.dump(existing_data, f, indent=2, ensure_ascii=False)
        return True
    except (OSError, TypeError, ValueError) as e:
        logger.error("Error saving history for %s: %s", module_name, e)
        return False


def load_history(module_name: str, data_dir: Optional[str] = None) -> List[Dict[str, Any]]:
    """
    Load a module's history

    Args:
        module_name: Name of the module
        data_dir: History directory

    Returns:
        List of recorded computations, empty when missing or unreadable
    """
    filepath = _history_path(module_name, data_dir)
    if not os.path.exists(filepath):
        return []
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        logger.warning("Error loading history for %s: %s", module_name, e)
        return []
    return data if isinstance(data, list) else []


def clear_history(module_name: str, data_dir: Optional[str] = None) -> bool:
    try:
        filepath = _history_path(module_name, data_dir)
        if os.path.exists(filepath):
            os.remove(filepath)
        return True
    except OSError as e:
        logger.error("Error clearing history for %s: %s", module_name, e)
        return False


def _result_label(result: Any) -> str:
    if isinstance(result, dict):
        if "passed" in result:
            return "Passed" if result["passed"] else "Failed"
        return "Complex Result"
    if isinstance(result, (list, tuple)):
        return "List Result"
    return str(result)


def get_history_summary(module_name: str, data_dir: Optional[str] = None) -> Dict[str, Any]:
    """
    Get summary statistics for module history

    Args:
        module_name: Name of the module
        data_dir: History directory

    Returns:
        Dictionary with total count, last timestamp and most common verdict
    """
    history = load_history(module_name, data_dir)

    if not history:
        return {
            "total_calculations": 0,
            "last_calculation": None,
            "most_common_result": None
        }

    last_calculation = max(history, key=lambda x: x.get("timestamp", ""))
    labels = [_result_label(item["result"]) for item in history if "result" in item]
    most_common = max(set(labels), key=labels.count) if labels else None

    return {
        "total_calculations": len(history),
        "last_calculation": last_calculation.get("timestamp"),
        "most_common_result": most_common
    }


def export_history_csv(module_name: str, data_dir: Optional[str] = None) -> Optional[str]:
    """
    Export history as CSV string

    Nested inputs and results are flattened into dotted columns.

    Args:
        module_name: Name of the module
        data_dir: History directory

    Returns:
        CSV string or None when there is no history
    """
    history = load_history(module_name, data_dir)
    if not history:
        return None
    return pd.json_normalize(history).to_csv(index=False)


def save_calculation_result(module_name: str, inputs: Dict[str, Any], result: Dict[str, Any],
                            data_dir: Optional[str] = None) -> bool:
    """
    Save a computation with its inputs and outputs

    Args:
        module_name: Name of the module
        inputs: Input parameters
        result: Computed results
        data_dir: History directory

    Returns:
        True if successful, False otherwise
    """
    payload = {
        "module": module_name,
        "inputs": inputs,
        "result": result,
        "timestamp": datetime.now().isoformat()
    }
    return save_history(module_name, payload, data_dir)


def get_recent_calculations(module_name: str, limit: int = 5,
                            data_dir: Optional[str] = None) -> List[Dict[str, Any]]:
    history = load_history(module_name, data_dir)
    sorted_history = sorted(history, key=lambda x: x.get("timestamp", ""), reverse=True)
    return sorted_history[:limit]
