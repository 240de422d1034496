"""
File utility functions for splitstep.

This module contains the writers for every output file: CSV tables through
pandas, plain-text matrices through numpy and JSON metadata sidecars. Writers
take no timestamps or host details, so equal inputs give byte-identical files.
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from ..core.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, os.PathLike]

# Output file names
PATHS_FILE = "paths.csv"
SUMMARY_CSV_FILE = "summary.csv"
ERRORS_FILE = "errors.csv"
METADATA_FILE = "metadata.json"
EFFECTIVE_CONFIG_FILE = "effective.ini"
SUPPORT_FILE = "support.csv"
MASS_FILE = "mass.csv"
FIELD_FILE = "field.txt"
SNAPSHOT_TIMES_FILE = "snapshot_times.csv"
CONTOUR_FILE = "contour.txt"
SURVIVAL_FILE = "survival.csv"
THETA_FILE = "theta_c.csv"
SWEEP_FILE = "sweep.csv"
SAMPLES_FILE = "samples.csv"
MATRIX_FORMAT = "%.10g"


def ensure_dir(path: PathLike) -> Path:
    """Create ``path`` (and parents) if needed and return it."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """
    Write a DataFrame as CSV without the index.

    Args:
        frame (pd.DataFrame): Table to write
        path: Destination file

    Returns:
        Path: The written file

    Raises:
        OSError: If the file cannot be written. The error is logged first.
    """
    target = Path(path)
    try:
        frame.to_csv(target, index=False, lineterminator="\n")
    except OSError as e:
        logger.error(f"Error writing {target}: {e}")
        raise
    logger.debug(f"wrote {len(frame)} rows to {target}")
    return target


def write_matrix(array: np.ndarray, path: PathLike, fmt: str = MATRIX_FORMAT) -> Path:
    """One matrix row per line, space-separated decimals (gnuplot ``matrix`` layout)."""
    target = Path(path)
    try:
        np.savetxt(target, np.atleast_2d(array), fmt=fmt, delimiter=" ")
    except OSError as e:
        logger.error(f"Error writing {target}: {e}")
        raise
    return target


def load_matrix(path: PathLike) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)


def write_metadata(meta: Dict[str, Any], path: PathLike) -> Path:
    """Write metadata as sorted, indented JSON."""
    target = Path(path)
    try:
        with open(target, "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
    except OSError as e:
        logger.error(f"Error writing {target}: {e}")
        raise
    return target


def load_metadata(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_text(text: str, path: PathLike) -> Path:
    target = Path(path)
    try:
        with open(target, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as e:
        logger.error(f"Error writing {target}: {e}")
        raise
    return target
