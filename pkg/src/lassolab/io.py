"""Plain-text matrix/vector files and JSON helpers.

Matrices are CSV, row-major, one row per line. Vectors hold one real per
line.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)


def write_matrix(path, M) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)), delimiter=",", fmt="%.17g")


def read_vector(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=1, dtype=float)


def write_vector(path, v) -> None:
    np.savetxt(path, np.asarray(v, dtype=float).reshape(-1), fmt="%.17g")


def jsonable(obj):
    """Convert numpy values and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_json(obj, path=None) -> str:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
