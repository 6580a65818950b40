"""Plain-text writers for run artifacts (CSV tables with a metadata header, JSON records)."""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np

from . import __version__


def metadata(spec_dict=None, **extra):
    """Enough provenance to re-run: parameters, seed and library versions (no timestamps)."""
    import scipy

    meta = {
        "package": "kinwealth",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
    if spec_dict is not None:
        meta["spec"] = spec_dict
    meta.update(extra)
    return meta


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".17g")


def write_csv(path, columns, rows, meta=None):
    """Write ``rows`` under a ``columns`` header; ``meta`` goes into ``#`` comment lines."""
    path = Path(path)
    lines = []
    if meta is not None:
        for line in json.dumps(meta, sort_keys=True, indent=1).splitlines():
            lines.append("# " + line)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: returns ``(columns, array)``."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return columns, data.reshape(len(lines) - 1, len(columns))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, record):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(record), sort_keys=True, indent=2) + "\n")
    return path


def write_population(path, wealths):
    """One wealth per line."""
    Path(path).write_text("".join(format(float(w), ".17g") + "\n" for w in wealths))
