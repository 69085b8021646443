"""Self-describing CSV output.

Each file starts with ``#`` comment lines holding the tool version, the
subcommand, the seed, column descriptions, model notes and the fully
resolved configuration (one sorted JSON line per top-level table),
then a header row and data rows.
Floats are written with 9 significant digits. Nothing time- or
host-dependent is written, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["format_value", "write_csv", "read_csv"]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.9g" % v
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], *, command: str, seed,
              config: dict, descriptions: Sequence[str] = (), notes: Sequence[str] = ()) -> Path:
    """Write rows with a comment header; returns the path."""
    from . import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# anisodd {__version__} {command}", f"# seed: {seed}"]
    lines += [f"# column {d}" for d in descriptions]
    lines += [f"# note: {n}" for n in notes]
    cfg = _jsonable(config)
    lines += [f"# config.{k}: {json.dumps(cfg[k], sort_keys=True)}" for k in sorted(cfg)]
    lines.append(",".join(columns))
    for r in rows:
        if len(r) != len(columns):
            raise ValueError(f"row has {len(r)} values for {len(columns)} columns")
        lines.append(",".join(format_value(v) for v in r))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """``(columns, rows)`` of a file written by :func:`write_csv` (strings)."""
    body = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    cols = body[0].split(",")
    return cols, [ln.split(",") for ln in body[1:]]
