"""CSV / JSON writers with metadata headers, and trace ingestion.

Every output file starts with a metadata block: tool version, one
isolated timestamp line, and the fully resolved parameters.  Re-running
an identical scenario reproduces the file byte for byte except for that
single timestamp line.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import ConfigError


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_csv(path, columns: dict, meta: dict | None = None):
    """Write named columns with a commented metadata header."""
    cols = {name: np.asarray(values).ravel() for name, values in columns.items()}
    lengths = {arr.size for arr in cols.values()}
    if len(lengths) != 1:
        raise ValueError("all columns must have the same length")
    n = lengths.pop()

    lines = [f"# tool: eosim {__version__}", f"# timestamp: {_timestamp()}"]
    for key in sorted(meta or {}):
        lines.append(f"# {key}: {json.dumps((meta or {})[key], sort_keys=True)}")
    lines.append(",".join(cols))
    data = np.column_stack(list(cols.values()))
    for row in data:
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict, meta: dict | None = None):
    """Write a JSON report with a meta block (tool, timestamp, parameters)."""
    doc = {"meta": {"tool": f"eosim {__version__}", "timestamp": _timestamp(),
                    **(meta or {})}}
    doc.update(payload)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")


def read_trace_csv(path):
    """Read an (x, y[, weight]) trace CSV.

    Leading ``# key: value`` comment lines are collected as unit
    annotations; a non-numeric first row is treated as a column header.
    Returns (x, y, weight_or_None, annotations).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read trace: {exc}") from exc
    annotations = {}
    rows = []
    header_seen = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if ":" in body:
                key, _, value = body.partition(":")
                annotations[key.strip()] = value.strip()
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            if header_seen or rows:
                raise ConfigError(str(path), f"unparseable CSV row: {line!r}")
            header_seen = True
    if not rows:
        raise ConfigError(str(path), "no data rows found")
    data = np.asarray(rows)
    if data.shape[1] < 2:
        raise ConfigError(str(path), "need at least x and y columns")
    weight = data[:, 2] if data.shape[1] > 2 else None
    return data[:, 0], data[:, 1], weight, annotations
