"""Deterministic run outputs: CSV with embedded config hash plus a JSON sidecar.

Floats are written with repr (shortest round-trip form), so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

TOOL_VERSION = "0.1.0"


def canonical_hash(obj):
    """SHA-256 over the canonical JSON encoding of a run configuration."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int,)):
        return str(value)
    return str(value)


def write_csv(path, fieldnames, rows, config_hash):
    """Write rows (dicts) with a leading config-hash comment line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={config_hash}", ",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(format_cell(row[name]) for name in fieldnames))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path):
    """Read a hash-stamped CSV back into (config_hash, list of dicts of strings)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    config_hash = None
    start = 0
    if text and text[0].startswith("# config_hash="):
        config_hash = text[0].split("=", 1)[1]
        start = 1
    if start >= len(text):
        return config_hash, [], []
    fieldnames = text[start].split(",")
    rows = []
    for line in text[start + 1 :]:
        if not line:
            continue
        rows.append(dict(zip(fieldnames, line.split(","))))
    return config_hash, fieldnames, rows


def write_sidecar(path, payload):
    """JSON sidecar with sorted keys; carries the full run configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
