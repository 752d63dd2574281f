"""JSON interchange for array geometry and particle configurations.

Document shape:

    {
      "lambda": 1.0,
      "eta": 1.0,                      (optional, defaults to 1)
      "positions": [[x, y, z], ...],
      "configs": [
        {"type": "unitary", "matrix": [[[re, im], ...], ...]},
        {"type": "named", "case": "B1", "rho": 0.0, "phi": 0.0}
      ]
    }

A single config entry is broadcast to every position.
"""

from __future__ import annotations

import json

import numpy as np

from .emcore import Wavenumber
from .errors import ValidationError
from .scattering import ParticleConfig, assemble_array
from .single_element import named_config


def _matrix_from_pairs(data):
    arr = np.asarray(data, dtype=float)
    if arr.shape != (6, 6, 2):
        raise ValidationError(f"unitary matrix must be 6x6 [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_pairs(matrix):
    m = np.asarray(matrix, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def config_from_entry(entry):
    if not isinstance(entry, dict) or "type" not in entry:
        raise ValidationError(f"config entry must be an object with a 'type' key, got {entry!r}")
    kind = entry["type"]
    if kind == "unitary":
        if "matrix" not in entry:
            raise ValidationError("unitary config entry needs a 'matrix' key")
        return ParticleConfig(u=_matrix_from_pairs(entry["matrix"]))
    if kind == "named":
        if "case" not in entry:
            raise ValidationError("named config entry needs a 'case' key")
        return named_config(entry["case"], rho=float(entry.get("rho", 0.0)), phi=entry.get("phi"))
    raise ValidationError(f"unknown config type {kind!r}; expected 'unitary' or 'named'")


def load_array_document(doc):
    """Assemble a RisArray from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError("array document must be a JSON object")
    try:
        lam = float(doc["lambda"])
    except KeyError as exc:
        raise ValidationError("array document needs a 'lambda' key") from exc
    k = Wavenumber.from_wavelength(lam, eta=float(doc.get("eta", 1.0)))
    positions = doc.get("positions")
    if positions is None:
        raise ValidationError("array document needs a 'positions' key")
    entries = doc.get("configs")
    if entries is None:
        raise ValidationError("array document needs a 'configs' key")
    if isinstance(entries, dict):
        entries = [entries]
    configs = [config_from_entry(e) for e in entries]
    if len(configs) == 1 and len(positions) > 1:
        configs = configs * len(positions)
    return assemble_array(positions, configs, k)


def load_array_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return load_array_document(doc)


def array_to_document(array):
    """Serializable document for an assembled array (configs as explicit matrices)."""
    return {
        "lambda": array.k.wavelength,
        "eta": array.k.eta,
        "positions": array.positions.tolist(),
        "configs": [{"type": "unitary", "matrix": matrix_to_pairs(c.u)} for c in array.configs],
    }
