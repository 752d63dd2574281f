"""Render experiment CSVs into publication-style figures.

Rendering is a pure function of the CSV content and the figure spec: no
timestamps, fixed layout, and the generating config hash from the CSV header
goes into a caption footer.  Inputs are validated against the expected column
schema before any output file is touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

GAMMA_XI_SCHEMA = ["trial", "n_elements", "config", "gamma", "xi"]
RCS_SCHEMA = [
    "scenario",
    "sweep_value",
    "n_x",
    "n_y",
    "spacing",
    "spacing_over_lambda",
    "n_particles",
    "sigma",
    "sigma_ref",
    "sigma_over_ref",
    "opt_status",
    "opt_iterations",
    "f_init",
    "f_final",
    "baseline_a",
    "baseline_b",
    "baseline_c",
]

FIGURES = {
    "gamma-cdf": GAMMA_XI_SCHEMA,
    "xi-cdf": GAMMA_XI_SCHEMA,
    "rcs-anomalous": RCS_SCHEMA,
    "rcs-specular": RCS_SCHEMA,
    "rcs-scaling-N": RCS_SCHEMA,
    "rcs-scaling-spacing": RCS_SCHEMA,
}

_SAVE_METADATA = {"Software": "figkit"}


class SchemaError(RuntimeError):
    """Input CSV does not match the expected column contract."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: type, input CSVs, output image, axis options."""

    figure: str
    inputs: tuple
    output: str
    db: bool = False

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise SchemaError(f"unknown figure {self.figure!r}; expected one of {sorted(FIGURES)}")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


@dataclass
class RenderResult:
    """Output path plus the exact series that were drawn (for verification)."""

    figure: str
    output: Path
    config_hashes: list
    series: dict = field(default_factory=dict)


def read_table(path, schema):
    """Parse one hash-stamped CSV, enforcing the column schema."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    config_hash = ""
    start = 0
    if lines and lines[0].startswith("# config_hash="):
        config_hash = lines[0].split("=", 1)[1]
        start = 1
    if start >= len(lines) or not lines[start]:
        raise SchemaError(f"{path}: empty CSV")
    header = lines[start].split(",")
    if header != schema:
        raise SchemaError(f"{path}: header {header} does not match the expected schema {schema}")
    rows = [line.split(",") for line in lines[start + 1 :] if line]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    if any(len(r) != len(schema) for r in rows):
        raise SchemaError(f"{path}: ragged rows")
    cols = {name: [r[i] for r in rows] for i, name in enumerate(schema)}
    return config_hash, cols


def load_inputs(spec):
    schema = FIGURES[spec.figure]
    hashes, merged = [], None
    for path in spec.inputs:
        config_hash, cols = read_table(path, schema)
        hashes.append(config_hash)
        if merged is None:
            merged = {k: list(v) for k, v in cols.items()}
        else:
            for k in schema:
                merged[k].extend(cols[k])
    return hashes, merged


def ecdf(samples):
    """Sorted-sample step function: x ascending, y = i/n."""
    x = np.sort(np.asarray(samples, dtype=float))
    y = np.arange(1, x.size + 1) / x.size
    return x, y


def _db(values):
    return 10.0 * np.log10(np.maximum(np.asarray(values, dtype=float), 1e-300))


def _footer(fig, hashes):
    uniq = sorted(set(h for h in hashes if h))
    if uniq:
        fig.text(0.01, 0.005, "config " + ", ".join(h[:12] for h in uniq), fontsize=6, color="0.4")


def _finish(fig, spec, result):
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, metadata=_SAVE_METADATA)
    plt.close(fig)
    result.output = out
    return result


def _render_metric_cdf(spec, hashes, cols, metric):
    n_vals = np.array([int(v) for v in cols["n_elements"]])
    kinds = np.array(cols["config"])
    values = np.array([float(v) for v in cols[metric]])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    result = RenderResult(figure=spec.figure, output=Path(spec.output), config_hashes=hashes)
    for kind in sorted(set(kinds)):
        for n in sorted(set(n_vals)):
            mask = (kinds == kind) & (n_vals == n)
            if not mask.any():
                continue
            x, y = ecdf(values[mask])
            if spec.db:
                x = _db(x)
            ax.step(x, y, where="post", label=f"{kind}, N={n}")
            result.series[f"{kind}/N={n}"] = (x, y)
    unit = f"{metric} [dB]" if spec.db else metric
    ax.set_xlabel(unit)
    ax.set_ylabel("empirical CDF")
    ax.set_ylim(0.0, 1.0)
    if not spec.db and metric == "gamma":
        hi = float(np.quantile(values, 0.99))
        ax.set_xlim(0.0, max(hi, 1.5))
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _footer(fig, hashes)
    return _finish(fig, spec, result)


def _render_rcs(spec, hashes, cols):
    x_key, x_label = {
        "rcs-anomalous": ("sweep_value", "separation angle [rad]"),
        "rcs-specular": ("sweep_value", "separation angle [rad]"),
        "rcs-scaling-N": ("n_particles", "number of particles"),
        "rcs-scaling-spacing": ("spacing_over_lambda", "spacing [wavelengths]"),
    }[spec.figure]
    x = np.array([float(v) for v in cols[x_key]])
    sigma = np.array([float(v) for v in cols["sigma"]])
    ref = np.array([float(v) for v in cols["sigma_ref"]])
    order = np.argsort(x)
    x, sigma, ref = x[order], sigma[order], ref[order]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    y_sigma, y_ref = (_db(sigma), _db(ref)) if spec.db else (sigma, ref)
    ax.plot(x, y_sigma, "o-", label="optimized")
    ax.plot(x, y_ref, "--", color="0.4", label="coherent reference")
    ax.set_xlabel(x_label)
    ax.set_ylabel("effective RCS [dBsm]" if spec.db else "effective RCS [m^2]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    _footer(fig, hashes)
    result = RenderResult(figure=spec.figure, output=Path(spec.output), config_hashes=hashes)
    result.series["sigma"] = (x, sigma)
    result.series["reference"] = (x, ref)
    return _finish(fig, spec, result)


def render(spec):
    """Render one figure; raises SchemaError before writing anything on bad input."""
    hashes, cols = load_inputs(spec)
    if spec.figure == "gamma-cdf":
        return _render_metric_cdf(spec, hashes, cols, "gamma")
    if spec.figure == "xi-cdf":
        return _render_metric_cdf(spec, hashes, cols, "xi")
    return _render_rcs(spec, hashes, cols)
