"""Command-line entry point.

Subcommands load array/scenario inputs, run single computations, optimizations
and experiment sweeps, and emit CSV plus a JSON sidecar per run.  Data goes to
files (and result summaries to stdout); diagnostics go to stderr.  Exit codes:
0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import experiments, runio
from .arrayio import array_to_document, load_array_json
from .emcore import Wavenumber
from .errors import NumericalError, ValidationError
from .experiments import ScenarioSpec, default_sweep, run_estimation_trials, run_rcs_scenario
from .optimize import Objective, manifold_optimize
from .scattering import check_passivity, polarizability_from_unitary, scattering_matrix, unitarity_residual
from .single_element import NAMED_CASES, named_config
from .channel import utility

log = logging.getLogger("riscat")

_CASE_RE = re.compile(r"^B[1-6]$")

# Per-configuration offsets folded into trial seeds so different (N, kind)
# combinations draw independent streams from the same base seed.
_CFG_SEED_OFFSET = {"parallel": 0x9E3779B97F4A7C15, "orthogonal": 0xC2B2AE3D27D4EB4F}
_N_SEED_MIX = 0xD1342543DE82EF95
_U64 = 2**64


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the validation code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _vec3(text):
    parts = [p for p in text.replace(";", ",").split(",") if p != ""]
    if len(parts) != 3:
        raise ValidationError(f"expected 3 comma-separated components, got {text!r}")
    return np.array([float(p) for p in parts])


def _pol3(text):
    parts = [p for p in text.replace(";", ",").split(",") if p != ""]
    if len(parts) == 3:
        return np.array([float(p) for p in parts], dtype=complex)
    if len(parts) == 6:
        vals = [float(p) for p in parts]
        return np.array([complex(vals[2 * i], vals[2 * i + 1]) for i in range(3)])
    raise ValidationError(f"polarization needs 3 (real) or 6 (re,im interleaved) components, got {text!r}")


def _seed(value):
    seed = int(value)
    if not (0 <= seed < _U64):
        raise ValidationError(f"seed must fit in an unsigned 64-bit integer, got {value}")
    return seed


def combo_seed(base, n_elements, cfg_kind):
    return (base ^ (n_elements * _N_SEED_MIX) ^ _CFG_SEED_OFFSET[cfg_kind]) % _U64


def build_parser():
    parser = _Parser(prog="riscat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=_seed, default=0, help="base seed (unsigned 64-bit)")

    p = sub.add_parser("scatter", help="scattering matrix of an array between two directions")
    add_common(p)
    p.add_argument("--config", required=True, help="array JSON document")
    p.add_argument("--r-in", required=True, type=_vec3, help="ingoing propagation direction x,y,z")
    p.add_argument("--r-out", required=True, type=_vec3, help="outgoing propagation direction x,y,z")

    p = sub.add_parser("utility", help="effective scattering and cross sections for a wave pair")
    add_common(p)
    p.add_argument("--config", required=True)
    p.add_argument("--r-in", required=True, type=_vec3)
    p.add_argument("--r-out", required=True, type=_vec3)
    p.add_argument("--p-in", type=_pol3, default="1,0,0")
    p.add_argument("--p-out", type=_pol3, default="1,0,0")

    p = sub.add_parser("optimize", help="maximize effective RCS over the array configuration")
    add_common(p)
    p.add_argument("--config", required=True)
    p.add_argument("--r-in", required=True, type=_vec3)
    p.add_argument("--r-out", required=True, type=_vec3)
    p.add_argument("--p-in", type=_pol3, default="1,0,0")
    p.add_argument("--p-out", type=_pol3, default="1,0,0")
    p.add_argument("--mode", choices=("rcs", "utility"), default="rcs")
    p.add_argument("--diagonal-only", action="store_true")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--grad-tol", type=float, default=None)
    p.add_argument("--trace", action="store_true", help="dump the convergence trace CSV")

    p = sub.add_parser("gamma-xi", help="pilot-estimation power metrics over Monte-Carlo trials")
    add_common(p)
    p.add_argument("--N", dest="n_elements", type=int, action="append", help="element count (repeatable)")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--cfg", choices=("parallel", "orthogonal", "both"), default="both")
    p.add_argument("--grid-points", type=int, default=experiments.DEFAULT_GRID)

    p = sub.add_parser("rcs-scenario", help="one of the four lattice RCS sweeps")
    add_common(p)
    p.add_argument("--name", required=True, choices=experiments.SCENARIOS)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="wavelength in meters")
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--spacing", type=float, default=0.5, help="lattice spacing in wavelengths")
    p.add_argument("--points", type=int, default=None, help="sweep resolution")
    p.add_argument("--diagonal-only", action="store_true")
    p.add_argument("--max-iters", type=int, default=150)
    p.add_argument("--grad-tol", type=float, default=None)

    p = sub.add_parser("validate", help="passivity and reciprocity report for configurations")
    add_common(p)
    p.add_argument("--config", help="array JSON document, or a named case B1..B6")
    p.add_argument("--case", choices=NAMED_CASES, help="named configuration case")
    p.add_argument("--rho", type=float, default=0.0, help="phase shift of the named case")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)

    return parser


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _complex_pairs_3x3(m):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def cmd_scatter(args):
    array = load_array_json(args.config)
    resp = scattering_matrix(array, args.r_out, args.r_in)
    cfg = {
        "command": "scatter",
        "config": str(args.config),
        "r_in": args.r_in.tolist(),
        "r_out": args.r_out.tolist(),
    }
    payload = {
        "config_hash": runio.canonical_hash(cfg),
        "tool_version": runio.TOOL_VERSION,
        "run": cfg,
        "s": _complex_pairs_3x3(resp.s),
    }
    path = runio.write_sidecar(_out_dir(args) / "scatter.json", payload)
    print(f"wrote {path}")
    return 0


def cmd_utility(args):
    array = load_array_json(args.config)
    report = utility(array, args.r_in, args.p_in, args.r_out, args.p_out)
    cfg = {
        "command": "utility",
        "config": str(args.config),
        "r_in": args.r_in.tolist(),
        "r_out": args.r_out.tolist(),
        "p_in": [[v.real, v.imag] for v in args.p_in],
        "p_out": [[v.real, v.imag] for v in args.p_out],
    }
    payload = {
        "config_hash": runio.canonical_hash(cfg),
        "tool_version": runio.TOOL_VERSION,
        "run": cfg,
        "a_c": [report.a_c.real, report.a_c.imag],
        "a": report.a,
        "sigma_eff": report.sigma_eff,
        "sigma_bar": report.sigma_bar,
    }
    path = runio.write_sidecar(_out_dir(args) / "utility.json", payload)
    print(f"A={report.a!r} sigma_eff={report.sigma_eff!r}")
    print(f"wrote {path}")
    return 0


def cmd_optimize(args):
    array = load_array_json(args.config)
    objective = Objective(
        positions=array.positions,
        k=array.k,
        r_in=args.r_in,
        p_in=args.p_in,
        r_out=args.r_out,
        p_out=args.p_out,
        mode=args.mode,
    )
    # warm-start from the document's configurations when they carry information;
    # all-dark documents and diagonal-restricted runs use the closed-form init
    init = None
    if not args.diagonal_only and _has_nondark_config(array):
        init = array.v_blocks
    state = manifold_optimize(
        objective,
        init=init,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        diagonal_only=args.diagonal_only,
    )
    out = _out_dir(args)
    cfg = {
        "command": "optimize",
        "config": str(args.config),
        "mode": args.mode,
        "r_in": args.r_in.tolist(),
        "r_out": args.r_out.tolist(),
        "p_in": [[v.real, v.imag] for v in args.p_in],
        "p_out": [[v.real, v.imag] for v in args.p_out],
        "diagonal_only": args.diagonal_only,
        "max_iters": args.max_iters,
        "grad_tol": args.grad_tol,
    }
    chash = runio.canonical_hash(cfg)
    solution = state.to_array(objective)
    solution_doc = {"config_hash": chash, **array_to_document(solution)}
    runio.write_sidecar(out / "optimized_array.json", solution_doc)
    payload = {
        "config_hash": chash,
        "tool_version": runio.TOOL_VERSION,
        "run": cfg,
        "objective": state.objective,
        "sigma": 4.0 * np.pi * state.objective if args.mode == "rcs" else None,
        "status": state.status,
        "iterations": state.iterations,
        "f_init": state.objective_trace[0],
    }
    runio.write_sidecar(out / "optimize.json", payload)
    if args.trace:
        rows = [
            {"iteration": i, "objective": f, "grad_norm": g}
            for i, (f, g) in enumerate(zip(state.objective_trace, state.grad_norm_trace))
        ]
        runio.write_csv(out / "optimize_trace.csv", ["iteration", "objective", "grad_norm"], rows, chash)
    print(f"status={state.status} objective={state.objective!r}")
    return 0


def _has_nondark_config(array):
    eye = -np.eye(6)
    return any(not np.allclose(c.u, eye) for c in array.configs)


def cmd_gamma_xi(args):
    n_values = args.n_elements or [128]
    kinds = ("parallel", "orthogonal") if args.cfg == "both" else (args.cfg,)
    cfg = {
        "command": "gamma-xi",
        "n_values": list(n_values),
        "kinds": list(kinds),
        "trials": args.trials,
        "seed": args.seed,
        "grid_points": args.grid_points,
        "m_paths": experiments.DEFAULT_PATHS,
        "xi_denominator": "grid-search over the common alignment angle",
        "xi_grid_bias_db_bound": experiments.GRID_BIAS_DB,
    }
    chash = runio.canonical_hash(cfg)
    rows = []
    summaries = []
    for n in n_values:
        for kind in kinds:
            gammas, xis = run_estimation_trials(
                n, kind, args.trials, combo_seed(args.seed, n, kind), grid_points=args.grid_points
            )
            for i, (g, x) in enumerate(zip(gammas, xis)):
                rows.append({"trial": i, "n_elements": n, "config": kind, "gamma": float(g), "xi": float(x)})
            summaries.append(
                {
                    "n_elements": n,
                    "config": kind,
                    "mean_gamma": float(np.mean(gammas)),
                    "var_gamma": float(np.var(gammas)),
                    "median_gamma": float(np.median(gammas)),
                    "median_xi": float(np.median(xis)),
                    "median_xi_db": float(10.0 * np.log10(np.median(xis))),
                }
            )
    out = _out_dir(args)
    runio.write_csv(out / "gamma_xi.csv", ["trial", "n_elements", "config", "gamma", "xi"], rows, chash)
    payload = {
        "config_hash": chash,
        "tool_version": runio.TOOL_VERSION,
        "run": cfg,
        "summaries": summaries,
    }
    runio.write_sidecar(out / "gamma_xi.json", payload)
    for s in summaries:
        print(
            f"N={s['n_elements']} cfg={s['config']} mean_gamma={s['mean_gamma']:.4f} "
            f"median_xi_db={s['median_xi_db']:.3f}"
        )
    return 0


def cmd_rcs_scenario(args):
    k = Wavenumber.from_wavelength(args.lam)
    sweep = None
    if args.points is not None:
        sweep = default_sweep(args.name, args.lam, points=args.points)
    spec = ScenarioSpec(
        name=args.name, k=k, n_x=args.nx, n_y=args.ny, spacing=args.spacing * args.lam, sweep=sweep
    )
    cfg = {
        "command": "rcs-scenario",
        "name": args.name,
        "lambda": args.lam,
        "n_x": args.nx,
        "n_y": args.ny,
        "spacing_over_lambda": args.spacing,
        "sweep": [float(v) for v in spec.sweep],
        "seed": args.seed,
        "diagonal_only": args.diagonal_only,
        "max_iters": args.max_iters,
        "grad_tol": args.grad_tol,
    }
    chash = runio.canonical_hash(cfg)

    def progress(record):
        print(f"{args.name}: sweep={record['sweep_value']:.4f} sigma={record['sigma']:.4f}", file=sys.stderr)

    records = run_rcs_scenario(
        spec,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        diagonal_only=args.diagonal_only,
        progress=progress,
    )
    out = _out_dir(args)
    fields = list(records[0].keys())
    runio.write_csv(out / f"rcs_{args.name}.csv", fields, records, chash)
    payload = {
        "config_hash": chash,
        "tool_version": runio.TOOL_VERSION,
        "run": cfg,
        "n_points": len(records),
        "statuses": sorted({r["opt_status"] for r in records}),
    }
    runio.write_sidecar(out / f"rcs_{args.name}.json", payload)
    print(f"wrote {out / f'rcs_{args.name}.csv'}")
    return 0


def cmd_validate(args):
    k = Wavenumber.from_wavelength(args.lam)
    configs = []
    case = args.case
    if case is None and args.config and _CASE_RE.match(args.config) and not Path(args.config).exists():
        case = args.config
    if case is not None:
        configs = [(case, named_config(case, rho=args.rho))]
    elif args.config:
        array = load_array_json(args.config)
        k = array.k
        configs = [(f"particle {i}", c) for i, c in enumerate(array.configs)]
    else:
        raise ValidationError("validate needs --case or --config")
    for name, cfg in configs:
        pol = polarizability_from_unitary(cfg, k)
        residual = check_passivity(pol, k)
        print(
            f"{name}: unitarity_residual={unitarity_residual(cfg.u):.3e} "
            f"passivity_residual={residual:.3e} reciprocity={str(cfg.reciprocal).lower()}"
        )
    return 0


_COMMANDS = {
    "scatter": cmd_scatter,
    "utility": cmd_utility,
    "optimize": cmd_optimize,
    "gamma-xi": cmd_gamma_xi,
    "rcs-scenario": cmd_rcs_scenario,
    "validate": cmd_validate,
}


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"riscat: validation error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"riscat: missing file: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"riscat: numerical failure: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
