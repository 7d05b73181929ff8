"""Command-line interface.

Subcommands:

    converge    convergence study over a list of element counts
    simulate    single run; writes a solution snapshot and diagnostics
    stability   JSON stability report for the assembled linear operator
    exact-eval  sample an exact soliton solution to CSV

Exit codes: 0 success, 2 configuration error, 3 numerical failure (Newton
divergence or blow-up), 4 I/O error.  A config file of `key = value` lines
(via --config) overrides command-line flags; the BOLDG_OUTPUT_DIR
environment variable overrides the output directory.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from .harness import (
    OUTPUT_DIR_ENV,
    ConfigError,
    RunConfig,
    exact_solution,
    make_config,
    output_dir,
    run_single,
    run_stability_experiment,
    run_study_with_outputs,
    emit_outputs,
    snapshot_csv,
)
from .operators import BlowUpError
from .timestepping import NewtonDivergedError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_common(p):
    p.add_argument("--experiment", default=None,
                   help="preset: example1_cn, example1_rk, example2_rk, custom")
    p.add_argument("--domain", nargs=2, type=float, metavar=("A", "B"), default=None)
    p.add_argument("--degree", "-k", type=int, default=None)
    p.add_argument("--solution", choices=["one_soliton", "two_soliton", "none"], default=None)
    p.add_argument("--solution-params", default=None,
                   help="comma list, e.g. c=0.25,L=15 or c1=0.3,c2=0.6,d1=-30,d2=-55")
    p.add_argument("--flux", choices=["burgers", "linear", "none"], default=None)
    p.add_argument("--boundary", choices=["zero", "periodic"], default=None)
    p.add_argument("--kernel", choices=["line", "periodic"], default=None)
    p.add_argument("--orientation", choices=["p_plus_u_minus", "p_minus_u_plus"], default=None)
    p.add_argument("--delta-mode", choices=["local_max", "global_max"], default=None)
    p.add_argument("--outer-n", type=int, default=None, help="Hilbert outer quadrature points")
    p.add_argument("--inner-n", type=int, default=None, help="Hilbert inner quadrature points")
    p.add_argument("--no-skew", action="store_true", help="skip antisymmetrization of K")
    p.add_argument("--scheme", choices=["crank_nicolson", "rk4", "lserk54"], default=None)
    p.add_argument("--tau-rule", choices=["proportional_h", "proportional_h2", "fixed"],
                   default=None)
    p.add_argument("--tau-coefficient", type=float, default=None)
    p.add_argument("--cfl-target", type=float, default=None)
    p.add_argument("--t-final", "-T", type=float, default=None)
    p.add_argument("--newton-tol", type=float, default=None)
    p.add_argument("--newton-max-iter", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", "-o", default=None)
    p.add_argument("--snapshots", action="store_true")
    p.add_argument("--config", default=None, help="key = value file overriding flags")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="boldg",
        description="Local discontinuous Galerkin solver for the generalized "
                    "Benjamin-Ono equation u_t + f(u)_x - H u_xx = 0.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="convergence study over several meshes")
    conv.add_argument("--N", dest="N_list", default=None,
                      help="comma-separated element counts, e.g. 40,80,160")
    _add_common(conv)

    sim = sub.add_parser("simulate", help="single simulation with snapshot output")
    sim.add_argument("--N", dest="N_single", type=int, default=None, help="element count")
    _add_common(sim)

    stab = sub.add_parser("stability", help="stability report for the linear operator")
    stab.add_argument("--N", dest="N_list", default="64")
    stab.add_argument("--trials", type=int, default=None)
    stab.add_argument("--scan-steps", type=int, default=None)
    _add_common(stab)

    ev = sub.add_parser("exact-eval", help="sample an exact solution to CSV")
    ev.add_argument("--solution", choices=["one_soliton", "two_soliton"],
                    default="one_soliton")
    ev.add_argument("--solution-params", default=None)
    ev.add_argument("--domain", nargs=2, type=float, metavar=("A", "B"),
                    default=[-15.0, 15.0])
    ev.add_argument("--t", type=float, default=0.0)
    ev.add_argument("--samples", type=int, default=1001)
    ev.add_argument("--output", default=None, help="output CSV path (default: stdout)")
    return parser


def _parse_params(text):
    params = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not _:
            raise ConfigError(f"bad parameter {item!r}; expected key=value")
        params[key.strip()] = float(value)
    return params


def _parse_config_file(path):
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                overrides[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return overrides


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name, raw):
    if name == "N_list":
        return tuple(int(v) for v in str(raw).replace(",", " ").split())
    if name == "solution_params":
        return _parse_params(raw) if isinstance(raw, str) else raw
    if name in ("hilbert_skew", "snapshots"):
        return str(raw).strip().lower() in ("1", "true", "yes", "on")
    if name in ("degree", "hilbert_outer_n", "hilbert_inner_n", "seed",
                "newton_max_iter", "trials", "scan_steps"):
        return int(raw)
    if name == "tau_coefficient":
        return None if str(raw).lower() in ("none", "auto", "") else float(raw)
    if name in ("a", "b", "t_final", "newton_tol", "cfl_target"):
        return float(raw)
    return raw


def _gather_overrides(args):
    mapping = {
        "degree": args.degree,
        "solution": args.solution,
        "flux": args.flux,
        "boundary": args.boundary,
        "orientation": args.orientation,
        "delta_mode": args.delta_mode,
        "hilbert_outer_n": args.outer_n,
        "hilbert_inner_n": args.inner_n,
        "scheme": args.scheme,
        "tau_rule": args.tau_rule,
        "tau_coefficient": args.tau_coefficient,
        "cfl_target": args.cfl_target,
        "t_final": args.t_final,
        "newton_tol": args.newton_tol,
        "newton_max_iter": args.newton_max_iter,
        "seed": args.seed,
        "output_dir": args.output_dir,
    }
    overrides = {k: v for k, v in mapping.items() if v is not None}
    if args.domain is not None:
        overrides["a"], overrides["b"] = args.domain
    if args.kernel is not None:
        overrides["kernel"] = args.kernel
    if args.no_skew:
        overrides["hilbert_skew"] = False
    if args.snapshots:
        overrides["snapshots"] = True
    if args.solution_params is not None:
        overrides["solution_params"] = _parse_params(args.solution_params)
    n_list = getattr(args, "N_list", None)
    if n_list is not None:
        overrides["N_list"] = n_list
    if getattr(args, "N_single", None) is not None:
        overrides["N_list"] = str(args.N_single)
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "scan_steps", None) is not None:
        overrides["scan_steps"] = args.scan_steps
    if args.config:
        overrides.update(_parse_config_file(args.config))
    return {k: _coerce(k, v) for k, v in overrides.items()}


def _make_config(args, default_experiment="custom"):
    overrides = _gather_overrides(args)
    experiment = overrides.pop("experiment", None) or args.experiment or default_experiment
    try:
        return make_config(experiment, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_converge(args):
    cfg = _make_config(args)
    rows, paths = run_study_with_outputs(
        cfg, progress=lambda row: print(_row_line(row), flush=True)
    )
    print("wrote:", *paths, sep="\n  ")
    return EXIT_OK


def _row_line(row):
    if not row.ok:
        return f"N={row.N}: FAILED ({row.message})"
    rate = f"{row.rate:.3f}" if row.rate is not None else "-"
    return (f"N={row.N}: error={row.error:.6e} rate={rate} "
            f"C1={row.c1:.6f} C2={row.c2:.6f} steps={row.n_steps}")


def cmd_simulate(args):
    cfg = _make_config(args)
    if len(cfg.N_list) != 1:
        raise ConfigError("simulate runs a single N; pass --N")
    N = cfg.N_list[0]
    start = time.perf_counter()
    result, ops, u0 = run_single(cfg, N)
    wall = time.perf_counter() - start
    exact, _ = exact_solution(cfg)
    from .solutions import conserved_quantities, l2_error

    row_error = l2_error(result.u, exact, cfg.t_final)
    outdir = output_dir(cfg)
    os.makedirs(outdir, exist_ok=True)
    snap_path = os.path.join(outdir, f"snapshot_N{N}.csv")
    with open(snap_path, "w", encoding="utf-8") as fh:
        fh.write(snapshot_csv(result.u))
    diag_path = os.path.join(outdir, "diagnostics.csv")
    with open(diag_path, "w", encoding="utf-8") as fh:
        fh.write("t,norm,C1,C2\n")
        for t, nrm, c1, c2 in zip(result.times, result.norms, result.c1, result.c2):
            fh.write(f"{float(t)!r},{float(nrm)!r},{float(c1)!r},{float(c2)!r}\n")
    meta = {
        "config": dataclasses.asdict(cfg),
        "N": int(N),
        "tau": result.tau,
        "n_steps": result.n_steps,
        "l2_error": row_error,
        "wall_time_s": wall,
    }
    meta_path = os.path.join(outdir, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")
    print(f"N={N}: error={row_error:.6e} tau={result.tau:.3e} steps={result.n_steps}")
    print("wrote:", snap_path, diag_path, meta_path, sep="\n  ")
    return EXIT_OK


def cmd_stability(args):
    cfg = _make_config(args, default_experiment="stability_report")
    if cfg.experiment != "stability_report":
        cfg = dataclasses.replace(cfg, experiment="stability_report")
    reports = run_stability_experiment(cfg)
    outdir = output_dir(cfg)
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "stability_report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"config": dataclasses.asdict(cfg), "reports": reports}, fh,
                  indent=2, default=float)
        fh.write("\n")
    for rep in reports:
        print(
            f"N={rep['n_cells']} k={rep['degree']}: ||Lh||={rep['operator_norm']:.4e} "
            f"max_sym_eig={rep['max_symmetric_eigenvalue']:.2e} "
            f"2-step={rep['worst_two_step_ratio']:.12f} "
            f"3-step={rep['worst_three_step_ratio']:.12f}"
        )
    print("wrote:", path, sep="\n  ")
    return EXIT_OK


def cmd_exact_eval(args):
    from .solutions import OneSolitonParams, TwoSolitonParams, one_soliton, two_soliton

    if args.solution == "one_soliton":
        params = _parse_params(args.solution_params) if args.solution_params else {
            "c": 0.25, "L": 15.0}
        p = OneSolitonParams(**params)
        fn = lambda x: one_soliton(x, args.t, p)  # noqa: E731
    else:
        params = _parse_params(args.solution_params) if args.solution_params else {
            "c1": 0.3, "c2": 0.6, "d1": -30.0, "d2": -55.0}
        p = TwoSolitonParams(**params)
        fn = lambda x: two_soliton(x, args.t, p)  # noqa: E731
    a, b = args.domain
    if not a < b or args.samples < 2:
        raise ConfigError("need a < b and at least two samples")
    xs = np.linspace(a, b, args.samples)
    vals = fn(xs)
    lines = ["x,u"] + [f"{float(x)!r},{float(v)!r}" for x, v in zip(xs, vals)]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print("wrote:", args.output)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "converge": cmd_converge,
        "simulate": cmd_simulate,
        "stability": cmd_stability,
        "exact-eval": cmd_exact_eval,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, NewtonDivergedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
