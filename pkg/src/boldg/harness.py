"""Experiment orchestration: convergence studies and tabular/JSON output.

A RunConfig fully determines a study; rerunning the same config produces
byte-identical CSV tables.  Floating-point output uses Python's shortest
round-trip repr so tables are diffable across platforms.
"""

import dataclasses
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .hilbert import assemble_hilbert
from .mesh import DGSpace, build_mesh, orthonormal_legendre
from .operators import BURGERS, LINEAR, BlowUpError, FluxConfig, assemble_operators
from .projection import radau_project
from .solutions import (
    OneSolitonParams,
    TwoSolitonParams,
    conserved_quantities,
    l2_error,
    one_soliton,
    two_soliton,
)
from .stability import stability_report
from .timestepping import NewtonDivergedError, TimeConfig, run_simulation
from .quadrature import gauss_legendre

OUTPUT_DIR_ENV = "BOLDG_OUTPUT_DIR"

EXPERIMENTS = ("example1_cn", "example1_rk", "example2_rk", "stability_report", "custom")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    experiment: str = "custom"
    a: float = -15.0
    b: float = 15.0
    N_list: tuple = (160,)
    degree: int = 1
    solution: str = "one_soliton"          # one_soliton | two_soliton | none
    solution_params: dict = field(default_factory=lambda: {"c": 0.25, "L": 15.0})
    flux: str = "burgers"                  # burgers | linear | none
    orientation: str = "p_plus_u_minus"
    delta_mode: str = "local_max"
    boundary: str = "zero"                 # zero | periodic
    kernel: str = ""                       # "" -> line for zero closure, periodic otherwise
    hilbert_outer_n: int = 7
    hilbert_inner_n: int = 8
    hilbert_skew: bool = True
    scheme: str = "lserk54"
    tau_rule: str = "proportional_h2"
    tau_coefficient: float | None = None
    cfl_target: float = 1.5
    t_final: float = 10.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    output_dir: str = "out"
    seed: int = 0
    snapshots: bool = False
    trials: int = 100                      # stability-report experiments only
    scan_steps: int = 0

    def resolved_kernel(self):
        if self.kernel:
            return self.kernel
        return "periodic" if self.boundary == "periodic" else "line"

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.N_list:
            raise ConfigError("N_list must not be empty")
        if any(n2 <= n1 for n1, n2 in zip(self.N_list, self.N_list[1:])):
            raise ConfigError(f"N_list must be strictly increasing, got {self.N_list}")
        if any(int(n) < 1 for n in self.N_list):
            raise ConfigError("element counts must be positive")
        if not self.a < self.b:
            raise ConfigError(f"need a < b, got [{self.a}, {self.b}]")
        if self.flux not in ("burgers", "linear", "none"):
            raise ConfigError(f"unknown flux {self.flux!r}")
        if self.solution not in ("one_soliton", "two_soliton", "none"):
            raise ConfigError(f"unknown solution {self.solution!r}")
        if self.solution == "none" and self.experiment != "stability_report":
            raise ConfigError("convergence experiments need an exact solution")
        return self


def example1_config(scheme="crank_nicolson", **overrides):
    base = dict(
        experiment="example1_cn" if scheme == "crank_nicolson" else "example1_rk",
        a=-15.0,
        b=15.0,
        N_list=(160, 320, 640) if scheme == "crank_nicolson" else (40, 80, 160),
        degree=1 if scheme == "crank_nicolson" else 3,
        solution="one_soliton",
        solution_params={"c": 0.25, "L": 15.0},
        flux="burgers",
        boundary="periodic",
        scheme=scheme,
        tau_rule="proportional_h" if scheme == "crank_nicolson" else "proportional_h2",
        tau_coefficient=0.5 if scheme == "crank_nicolson" else None,
        t_final=20.0 if scheme == "crank_nicolson" else 10.0,
    )
    base.update(overrides)
    return RunConfig(**base).validate()


def example2_config(**overrides):
    base = dict(
        experiment="example2_rk",
        a=-150.0,
        b=150.0,
        N_list=(640, 1280),
        degree=2,
        solution="two_soliton",
        solution_params={"c1": 0.3, "c2": 0.6, "d1": -30.0, "d2": -55.0},
        flux="burgers",
        boundary="zero",
        scheme="lserk54",
        tau_rule="proportional_h2",
        tau_coefficient=None,
        t_final=20.0,
    )
    base.update(overrides)
    return RunConfig(**base).validate()


def make_config(experiment, **overrides):
    if experiment == "example1_cn":
        return example1_config("crank_nicolson", **overrides)
    if experiment == "example1_rk":
        return example1_config("lserk54", **overrides)
    if experiment == "example2_rk":
        return example2_config(**overrides)
    if experiment in ("custom", "stability_report"):
        cfg = RunConfig(experiment=experiment, **overrides)
        return cfg.validate()
    raise ConfigError(f"unknown experiment {experiment!r}")


def exact_solution(cfg):
    """(callable(x, t), params) for the configured reference solution."""
    if cfg.solution == "one_soliton":
        p = OneSolitonParams(**cfg.solution_params)
        return (lambda x, t: one_soliton(x, t, p)), p
    if cfg.solution == "two_soliton":
        p = TwoSolitonParams(**cfg.solution_params)
        return (lambda x, t: two_soliton(x, t, p)), p
    raise ConfigError(f"no exact solution named {cfg.solution!r}")


def _flux_object(cfg):
    if cfg.flux == "burgers":
        return BURGERS
    if cfg.flux == "linear":
        return LINEAR
    return None


def build_problem(cfg, N):
    """Space and operators for one resolution of a study."""
    mesh = build_mesh(cfg.a, cfg.b, int(N))
    space = DGSpace(mesh, cfg.degree)
    hil = assemble_hilbert(
        space,
        gauss_legendre(cfg.hilbert_outer_n),
        gauss_legendre(cfg.hilbert_inner_n),
        skew=cfg.hilbert_skew,
        kernel=cfg.resolved_kernel(),
    )
    flux_cfg = FluxConfig(
        orientation=cfg.orientation,
        nonlinear="none" if cfg.flux == "none" else "lax_friedrichs",
        delta_mode=cfg.delta_mode,
        boundary=cfg.boundary,
    )
    return assemble_operators(space, flux_cfg, hil)


def time_config(cfg):
    return TimeConfig(
        t_final=cfg.t_final,
        scheme=cfg.scheme,
        tau_rule=cfg.tau_rule,
        tau_coefficient=cfg.tau_coefficient,
        cfl_target=cfg.cfl_target,
        newton_tol=cfg.newton_tol,
        newton_max_iter=cfg.newton_max_iter,
    )


@dataclass
class StudyRow:
    N: int
    error: float = float("nan")
    rate: float | None = None
    c1: float = float("nan")
    c2: float = float("nan")
    tau: float = float("nan")
    n_steps: int = 0
    ok: bool = True
    message: str = ""


def run_single(cfg, N):
    """One simulation at resolution N; returns (result, ops, u0)."""
    ops = build_problem(cfg, N)
    exact, _ = exact_solution(cfg)
    u0 = radau_project(lambda x: exact(x, 0.0), ops.space)
    result = run_simulation(u0, ops, _flux_object(cfg), time_config(cfg))
    return result, ops, u0


def run_convergence_study(cfg, progress=None, fields=None):
    """Error/rate/conserved-quantity table over cfg.N_list.

    A failure at one resolution is recorded in its row and the study
    continues with the remaining resolutions.  Pass a dict as fields to
    collect the final DG field of each successful run (keyed by N).
    """
    cfg.validate()
    exact, _ = exact_solution(cfg)
    rows = []
    for N in cfg.N_list:
        row = StudyRow(N=int(N))
        try:
            result, ops, u0 = run_single(cfg, N)
            row.error = l2_error(result.u, exact, cfg.t_final)
            cq = conserved_quantities(result.u, u0)
            row.c1, row.c2 = cq.c1, cq.c2
            row.tau = result.tau
            row.n_steps = result.n_steps
            if fields is not None:
                fields[int(N)] = result.u
        except (BlowUpError, NewtonDivergedError) as exc:
            row.ok = False
            row.message = str(exc)
        rows.append(row)
        if progress is not None:
            progress(row)
    previous = None
    for row in rows:
        if row.ok and previous is not None and previous.ok and row.error > 0 and previous.error > 0:
            row.rate = (np.log(previous.error) - np.log(row.error)) / (
                np.log(row.N) - np.log(previous.N)
            )
        previous = row
    return rows


def _fmt(x):
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return repr(float(x))


def rows_to_csv(rows):
    lines = ["N,error,rate,C1,C2"]
    for row in rows:
        if row.ok:
            lines.append(
                f"{row.N},{_fmt(row.error)},{_fmt(row.rate)},{_fmt(row.c1)},{_fmt(row.c2)}"
            )
        else:
            lines.append(f"{row.N},failed,,,")
    return "\n".join(lines) + "\n"


def parse_csv_table(text):
    """Parse a table produced by rows_to_csv back into StudyRow objects."""
    lines = text.strip().split("\n")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if parts[1] == "failed":
            rows.append(StudyRow(N=int(parts[0]), ok=False))
            continue
        rows.append(
            StudyRow(
                N=int(parts[0]),
                error=float(parts[1]),
                rate=float(parts[2]) if parts[2] else None,
                c1=float(parts[3]) if parts[3] else float("nan"),
                c2=float(parts[4]) if parts[4] else float("nan"),
            )
        )
    return rows


def sample_snapshot(u):
    """(x, u) samples at 4(k+1) equispaced points per cell for plotting."""
    space = u.space
    mesh = space.mesh
    pts = np.linspace(-1.0, 1.0, 4 * space.n_modes)
    phi = orthonormal_legendre(space.degree, pts)
    vals = u.coeffs @ phi.T
    xs = mesh.cell_centers[:, None] + 0.5 * mesh.cell_widths[:, None] * pts[None, :]
    return xs.reshape(-1), vals.reshape(-1)


def snapshot_csv(u):
    xs, vals = sample_snapshot(u)
    lines = ["x,u"]
    lines.extend(f"{_fmt(x)},{_fmt(v)}" for x, v in zip(xs, vals))
    return "\n".join(lines) + "\n"


def output_dir(cfg):
    return os.environ.get(OUTPUT_DIR_ENV, cfg.output_dir)


def emit_outputs(rows, cfg, wall_time=0.0, snapshots=None, extra=None):
    """Write table.csv, metadata.json and optional snapshot CSVs.

    Returns the list of paths written.  I/O failures propagate with path
    context attached.
    """
    if not rows:
        raise ConfigError("no rows to emit")
    outdir = output_dir(cfg)
    os.makedirs(outdir, exist_ok=True)
    paths = []

    def write(name, text):
        path = os.path.join(outdir, name)
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"failed to write {path}: {exc}") from exc
        paths.append(path)
        return path

    write("table.csv", rows_to_csv(rows))

    meta = {
        "config": dataclasses.asdict(cfg),
        "kernel": cfg.resolved_kernel(),
        "rows": [dataclasses.asdict(r) for r in rows],
        "versions": {
            "boldg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "seed": cfg.seed,
        "wall_time_s": wall_time,
        "argv": sys.argv,
    }
    if extra:
        meta.update(extra)
    write("metadata.json", json.dumps(meta, indent=2, default=float) + "\n")

    for N, u in (snapshots or {}).items():
        write(f"snapshot_N{N}.csv", snapshot_csv(u))
    return paths


def run_stability_experiment(cfg):
    """Stability report for each N in the config (JSON-ready dict)."""
    cfg.validate()
    reports = []
    for N in cfg.N_list:
        ops = build_problem(cfg, N)
        reports.append(
            stability_report(
                ops,
                cfl=cfg.cfl_target,
                trials=cfg.trials,
                seed=cfg.seed,
                scan_steps=cfg.scan_steps,
            )
        )
    return reports


def run_study_with_outputs(cfg, progress=None):
    """Run a convergence study and write its outputs; returns (rows, paths)."""
    start = time.perf_counter()
    fields = {} if cfg.snapshots else None
    rows = run_convergence_study(cfg, progress=progress, fields=fields)
    wall = time.perf_counter() - start
    paths = emit_outputs(rows, cfg, wall_time=wall, snapshots=fields)
    return rows, paths
