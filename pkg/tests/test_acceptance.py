"""Acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (run pytest
with -s to see them live).  Heavy convergence studies are shared through
session fixtures; the determinism criterion reruns them from scratch.

Three criteria encode reference-table properties that are analytically
unreachable by a correct implementation of the discretization (documented
with measurements in the project notes): the absolute-error windows of
criteria 6 and 7, and the rate window of criterion 8 on the pinned domain.
Those sub-checks are asserted as stated and fail honestly; every other
clause passes.
"""

import dataclasses
from fractions import Fraction

import numpy as np
import pytest

from boldg.harness import (
    make_config,
    rows_to_csv,
    run_convergence_study,
)
from boldg.hilbert import apply_hilbert, assemble_hilbert
from boldg.mesh import DGSpace, FieldCoeffs, build_mesh, field_inner, field_norm
from boldg.operators import BURGERS, FluxConfig, assemble_operators
from boldg.projection import l2_project, radau_project
from boldg.solutions import l2_error
from boldg.stability import (
    build_composite_matrices,
    check_semi_negative,
    energy_change,
    multistep_stability_trial,
    operator_norm,
)
from boldg.timestepping import TimeConfig, cn_step, run_simulation

from helpers import fit_rate

# Reference values transcribed from the published convergence tables.
CN_TABLE_ERRORS = {160: 1.65e-2, 320: 3.77e-3, 640: 8.98e-4}
CN_TABLE_C1 = {160: 1.04, 320: 1.05, 640: 1.02}
CN_TABLE_C2 = {160: 0.97, 320: 0.97, 640: 0.98}
RK_TABLE_K3_ERRORS = {40: 8.69e-3, 80: 4.20e-4, 160: 2.49e-5}
COMPOSITE_EIGENVALUES = (-21.9444, -1.64399, -0.536623)

ERROR_FACTOR = 2.5
TOL_EQ = 1e-9  # float-inclusive comparison slack on stated tolerances


def report(num, name, ok, detail=""):
    state = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:>2} [{name}]: {state}  {detail}")


# --------------------------------------------------------------------------
# shared studies
# --------------------------------------------------------------------------


@pytest.fixture(scope="session")
def study_cn():
    cfg = make_config("example1_cn")  # N = 160/320/640, k=1, tau=0.5h, T=20
    rows = run_convergence_study(cfg)
    return cfg, rows


@pytest.fixture(scope="session")
def study_rk():
    out = {}
    for k in (1, 2, 3):
        cfg = make_config("example1_rk", degree=k)  # N = 40/80/160, T=10
        out[k] = (cfg, run_convergence_study(cfg))
    return out


@pytest.fixture(scope="session")
def study_two_soliton():
    cfg = make_config("example2_rk")  # [-150,150], k=2, N=640/1280, T=20
    rows = run_convergence_study(cfg)
    return cfg, rows


def bo_linear_operator(N, k, boundary="zero"):
    space = DGSpace(build_mesh(-15.0, 15.0, N), k)
    kernel = "periodic" if boundary == "periodic" else "line"
    hil = assemble_hilbert(space, kernel=kernel)
    return assemble_operators(space, FluxConfig(boundary=boundary), hil)


# --------------------------------------------------------------------------
# criterion 1: operator identities
# --------------------------------------------------------------------------


def test_criterion_1_operator_identities():
    worst_adjoint = 0.0
    worst_skew = 0.0
    worst_orth = 0.0
    worst_eig = -np.inf
    rng = np.random.default_rng(101)
    for N in (8, 32):
        for k in (1, 2, 3):
            ops = bo_linear_operator(N, k)
            worst_adjoint = max(
                worst_adjoint, np.abs(ops.Dp.toarray() + ops.Dm.toarray().T).max()
            )
            for _ in range(10):
                q1 = FieldCoeffs(ops.space, rng.standard_normal((N, k + 1)))
                q2 = FieldCoeffs(ops.space, rng.standard_normal((N, k + 1)))
                h1 = apply_hilbert(ops.hilbert, q1)
                h2 = apply_hilbert(ops.hilbert, q2)
                scale = field_norm(q1) * field_norm(q2)
                worst_skew = max(
                    worst_skew, abs(field_inner(h1, q2) + field_inner(q1, h2)) / scale
                )
                worst_orth = max(
                    worst_orth, abs(field_inner(h1, q1)) / field_norm(q1) ** 2
                )
            worst_eig = max(worst_eig, check_semi_negative(ops.Lh, ops.mass))
    ok = worst_adjoint <= 1e-13 and worst_skew <= 1e-12 and worst_orth <= 1e-12 \
        and worst_eig <= 1e-10
    report(1, "operator-identities", ok,
           f"adjoint={worst_adjoint:.2e} skew={worst_skew:.2e} "
           f"orth={worst_orth:.2e} max_eig={worst_eig:.2e}")
    assert worst_adjoint <= 1e-13
    assert worst_skew <= 1e-12
    assert worst_orth <= 1e-12
    assert worst_eig <= 1e-10


# --------------------------------------------------------------------------
# criterion 2: energy equality
# --------------------------------------------------------------------------


def test_criterion_2_energy_equality():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 14))
        A = rng.standard_normal((n, n))
        skew = 0.5 * (A - A.T)
        B = rng.standard_normal((n, n)) / np.sqrt(n)
        L = skew - B @ B.T
        tau = float(rng.uniform(0.01, 2.0)) / max(np.linalg.norm(L, 2), 1e-12)
        u = rng.standard_normal(n)
        rep = energy_change(u, L, tau)
        worst = max(worst, rep.residual / float(u @ u))
    ok = worst <= 1e-10
    report(2, "energy-equality", ok, f"max residual / ||u||^2 = {worst:.2e} over 1000 trials")
    assert ok


# --------------------------------------------------------------------------
# criterion 3: quadratic-form matrices
# --------------------------------------------------------------------------


def test_criterion_3_composite_matrices():
    mats = build_composite_matrices()
    exact_sum = all(
        mats["A"][i][j] == mats["A0"][i][j] + mats["A1"][i][j] + mats["A2"][i][j]
        and isinstance(mats["A"][i][j], Fraction)
        for i in range(3)
        for j in range(3)
    )
    eig = np.sort(mats["eigenvalues"])
    eig_err = np.abs(eig - np.sort(COMPOSITE_EIGENVALUES)).max()
    ok = exact_sum and eig_err <= 1e-3
    report(3, "composite-matrices", ok, f"rational sum exact={exact_sum}, eig dev={eig_err:.2e}")
    assert exact_sum
    assert eig_err <= 1e-3


# --------------------------------------------------------------------------
# criterion 4: two- and three-step strong stability
# --------------------------------------------------------------------------


def test_criterion_4_multistep_strong_stability():
    worst = 0.0
    for k in (1, 2):
        ops = bo_linear_operator(64, k)
        s = np.sqrt(ops.mass)
        W = (s[:, None] * ops.Lh) / s[None, :]
        norm = operator_norm(W)
        for target in (0.5, 1.0, 2.0):
            tau = target / norm
            for steps in (2, 3):
                ratio = multistep_stability_trial(
                    W, tau, steps, trials=100, seed=404 + k, scan_steps=50
                )
                worst = max(worst, ratio)
    ok = worst <= 1.0 + 1e-12
    report(4, "multistep-strong-stability", ok, f"worst window ratio = {worst:.15f}")
    assert ok


# --------------------------------------------------------------------------
# criterion 5: Crank-Nicolson norm monotonicity
# --------------------------------------------------------------------------


def test_criterion_5_cn_monotonicity():
    from boldg.harness import exact_solution

    cfg = make_config("example1_cn", N_list=(160,))
    exact, _ = exact_solution(cfg)
    ops = bo_linear_operator(160, 1, boundary="periodic")
    u0 = radau_project(lambda x: exact(x, 0.0), ops.space)
    tcfg = TimeConfig(t_final=20.0, scheme="crank_nicolson", tau_rule="proportional_h",
                      tau_coefficient=0.5)
    norms = [field_norm(u0)]
    result = run_simulation(
        u0, ops, BURGERS, tcfg,
        callbacks=[lambda step, t, u: norms.append(field_norm(u)) or True],
    )
    increments = np.diff(norms)
    bound = 10.0 * tcfg.newton_tol
    ok = bool(np.all(increments <= bound))
    report(5, "cn-monotonicity", ok,
           f"max per-step growth {increments.max():.2e} over {result.n_steps} steps "
           f"(bound {bound:.0e})")
    assert ok


# --------------------------------------------------------------------------
# criterion 6: Example 1 Crank-Nicolson convergence table
# --------------------------------------------------------------------------


def test_criterion_6_example1_cn_table(study_cn):
    cfg, rows = study_cn
    assert all(r.ok for r in rows)
    errors = {r.N: r.error for r in rows}
    rates = [r.rate for r in rows if r.rate is not None]
    rates_ok = all(1.85 <= r <= 2.25 for r in rates)
    cq_ok = all(
        abs(r.c1 - CN_TABLE_C1[r.N]) <= 0.05 + TOL_EQ
        and abs(r.c2 - CN_TABLE_C2[r.N]) <= 0.05 + TOL_EQ
        for r in rows
    )
    # two-sided magnitude window around the published errors
    mag_ok = all(
        CN_TABLE_ERRORS[N] / ERROR_FACTOR <= errors[N] <= CN_TABLE_ERRORS[N] * ERROR_FACTOR
        for N in errors
    )
    detail = (
        f"rates={['%.3f' % r for r in rates]} (window [1.85,2.25]) "
        f"errors={['%.2e' % errors[N] for N in sorted(errors)]} "
        f"vs published {['%.2e' % CN_TABLE_ERRORS[N] for N in sorted(errors)]} "
        f"CQ ok={cq_ok}"
    )
    report(6, "example1-cn-table", rates_ok and cq_ok and mag_ok, detail)
    assert rates_ok, f"observed rates {rates} outside [1.85, 2.25]"
    assert cq_ok
    # Unattainable as stated: the scheme with exactly integrated Hilbert
    # near-field converges to errors ~120x below the published table, whose
    # magnitudes reflect the reference implementation's quadrature floor.
    # See notes/decisions.md.
    assert mag_ok, (
        f"errors {errors} are far below the published values "
        f"{CN_TABLE_ERRORS} (factor-2.5 window); accuracy exceeds the table"
    )


# --------------------------------------------------------------------------
# criterion 7: Example 1 Runge-Kutta convergence tables
# --------------------------------------------------------------------------


def test_criterion_7_example1_rk_tables(study_rk):
    rates_ok = True
    cq_ok = True
    details = []
    for k, (cfg, rows) in study_rk.items():
        assert all(r.ok for r in rows)
        rates = [r.rate for r in rows if r.rate is not None]
        rates_ok &= all(abs(r - (k + 1)) <= 0.35 for r in rates)
        details.append(f"k={k} rates={['%.3f' % r for r in rates]}")
        final = rows[-1]
        assert final.N == 160
        cq_ok &= abs(final.c1 - 1.0) <= 0.02 + TOL_EQ and abs(final.c2 - 1.0) <= 0.02 + TOL_EQ
    errors_k3 = {r.N: r.error for _, rows in [study_rk[3]] for r in rows}
    mag_ok = all(
        RK_TABLE_K3_ERRORS[N] / ERROR_FACTOR <= errors_k3[N] <= RK_TABLE_K3_ERRORS[N] * ERROR_FACTOR
        for N in errors_k3
    )
    detail = "; ".join(details) + f"; CQ ok={cq_ok}; k3 errors={['%.2e' % errors_k3[N] for N in sorted(errors_k3)]}"
    report(7, "example1-rk-tables", rates_ok and cq_ok and mag_ok, detail)
    assert rates_ok
    assert cq_ok
    # Unattainable as stated, same mechanism as criterion 6 (measured ~4000x
    # more accurate than the published k=3 column).  See notes/decisions.md.
    assert mag_ok, (
        f"k=3 errors {errors_k3} far below published {RK_TABLE_K3_ERRORS} "
        f"(factor-2.5 window)"
    )


# --------------------------------------------------------------------------
# criterion 8: scaled two-soliton study
# --------------------------------------------------------------------------


def test_criterion_8_example2_scaled(study_two_soliton):
    cfg, rows = study_two_soliton
    assert all(r.ok for r in rows)
    rate = rows[-1].rate
    final = rows[-1]
    cq_ok = abs(final.c1 - 1.0) <= 0.02 + TOL_EQ and abs(final.c2 - 1.0) <= 0.02 + TOL_EQ
    rate_ok = rate is not None and 2.6 <= rate <= 3.3
    report(8, "example2-scaled", rate_ok and cq_ok,
           f"rate={rate:.3f} (window [2.6,3.3]) C1={final.c1:.5f} C2={final.c2:.5f} "
           f"errors={['%.3e' % r.error for r in rows]}")
    assert cq_ok
    # Unattainable as stated: on [-150,150] the exact two-soliton tails are
    # ~1e-3 at the boundary, and the compact-support closure turns that into
    # an h-independent modeling floor ~2e-3 that the N=1280 run sits on.
    # The companion test below shows clean third-order convergence once the
    # domain is wide enough for the tails to clear the floor.
    assert rate_ok, f"rate {rate} outside [2.6, 3.3]: boundary-truncation floor"


def test_example2_wide_domain_companion():
    # not a stated criterion: demonstrates the rate claim of criterion 8 on
    # a domain where the truncated tails no longer dominate the error
    cfg = make_config("example2_rk", a=-400.0, b=400.0)
    rows = run_convergence_study(cfg)
    assert all(r.ok for r in rows)
    rate = rows[-1].rate
    print(f"ACCEPTANCE  8+[example2-wide-domain]: rate={rate:.3f} "
          f"errors={['%.3e' % r.error for r in rows]}")
    assert 2.6 <= rate <= 3.3


# --------------------------------------------------------------------------
# criterion 9: temporal orders
# --------------------------------------------------------------------------


def test_criterion_9_temporal_orders():
    ops = bo_linear_operator(24, 1, boundary="periodic")
    u0 = l2_project(lambda x: np.exp(-0.25 * x * x), ops.space)
    T = 0.5
    taus = [0.04, 0.02, 0.01]
    ref_cfg = TimeConfig(t_final=T, scheme="rk4", tau_rule="fixed",
                         tau_coefficient=taus[-1] / 64.0)
    reference = run_simulation(u0, ops, None, ref_cfg).u.coeffs

    def order_of(scheme):
        errs = []
        for tau in taus:
            cfg = TimeConfig(t_final=T, scheme=scheme, tau_rule="fixed", tau_coefficient=tau)
            errs.append(np.linalg.norm(run_simulation(u0, ops, None, cfg).u.coeffs - reference))
        return fit_rate(errs, [1.0 / t for t in taus])

    cn = order_of("crank_nicolson")
    rk4 = order_of("rk4")
    lserk = order_of("lserk54")
    ok = abs(cn - 2.0) <= 0.1 and abs(rk4 - 4.0) <= 0.15 and abs(lserk - 4.0) <= 0.15
    report(9, "temporal-orders", ok, f"CN={cn:.3f} RK4={rk4:.3f} LSERK={lserk:.3f}")
    assert abs(cn - 2.0) <= 0.1
    assert abs(rk4 - 4.0) <= 0.15
    assert abs(lserk - 4.0) <= 0.15


# --------------------------------------------------------------------------
# criterion 10: projection properties
# --------------------------------------------------------------------------


def test_criterion_10_projection_properties():
    from boldg.mesh import eval_field

    endpoint_worst = 0.0
    idem_worst = 0.0
    rate_devs = []
    g = lambda x: np.sin(np.pi * x) * np.exp(0.2 * x)
    for k in (1, 2, 3):
        space = DGSpace(build_mesh(-1.0, 1.0, 10), k)
        u = radau_project(g, space)
        edges = space.mesh.cell_edges[1:]
        endpoint_worst = max(
            endpoint_worst, np.abs(eval_field(u, edges, side="-") - g(edges)).max()
        )
        again = radau_project(lambda x: eval_field(u, x, side="-"), space)
        idem_worst = max(idem_worst, np.abs(again.coeffs - u.coeffs).max())
        v = l2_project(g, space)
        vagain = l2_project(lambda x: eval_field(v, x, side="-"), space)
        idem_worst = max(idem_worst, np.abs(vagain.coeffs - v.coeffs).max())
        for project in (l2_project, radau_project):
            errors, Ns = [], [8, 16, 32, 64]
            for N in Ns:
                sp = DGSpace(build_mesh(-1.0, 1.0, N), k)
                errors.append(l2_error(project(g, sp), lambda x, t: g(x), 0.0))
            rate_devs.append(abs(fit_rate(errors, Ns) - (k + 1)))
    ok = endpoint_worst <= 1e-12 and idem_worst <= 1e-13 and max(rate_devs) <= 0.1
    report(10, "projection-properties", ok,
           f"endpoint={endpoint_worst:.2e} idempotence={idem_worst:.2e} "
           f"max rate dev={max(rate_devs):.3f}")
    assert endpoint_worst <= 1e-12
    assert idem_worst <= 1e-13
    assert max(rate_devs) <= 0.1


# --------------------------------------------------------------------------
# criterion 11: determinism of the table studies
# --------------------------------------------------------------------------


def test_criterion_11_determinism(study_cn, study_rk, study_two_soliton):
    mismatches = []

    cfg6, rows6 = study_cn
    again6 = run_convergence_study(dataclasses.replace(cfg6))
    if rows_to_csv(rows6).encode() != rows_to_csv(again6).encode():
        mismatches.append("example1_cn")

    for k, (cfg, rows) in study_rk.items():
        again = run_convergence_study(dataclasses.replace(cfg))
        if rows_to_csv(rows).encode() != rows_to_csv(again).encode():
            mismatches.append(f"example1_rk k={k}")

    cfg8, rows8 = study_two_soliton
    again8 = run_convergence_study(dataclasses.replace(cfg8))
    if rows_to_csv(rows8).encode() != rows_to_csv(again8).encode():
        mismatches.append("example2_rk")

    ok = not mismatches
    report(11, "determinism", ok,
           "byte-identical reruns" if ok else f"mismatches: {mismatches}")
    assert ok
