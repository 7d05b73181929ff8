"""Time integrators for the semi-discrete system.

Three schemes: Crank-Nicolson (implicit midpoint form, solved with Newton
iteration), the classical four-stage fourth-order Runge-Kutta method, and
the five-stage low-storage RK(5,4) recurrence

    k_j = a_j k_{j-1} + tau * rhs(y^{(j-1)}),   y^{(j)} = y^{(j-1)} + b_j k_j.

The low-storage coefficients are the standard Carpenter-Kennedy RK(5,4)
table; they are validated by the fourth-order convergence tests rather
than trusted blindly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .mesh import FieldCoeffs, field_norm
from .operators import BlowUpError, nonlinear_flux_jacobian, nonlinear_flux_moments, nonlinear_rhs
from .solutions import conserved_quantities

LSERK_A = (
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
)
LSERK_B = (
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
)
LSERK_C = (
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
)

SCHEMES = ("crank_nicolson", "rk4", "lserk54")
TAU_RULES = ("proportional_h", "proportional_h2", "fixed")


class NewtonDivergedError(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, residual_norm, iterations):
        super().__init__(
            f"Newton diverged: residual {residual_norm:.3e} after {iterations} iterations"
        )
        self.residual_norm = residual_norm
        self.iterations = iterations


@dataclass
class TimeConfig:
    t_final: float
    scheme: str = "lserk54"
    tau_rule: str = "proportional_h2"
    tau_coefficient: float | None = None  # None -> CFL-based default for explicit schemes
    cfl_target: float = 1.5               # target for tau * ||Lh|| when auto-sizing
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.tau_rule not in TAU_RULES:
            raise ValueError(f"unknown tau rule {self.tau_rule!r}")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.tau_coefficient is not None and self.tau_coefficient <= 0:
            raise ValueError("tau_coefficient must be positive")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")


def newton_solve(residual, jacobian, guess, tol, max_iter):
    """Solve residual(x) = 0 by Newton iteration with dense linear algebra.

    Returns x with ||residual(x)||_2 <= tol; raises NewtonDivergedError
    otherwise.  The Jacobian is re-evaluated at every iterate.
    """
    x = np.array(guess, dtype=float)
    r = residual(x)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= tol:
        return x
    for it in range(1, max_iter + 1):
        J = jacobian(x)
        try:
            dx = scipy.linalg.solve(J, -r)
        except scipy.linalg.LinAlgError as exc:
            raise NewtonDivergedError(rnorm, it) from exc
        if not np.all(np.isfinite(dx)):
            raise NewtonDivergedError(rnorm, it)
        x = x + dx
        r = residual(x)
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol:
            return x
    raise NewtonDivergedError(rnorm, max_iter)


class CrankNicolsonStepper:
    """Crank-Nicolson step with the constant linear block precomputed.

    The update solves, in moment form,

        M (u^{n+1} - u^n) = tau * F(f(u^{n+1/2})) + tau * A u^{n+1/2},

    where A = Dp M^{-1} K M^{-1} Dm and u^{n+1/2} = (u^n + u^{n+1})/2.
    Only the nonlinear flux block of the Jacobian is refreshed per iterate.
    """

    def __init__(self, ops, f, cfg):
        self.ops = ops
        self.f = f
        self.cfg = cfg
        self.A = ops.linear_moment_matrix
        self.M = ops.mass

    def _flux_moments(self, w_flat):
        w = FieldCoeffs(self.ops.space, w_flat.reshape(self.ops.space.mesh.N, -1))
        return nonlinear_flux_moments(w, self.ops, self.f).reshape(-1)

    def step(self, c, tau):
        use_f = self.f is not None and self.ops.flux.nonlinear != "none"

        def residual(x):
            w = 0.5 * (c + x)
            r = self.M * (x - c) - tau * (self.A @ w)
            if use_f:
                r -= tau * self._flux_moments(w)
            return r

        def jacobian(x):
            J = np.diag(self.M) - (0.5 * tau) * self.A
            if use_f:
                w = FieldCoeffs(self.ops.space, (0.5 * (c + x)).reshape(self.ops.space.mesh.N, -1))
                J -= (0.5 * tau) * nonlinear_flux_jacobian(w, self.ops, self.f)
            return J

        return newton_solve(residual, jacobian, c, self.cfg.newton_tol, self.cfg.newton_max_iter)


def cn_step(u_n, tau, ops, f, cfg):
    """One Crank-Nicolson step (convenience wrapper around the stepper)."""
    stepper = CrankNicolsonStepper(ops, f, cfg)
    out = stepper.step(u_n.flat, tau)
    return FieldCoeffs(u_n.space, out.reshape(u_n.coeffs.shape))


def rk4_step(u_n, tau, rhs):
    """Classical four-stage RK4; equals P4(tau L) u for linear rhs."""
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = rhs(u_n)
        k2 = rhs(_axpy(u_n, 0.5 * tau, k1))
        k3 = rhs(_axpy(u_n, 0.5 * tau, k2))
        k4 = rhs(_axpy(u_n, tau, k3))
        out = u_n.coeffs + (tau / 6.0) * (
            k1.coeffs + 2.0 * k2.coeffs + 2.0 * k3.coeffs + k4.coeffs
        )
    _check_finite(out)
    return FieldCoeffs(u_n.space, out)


def lserk54_step(u_n, tau, rhs):
    """Five-stage low-storage RK(5,4) step."""
    y = u_n.coeffs.copy()
    k = np.zeros_like(y)
    with np.errstate(over="ignore", invalid="ignore"):
        for a, b in zip(LSERK_A, LSERK_B):
            k = a * k + tau * rhs(FieldCoeffs(u_n.space, y)).coeffs
            y = y + b * k
    _check_finite(y)
    return FieldCoeffs(u_n.space, y)


def _axpy(u, alpha, v):
    return FieldCoeffs(u.space, u.coeffs + alpha * v.coeffs)


def _check_finite(arr):
    if not np.all(np.isfinite(arr)):
        raise BlowUpError("non-finite value after time step")


@dataclass
class SimulationResult:
    u: FieldCoeffs
    tau: float
    n_steps: int
    times: np.ndarray
    norms: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    aborted: bool = False
    newton_iterations: int = 0


def resolve_tau(ops, cfg, operator_norm_fn=None):
    """Time step from the configured rule.

    proportional_h:   tau = c * h        (c required; the implicit scheme's rule)
    proportional_h2:  tau = c * h^2      (c defaults to cfl_target / (||Lh|| h^2))
    fixed:            tau = c
    """
    h = ops.space.mesh.h_max
    c = cfg.tau_coefficient
    if cfg.tau_rule == "fixed":
        if c is None:
            raise ValueError("fixed tau rule needs tau_coefficient")
        return float(c)
    if cfg.tau_rule == "proportional_h":
        if c is None:
            raise ValueError("proportional_h tau rule needs tau_coefficient")
        return float(c * h)
    if c is not None:
        return float(c * h * h)
    if operator_norm_fn is None:
        from .stability import operator_norm as operator_norm_fn  # noqa: PLC0415
    norm = operator_norm_fn(_linear_action(ops))
    if norm <= 0:
        raise ValueError("operator norm estimate is zero; cannot size the time step")
    return float(cfg.cfl_target / norm)


def _linear_action(ops):
    import scipy.sparse.linalg as spla

    n = ops.space.n_dofs

    def mv(x):
        return ops.apply_linear(x)

    def rmv(x):
        # Lh^T x via the assembled pieces: (A M^{-1})^T = M^{-1} A^T
        q = ops.inv_mass * x
        t = ops.Dp.T @ q
        t = ops.hilbert.K.T @ (ops.inv_mass * t)
        return ops.Dm.T @ (ops.inv_mass * t)

    return spla.LinearOperator((n, n), matvec=mv, rmatvec=rmv)


def run_simulation(u0, ops, f, cfg, callbacks=(), record_every=None):
    """Advance u0 to t_final, recording norm and conserved-quantity history.

    Each callback is invoked as callback(step, t, u) after every accepted
    step; returning False aborts the run.  The final step is truncated so
    the trajectory lands on t_final exactly.
    """
    tau = resolve_tau(ops, cfg)
    t_final = cfg.t_final
    n_full = int(np.floor(t_final / tau + 1e-12))
    remainder = t_final - n_full * tau
    taus = [tau] * n_full
    if remainder > 1e-12 * max(tau, 1.0):
        taus.append(remainder)

    if record_every is None:
        record_every = max(1, len(taus) // 200)

    if cfg.scheme == "crank_nicolson":
        stepper = CrankNicolsonStepper(ops, f, cfg)
        advance = None
    else:
        stepper = None
        step_fn = rk4_step if cfg.scheme == "rk4" else lserk54_step

        def advance(state, dt):
            return step_fn(state, dt, lambda v: nonlinear_rhs(v, ops, f))

    u = u0.copy()
    times = [0.0]
    norms = [field_norm(u)]
    cq = conserved_quantities(u, u0)
    c1s = [cq.c1]
    c2s = [cq.c2]
    aborted = False

    t = 0.0
    for step, dt in enumerate(taus, start=1):
        try:
            if stepper is not None:
                u = FieldCoeffs(ops.space, stepper.step(u.flat, dt).reshape(u.coeffs.shape))
            else:
                u = advance(u, dt)
        except (BlowUpError, NewtonDivergedError) as exc:
            _annotate(exc, step, t + dt)
            raise
        t = t + dt
        if step % record_every == 0 or step == len(taus):
            times.append(t)
            norms.append(field_norm(u))
            cq = conserved_quantities(u, u0)
            c1s.append(cq.c1)
            c2s.append(cq.c2)
        keep_going = all(
            cb(step, t, u) is not False for cb in callbacks
        )
        if not keep_going:
            aborted = True
            break

    return SimulationResult(
        u=u,
        tau=tau,
        n_steps=len(taus),
        times=np.asarray(times),
        norms=np.asarray(norms),
        c1=np.asarray(c1s),
        c2=np.asarray(c2s),
        aborted=aborted,
    )


def _annotate(exc, step, t):
    exc.step = step
    exc.time = t
    if exc.args:
        exc.args = (f"{exc.args[0]} (step {step}, t = {t:.6g})",) + exc.args[1:]
