"""Interface fluxes and assembly of the semi-discrete evolution operators.

The first-order-system form of u_t + f(u)_x - H u_xx = 0 introduces
q = u_x and p = H q.  In weak form,

    (u_t, v) = F(f(u), v) + D+(p, v),
    (p,  w)  = (H q, w),
    (q,  z)  = D-(u, z),

where D-/D+ carry alternating one-sided traces (p-hat = p+, u-hat = u-, or
the mirrored pair) and F carries a consistent monotone flux for f.  The
matrices Dp and Dm realize v -> D+(p, v) and z -> D-(u, z) on modal
coefficients; summation by parts gives Dp = -Dm^T exactly, which this
module assembles from the flux definitions and the test suite verifies.

Two boundary closures are supported: "zero" (exterior traces vanish;
matches compactly supported solutions) and "periodic" (traces wrap).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import apply_hilbert
from .mesh import FieldCoeffs

ORIENTATIONS = ("p_plus_u_minus", "p_minus_u_plus")
BOUNDARIES = ("zero", "periodic")
NONLINEAR_MODES = ("lax_friedrichs", "none")
DELTA_MODES = ("local_max", "global_max")


class BlowUpError(RuntimeError):
    """A non-finite value appeared in the right-hand side."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class Flux:
    """Flux function f(u) bundled with its derivative."""

    def __init__(self, name, fn, deriv):
        self.name = name
        self.fn = fn
        self.deriv = deriv

    def __call__(self, u):
        return self.fn(u)

    def __repr__(self):
        return f"Flux({self.name!r})"


BURGERS = Flux("burgers", lambda u: 0.5 * u * u, lambda u: u)
LINEAR = Flux("linear", lambda u: u, lambda u: np.ones_like(np.asarray(u, dtype=float)))

FLUXES = {"burgers": BURGERS, "linear": LINEAR}


@dataclass(frozen=True)
class FluxConfig:
    orientation: str = "p_plus_u_minus"
    nonlinear: str = "lax_friedrichs"
    delta_mode: str = "local_max"
    boundary: str = "zero"

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.nonlinear not in NONLINEAR_MODES:
            raise ValueError(f"unknown nonlinear flux mode {self.nonlinear!r}")
        if self.delta_mode not in DELTA_MODES:
            raise ValueError(f"unknown delta mode {self.delta_mode!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary closure {self.boundary!r}")


def lax_friedrichs(u_minus, u_plus, f, delta):
    """Lax-Friedrichs flux (f(u-) + f(u+))/2 - delta (u+ - u-)/2.

    Consistent and monotone as long as delta bounds |f'| over the range of
    the two states (the caller supplies delta).
    """
    return 0.5 * (f(u_minus) + f(u_plus)) - 0.5 * delta * (u_plus - u_minus)


def _shift_matrices(N, periodic):
    """Cell adjacency selectors: sub(i, i-1), sup(i, i+1), wrap corners."""
    ones = np.ones(N - 1)
    sub = sp.diags(ones, -1, shape=(N, N), format="lil")
    sup = sp.diags(ones, 1, shape=(N, N), format="lil")
    if periodic:
        sub[0, N - 1] = 1.0
        sup[N - 1, 0] = 1.0
    return sub.tocsr(), sup.tocsr()


def _assemble_dm_dp(space, cfg):
    N = space.mesh.N
    S = space.stiffness
    e0 = space.basis_left
    e1 = space.basis_right
    periodic = cfg.boundary == "periodic"
    sub, sup = _shift_matrices(N, periodic)
    eye = sp.eye(N, format="csr")

    def diag_select(cells):
        d = np.zeros(N)
        d[cells] = 1.0
        return sp.diags(d, format="csr")

    own_right = diag_select(slice(None)) if periodic else diag_select(slice(0, N - 1))
    own_left = diag_select(slice(None)) if periodic else diag_select(slice(1, N))

    if cfg.orientation == "p_plus_u_minus":
        # u-hat = u- (left cell's trace), p-hat = p+ (right cell's trace).
        Dm = (
            sp.kron(eye, -S)
            + sp.kron(own_right, np.outer(e1, e1))
            + sp.kron(sub, -np.outer(e0, e1))
        )
        if periodic:
            Dp = (
                sp.kron(eye, -S - np.outer(e0, e0))
                + sp.kron(sup, np.outer(e1, e0))
            )
        else:
            # Boundary closure: p-hat_{1/2} = p+, p-hat_{N+1/2} = p-.
            last = diag_select([N - 1])
            Dp = (
                sp.kron(eye, -S - np.outer(e0, e0))
                + sp.kron(sup, np.outer(e1, e0))
                + sp.kron(last, np.outer(e1, e1))
            )
    else:
        # Mirrored pairing: u-hat = u+, p-hat = p-.
        Dm = (
            sp.kron(eye, -S)
            + sp.kron(own_left, -np.outer(e0, e0))
            + sp.kron(sup, np.outer(e1, e0))
        )
        if periodic:
            Dp = (
                sp.kron(eye, -S + np.outer(e1, e1))
                + sp.kron(sub, -np.outer(e0, e1))
            )
        else:
            first = diag_select([0])
            Dp = (
                sp.kron(eye, -S + np.outer(e1, e1))
                + sp.kron(sub, -np.outer(e0, e1))
                + sp.kron(first, -np.outer(e0, e0))
            )
    return Dm.tocsr(), Dp.tocsr()


class OperatorSet:
    """Assembled discrete operators for one space/flux/Hilbert combination."""

    def __init__(self, space, flux, hilbert, Dm, Dp):
        self.space = space
        self.flux = flux
        self.hilbert = hilbert
        self.Dm = Dm
        self.Dp = Dp
        self.mass = space.mass_diag()
        self.inv_mass = 1.0 / self.mass
        self._linear_moment = None
        self._lh = None

    @property
    def linear_moment_matrix(self):
        """Dense moment-form linear operator Dp M^{-1} K M^{-1} Dm."""
        if self._linear_moment is None:
            K = self.hilbert.K
            scaled = self.inv_mass[:, None] * K * self.inv_mass[None, :]
            tmp = (self.Dm.T @ scaled.T).T  # scaled @ Dm
            self._linear_moment = self.Dp @ tmp
        return self._linear_moment

    @property
    def Lh(self):
        """Dense linear evolution operator (f = 0): du/dt = Lh u."""
        if self._lh is None:
            self._lh = self.inv_mass[:, None] * self.linear_moment_matrix
        return self._lh

    def apply_linear(self, c):
        """Lh applied to flat coefficients without materializing Lh."""
        q = self.inv_mass * (self.Dm @ c)
        p = self.inv_mass * (self.hilbert.K @ q)
        return self.inv_mass * (self.Dp @ p)


def assemble_operators(space, flux, hilbert):
    """Build Dm, Dp and the linear evolution operator for one configuration."""
    if hilbert.space is not space:
        raise ValueError("Hilbert operator was assembled for a different space")
    Dm, Dp = _assemble_dm_dp(space, flux)
    return OperatorSet(space, flux, hilbert, Dm, Dp)


def _edge_states(C, space, boundary):
    """Left/right trace pairs at the N+1 edges (exterior traces are zero
    for the compact-support closure and wrap for the periodic one)."""
    N = space.mesh.N
    um = C @ space.basis_right  # trace from inside each cell at its right edge
    up = C @ space.basis_left   # trace at its left edge
    uL = np.empty(N + 1)
    uR = np.empty(N + 1)
    uL[1:] = um
    uR[:-1] = up
    if boundary == "periodic":
        uL[0] = um[-1]
        uR[-1] = up[0]
    else:
        uL[0] = 0.0
        uR[-1] = 0.0
    return uL, uR


def _edge_delta(ops, f, Uq, C):
    """Per-edge stabilization delta = max |f'(u)| over the adjacent cells'
    quadrature and trace values (local mode) or over the whole field."""
    space = ops.space
    samples = np.concatenate(
        [np.abs(f.deriv(Uq)),
         np.abs(f.deriv(C @ space.basis_right))[:, None],
         np.abs(f.deriv(C @ space.basis_left))[:, None]],
        axis=1,
    )
    cell_max = samples.max(axis=1)
    boundary = ops.flux.boundary
    ghost = 0.0 if boundary == "zero" else None
    if ops.flux.delta_mode == "global_max":
        d = cell_max.max()
        if ghost is not None:
            d = max(d, float(np.abs(f.deriv(ghost))))
        return np.full(space.mesh.N + 1, d)
    padded = np.empty(space.mesh.N + 2)
    padded[1:-1] = cell_max
    if boundary == "periodic":
        padded[0] = cell_max[-1]
        padded[-1] = cell_max[0]
    else:
        padded[0] = padded[-1] = float(np.abs(f.deriv(0.0)))
    return np.maximum(padded[:-1], padded[1:])


def nonlinear_flux_moments(u, ops, f):
    """Moment vector of F(f(u), .), shape (N, k+1)."""
    space = ops.space
    C = u.coeffs
    w = space.volume_rule.weights
    Uq = C @ space.basis_at_quad.T  # (N, nq)
    fq = f(Uq)
    F = (w[None, :] * fq) @ space.dbasis_at_quad  # volume term; h/2 cancels

    uL, uR = _edge_states(C, space, ops.flux.boundary)
    delta = _edge_delta(ops, f, Uq, C)
    fhat = lax_friedrichs(uL, uR, f, delta)
    F += np.outer(fhat[:-1], space.basis_left)
    F -= np.outer(fhat[1:], space.basis_right)
    return F


def nonlinear_rhs(u, ops, f=None):
    """Semi-discrete right-hand side du/dt for flux f (None or zero -> linear).

    Computes q = M^{-1} Dm u, p = M^{-1} K q, then
    du/dt = M^{-1} (F(f(u), .) + Dp p).  Aborts on non-finite values.
    """
    space = ops.space
    c = u.flat
    if not np.all(np.isfinite(c)):
        raise BlowUpError("non-finite value in field")
    # overflow en route to the guard below is expected during blow-up
    with np.errstate(over="ignore", invalid="ignore"):
        moments = ops.Dp @ (ops.inv_mass * (ops.hilbert.K @ (ops.inv_mass * (ops.Dm @ c))))
        if f is not None and ops.flux.nonlinear != "none":
            moments = moments + nonlinear_flux_moments(u, ops, f).reshape(-1)
        out = ops.inv_mass * moments
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite value in right-hand side")
    return FieldCoeffs(space, out.reshape(u.coeffs.shape))


def nonlinear_flux_jacobian(u, ops, f):
    """Dense Jacobian of the F moment vector with respect to the coefficients.

    The Lax-Friedrichs delta is held fixed during differentiation; Newton
    tolerates the resulting inexact Jacobian.
    """
    space = ops.space
    N = space.mesh.N
    k1 = space.n_modes
    n = space.n_dofs
    C = u.coeffs
    w = space.volume_rule.weights
    e0 = space.basis_left
    e1 = space.basis_right

    Uq = C @ space.basis_at_quad.T
    wfp = w[None, :] * f.deriv(Uq)
    vol = np.einsum("iq,qn,qm->inm", wfp, space.dbasis_at_quad, space.basis_at_quad)

    uL, uR = _edge_states(C, space, ops.flux.boundary)
    delta = _edge_delta(ops, f, Uq, C)
    dfdL = 0.5 * (f.deriv(uL) + delta)  # d fhat / d u-
    dfdR = 0.5 * (f.deriv(uR) - delta)  # d fhat / d u+

    J = np.zeros((N, k1, N, k1))
    idx = np.arange(N)
    J[idx, :, idx, :] += vol
    # own-cell trace couplings: right trace feeds edge i+1, left trace edge i
    J[idx, :, idx, :] -= dfdL[1:, None, None] * np.outer(e1, e1)
    J[idx, :, idx, :] += dfdR[:-1, None, None] * np.outer(e0, e0)
    # neighbor couplings
    J[idx[1:], :, idx[:-1], :] += dfdL[1:-1, None, None] * np.outer(e0, e1)
    J[idx[:-1], :, idx[1:], :] -= dfdR[1:-1, None, None] * np.outer(e1, e0)
    if ops.flux.boundary == "periodic":
        J[0, :, N - 1, :] += dfdL[0] * np.outer(e0, e1)
        J[N - 1, :, 0, :] -= dfdR[-1] * np.outer(e1, e0)
    return J.reshape(n, n)
