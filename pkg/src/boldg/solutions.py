"""Exact soliton solutions, error norms, and convergence diagnostics.

The one-soliton family is the periodic solitary wave

    U(x, t) = 2 c delta^2 / (1 - sqrt(1 - delta^2) cos(c delta (x - c t))),
    delta = pi / (c L),

a right-moving wave of period 2L.  (The amplitude factor is delta^2, not
delta: expanding the profile in the Fourier series of the Poisson kernel
and matching the traveling-wave balance -c U + U^2/2 - H U' = const
termwise forces amplitude 2 c delta^2; the delta variant fails the PDE by
an O(1) residual.  See tests/test_solutions.py for the spectral check.)

The two-soliton solution is the rational inverse-scattering profile in
lambda_i = x - c_i t - d_i; it decays like 1/x^2 in the far field.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mesh import orthonormal_legendre
from .quadrature import gauss_legendre


@dataclass(frozen=True)
class OneSolitonParams:
    """Periodic solitary wave with speed c and half-period L."""

    c: float
    L: float

    def __post_init__(self):
        d = self.delta
        if not 0.0 < d < 1.0:
            raise ValueError(
                f"need 0 < pi/(c L) < 1 for a real wave profile, got delta = {d}"
            )

    @property
    def delta(self):
        return np.pi / (self.c * self.L)

    @property
    def period(self):
        return 2.0 * self.L


@dataclass(frozen=True)
class TwoSolitonParams:
    """Two interacting solitary waves with speeds c1 != c2 and phase shifts."""

    c1: float
    c2: float
    d1: float
    d2: float

    def __post_init__(self):
        if self.c1 == self.c2:
            raise ValueError("two-soliton speeds must differ")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("two-soliton speeds must be positive")


def one_soliton(x, t, p):
    """Evaluate the periodic one-soliton profile at (x, t)."""
    x = np.asarray(x, dtype=float)
    cd = p.c * p.delta
    return 2.0 * p.c * p.delta**2 / (
        1.0 - np.sqrt(1.0 - p.delta**2) * np.cos(cd * (x - p.c * t))
    )


def two_soliton(x, t, p):
    """Evaluate the two-soliton profile at (x, t)."""
    x = np.asarray(x, dtype=float)
    lam1 = x - p.c1 * t - p.d1
    lam2 = x - p.c2 * t - p.d2
    c1, c2 = p.c1, p.c2
    csum3 = (c1 + c2) ** 3 / (c1 * c2 * (c1 - c2) ** 2)
    num = 4.0 * c1 * c2 * (c1 * lam1**2 + c2 * lam2**2 + csum3)
    den = (c1 * c2 * lam1 * lam2 - (c1 + c2) ** 2 / (c1 - c2) ** 2) ** 2 + (
        c1 * lam1 + c2 * lam2
    ) ** 2
    return num / den


def _measurement_rule(space):
    # one order above the volume rule so measurement error stays below
    # discretization error
    return gauss_legendre(space.degree + 3)


def l2_error(u_h, exact, t):
    """L2(a, b) distance between a DG field and exact(x, t)."""
    space = u_h.space
    rule = _measurement_rule(space)
    mesh = space.mesh
    centers = mesh.cell_centers
    half = 0.5 * mesh.cell_widths
    xq = centers[:, None] + half[:, None] * rule.nodes[None, :]
    phi = orthonormal_legendre(space.degree, rule.nodes)
    uh = u_h.coeffs @ phi.T
    diff = uh - exact(xq, t)
    per_cell = (diff * diff) @ rule.weights
    return float(np.sqrt(np.sum(half * per_cell)))


class ConservedQuantities(NamedTuple):
    c1: float  # mass ratio   int u / int u0
    c2: float  # momentum ratio ||u|| / ||u0||


def conserved_quantities(u_h, u0_field):
    """Normalized discrete mass and momentum relative to the initial field.

    A vanishing initial integral or norm makes the corresponding ratio
    undefined; it is reported as NaN rather than raised.  The mass
    denominator counts as vanishing when it is zero relative to the
    Cauchy-Schwarz bound |int u| <= ||u|| sqrt(b - a).
    """
    space = u_h.space
    rule = _measurement_rule(space)
    mesh = space.mesh
    half = 0.5 * mesh.cell_widths
    phi = orthonormal_legendre(space.degree, rule.nodes)

    def integrals(field):
        vals = field.coeffs @ phi.T
        mass = float(np.sum(half * (vals @ rule.weights)))
        norm = float(np.sqrt(np.sum(half * ((vals * vals) @ rule.weights))))
        return mass, norm

    mass, norm = integrals(u_h)
    mass0, norm0 = integrals(u0_field)
    mass_floor = 1e-14 * norm0 * np.sqrt(mesh.b - mesh.a)
    c1 = mass / mass0 if abs(mass0) > mass_floor else float("nan")
    c2 = norm / norm0 if norm0 > 0.0 else float("nan")
    return ConservedQuantities(c1, c2)


def convergence_rate(errors, Ns):
    """Pairwise observed rates R = ln(E1/E2) / ln(N2/N1) between runs."""
    errors = np.asarray(errors, dtype=float)
    Ns = np.asarray(Ns, dtype=float)
    if errors.shape != Ns.shape or errors.ndim != 1 or errors.size < 2:
        raise ValueError("need matching 1-D arrays with at least two entries")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    if np.any(np.diff(Ns) <= 0):
        raise ValueError("element counts must be increasing")
    return (np.log(errors[:-1]) - np.log(errors[1:])) / (np.log(Ns[1:]) - np.log(Ns[:-1]))
