"""Uniform 1D meshes and the elementwise orthonormal Legendre (modal) basis.

The discrete space on each cell is spanned by Legendre polynomials scaled to
be orthonormal on the reference cell [-1, 1]:

    phi_m(xi) = sqrt(m + 1/2) * P_m(xi),    int_{-1}^{1} phi_m phi_l = delta_ml.

With this basis the physical mass matrix is diagonal, (h_i / 2) * Identity
per cell, so mass inversions are exact scalings.
"""

from dataclasses import dataclass, field

import numpy as np

from .quadrature import gauss_legendre

_REF_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Partition of [a, b] into N cells."""

    a: float
    b: float
    N: int
    cell_edges: np.ndarray
    cell_widths: np.ndarray

    @property
    def cell_centers(self):
        return 0.5 * (self.cell_edges[:-1] + self.cell_edges[1:])

    @property
    def h_max(self):
        return float(np.max(self.cell_widths))


def build_mesh(a, b, N):
    """Uniform partition of [a, b] into N cells."""
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if N < 1:
        raise ValueError(f"need at least one cell, got N={N}")
    edges = np.linspace(a, b, N + 1)
    edges.setflags(write=False)
    widths = np.diff(edges)
    widths.setflags(write=False)
    return Mesh(float(a), float(b), int(N), edges, widths)


def orthonormal_legendre(degree, xi, deriv=False):
    """Values (and optionally xi-derivatives) of phi_0..phi_degree at xi.

    Returns an array of shape xi.shape + (degree + 1,), or a pair of such
    arrays when deriv is True.
    """
    xi = np.asarray(xi, dtype=float)
    vals = np.empty(xi.shape + (degree + 1,))
    vals[..., 0] = 1.0
    if degree >= 1:
        vals[..., 1] = xi
    for m in range(1, degree):
        vals[..., m + 1] = ((2 * m + 1) * xi * vals[..., m] - m * vals[..., m - 1]) / (m + 1)
    scale = np.sqrt(np.arange(degree + 1) + 0.5)
    if not deriv:
        return vals * scale

    dvals = np.zeros_like(vals)
    if degree >= 1:
        dvals[..., 1] = 1.0
    for m in range(1, degree):
        # P'_{m+1} = P'_{m-1} + (2m+1) P_m  (vals still unscaled here)
        dvals[..., m + 1] = dvals[..., m - 1] + (2 * m + 1) * vals[..., m]
    return vals * scale, dvals * scale


class DGSpace:
    """Piecewise polynomial space of degree k on a mesh, with quadrature tables.

    quad_order is the number of Gauss points used for volume integrals; it
    must be at least degree + 1 so that mass and stiffness integrals (degree
    <= 2k) are exact.
    """

    def __init__(self, mesh, degree, quad_order=None):
        if degree < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {degree}")
        if quad_order is None:
            quad_order = degree + 2
        if quad_order < degree + 1:
            raise ValueError(
                f"quad_order must be >= degree + 1 = {degree + 1}, got {quad_order}"
            )
        self.mesh = mesh
        self.degree = int(degree)
        self.quad_order = int(quad_order)

        rule = gauss_legendre(self.quad_order)
        self.volume_rule = rule
        vals, dvals = orthonormal_legendre(self.degree, rule.nodes, deriv=True)
        self.basis_at_quad = vals          # (nq, k+1)
        self.dbasis_at_quad = dvals        # (nq, k+1), derivative w.r.t. xi
        self.basis_left = orthonormal_legendre(self.degree, -1.0)
        self.basis_right = orthonormal_legendre(self.degree, 1.0)
        # Reference stiffness S[n, m] = int_{-1}^{1} phi_n'(xi) phi_m(xi) dxi,
        # exact since the integrand has degree <= 2k - 1 <= 2*quad_order - 1.
        self.stiffness = np.einsum("q,qn,qm->nm", rule.weights, dvals, vals)

    @property
    def n_modes(self):
        return self.degree + 1

    @property
    def n_dofs(self):
        return self.mesh.N * (self.degree + 1)

    def quad_points(self):
        """Physical volume quadrature points, shape (N, nq)."""
        centers = self.mesh.cell_centers
        half = 0.5 * self.mesh.cell_widths
        return centers[:, None] + half[:, None] * self.volume_rule.nodes[None, :]

    def mass_diag(self):
        """Diagonal of the global mass matrix, shape (N * (k+1),)."""
        return np.repeat(0.5 * self.mesh.cell_widths, self.n_modes)

    def zero_field(self):
        return FieldCoeffs(self, np.zeros((self.mesh.N, self.n_modes)))


def eval_basis(space, ref_x, max_deriv=0):
    """Orthonormal Legendre basis values at a reference coordinate.

    With max_deriv == 1 returns (values, derivatives); both arrays have
    k + 1 entries per evaluation point.
    """
    ref = np.asarray(ref_x, dtype=float)
    if np.any(np.abs(ref) > 1.0 + _REF_TOL):
        raise ValueError(f"reference coordinate outside [-1, 1]: {ref_x}")
    if max_deriv not in (0, 1):
        raise ValueError(f"max_deriv must be 0 or 1, got {max_deriv}")
    if max_deriv == 0:
        return orthonormal_legendre(space.degree, ref)
    return orthonormal_legendre(space.degree, ref, deriv=True)


@dataclass
class FieldCoeffs:
    """A member of the DG space: modal coefficients of shape (N, k+1)."""

    space: DGSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (self.space.mesh.N, self.space.n_modes)
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coefficient array has shape {self.coeffs.shape}, expected {expected}"
            )

    def copy(self):
        return FieldCoeffs(self.space, self.coeffs.copy())

    @property
    def flat(self):
        return self.coeffs.reshape(-1)


def field_inner(u, v):
    """L2(a, b) inner product of two fields (diagonal mass matrix)."""
    if u.space is not v.space:
        raise ValueError("fields live in different spaces")
    h = u.space.mesh.cell_widths
    return float(np.sum(0.5 * h[:, None] * u.coeffs * v.coeffs))


def field_norm(u):
    """L2(a, b) norm of a field."""
    return float(np.sqrt(max(field_inner(u, u), 0.0)))


def eval_field(u, x, side="+"):
    """Evaluate a DG field at physical points.

    At a cell edge the field is two-valued; side "-" takes the limit from
    the left cell and side "+" from the right cell.  At the domain endpoints
    the only existing one-sided limit is returned regardless of side.
    """
    if side not in ("-", "+"):
        raise ValueError(f"side must be '-' or '+', got {side!r}")
    mesh = u.space.mesh
    xs = np.asarray(x, dtype=float)
    if np.any(xs < mesh.a) or np.any(xs > mesh.b):
        raise ValueError(f"evaluation point outside [{mesh.a}, {mesh.b}]")
    search_side = "left" if side == "-" else "right"
    idx = np.searchsorted(mesh.cell_edges, xs, side=search_side) - 1
    idx = np.clip(idx, 0, mesh.N - 1)
    centers = mesh.cell_centers[idx]
    half = 0.5 * mesh.cell_widths[idx]
    xi = np.clip((xs - centers) / half, -1.0, 1.0)
    phi = orthonormal_legendre(u.space.degree, xi)
    out = np.sum(u.coeffs[idx] * phi, axis=-1)
    return float(out) if np.isscalar(x) else out
