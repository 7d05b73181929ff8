"""Projections of scalar functions into the DG space.

Two projections are provided: the standard elementwise L2 projection, and a
Gauss-Radau-type projection that matches k moments per cell plus the exact
value at each cell's right endpoint.  The latter is used for initial data.
"""

import numpy as np

from .mesh import FieldCoeffs


def _evaluate(g, x):
    """g at an array of points, tolerating scalar-only callables."""
    try:
        vals = np.asarray(g(x), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != x.shape:
        vals = np.reshape([float(g(xi)) for xi in x.reshape(-1)], x.shape)
    return vals


def _sample_on_cells(g, space):
    """g at the volume quadrature points of every cell, shape (N, nq)."""
    return _evaluate(g, space.quad_points())


def l2_project(g, space):
    """Elementwise L2 projection of g onto the DG space.

    Per cell the result satisfies int (Pg - g) y = 0 for all y of degree
    <= k, with integrals evaluated by the space's volume quadrature.
    """
    gq = _sample_on_cells(g, space)
    w = space.volume_rule.weights
    # c_{i,m} = sum_q w_q g(x_{i,q}) phi_m(xi_q); the h/2 Jacobian cancels
    # against the inverse mass diagonal.
    coeffs = np.einsum("iq,q,qm->im", gq, w, space.basis_at_quad)
    return FieldCoeffs(space, coeffs)


def radau_project(g, space):
    """Right-endpoint-matching projection of g onto the DG space.

    Per cell: k moment conditions against polynomials of degree <= k - 1,
    plus exact interpolation of g at the cell's right endpoint.  Assembled
    as one (k+1) x (k+1) solve shared by all cells (uniform basis).
    """
    k = space.degree
    if k < 1:
        raise ValueError("radau projection needs polynomial degree >= 1")
    gq = _sample_on_cells(g, space)
    w = space.volume_rule.weights
    moments = np.einsum("iq,q,qm->im", gq, w, space.basis_at_quad)  # (N, k+1)

    edges = space.mesh.cell_edges[1:]
    g_right = _evaluate(g, edges)

    # Rows 0..k-1: moment conditions (identity in the orthonormal basis);
    # row k: right-endpoint interpolation.
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = np.eye(k)
    A[k, :] = space.basis_right
    rhs = np.empty((k + 1, space.mesh.N))
    rhs[:k, :] = moments[:, :k].T
    rhs[k, :] = g_right
    coeffs = np.linalg.solve(A, rhs).T
    return FieldCoeffs(space, coeffs)
