"""Discrete Hilbert transform operator on the truncated domain [a, b].

The operator realizes the weak identity (p, w) = (H q, w) for fields with
(approximately) compact support in [a, b], where H is the principal-value
convolution with kernel 1/(pi x).  The moment matrix is

    K[(i,l),(j,m)] = int_{I_i} int_{I_j} phi_l(x) phi_m(y) / (pi (x - y)) dy dx

over every cell pair (I_i, I_j).  Well-separated pairs are integrated with
two *distinct* Gauss rules for the outer (x) and inner (y) loops; distinct
point counts guarantee x_a != y_b at every point pair.  Cell pairs within
a small separation band around the singular diagonal are integrated in
closed form instead: fixed-order product quadrature of the self-similar
1/(x - y) kernel carries an h-independent relative error there, which
would floor the convergence of the whole scheme.  On a uniform mesh the
exact block depends only on the cell separation,

    block(i, j) = h/(2 pi) * kref(sep),
    kref[l, m]  = 2 sqrt(l+1/2) sqrt(m+1/2) int P_l(xi) Q_m(xi - 2 sep) dxi,

with Q_m the Legendre functions of the second kind (Neumann's formula for
the inner principal-value integral), so exactness costs a handful of 1-D
quadratures per degree.

Because the continuous operator is skew-adjoint, by default the raw matrix
is antisymmetrized, K <- (K - K^T)/2; raw assembly breaks skewness at
rounding-to-quadrature level, which would leak energy in long runs.
"""

import struct
from functools import lru_cache

import numpy as np
import scipy.integrate

from .mesh import FieldCoeffs, orthonormal_legendre
from .quadrature import gauss_legendre

_CHUNK_CELLS = 64
_EXACT_BAND = 2

DUMP_MAGIC = b"HILB"


def legendre_q(m, w):
    """Legendre functions of the second kind Q_0..Q_m at real w (|w| != 1).

    Q_m(w) = (1/2) PV int_{-1}^{1} P_m(y) / (w - y) dy  (Neumann's formula).
    """
    w = np.asarray(w, dtype=float)
    out = np.empty((m + 1,) + w.shape)
    q_prev = 0.5 * np.log(np.abs((w + 1.0) / (w - 1.0)))
    out[0] = q_prev
    if m == 0:
        return out
    q = w * q_prev - 1.0
    out[1] = q
    for j in range(1, m):
        q_next = ((2 * j + 1) * w * q - j * q_prev) / (j + 1)
        q_prev, q = q, q_next
        out[j + 1] = q
    return out


@lru_cache(maxsize=None)
def _kref(degree, sep):
    """Exact reference block for cell separation sep (in cells).

    kref[l, m] = PV iint phi_l(xi) phi_m(eta) / (xi - eta - 2 sep) deta dxi
    on [-1, 1]^2, evaluated as an outer 1-D adaptive quadrature of the
    analytically known inner integral 2 Q_m(xi - 2 sep).  The integrand has
    logarithmic endpoint singularities for |sep| <= 1, which the adaptive
    rule resolves to ~1e-13.
    """
    s = 2.0 * sep
    scale = np.sqrt(np.arange(degree + 1) + 0.5)
    block = np.empty((degree + 1, degree + 1))
    for l in range(degree + 1):
        for m in range(degree + 1):
            def integrand(xi, l=l, m=m):
                p = orthonormal_legendre(l, xi)[..., l] / scale[l]
                q = legendre_q(m, xi - s)[m]
                return p * 2.0 * q

            val, _ = scipy.integrate.quad(
                integrand, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200
            )
            block[l, m] = scale[l] * scale[m] * val
    block.setflags(write=False)
    return block


KERNELS = ("line", "periodic")


class HilbertOperator:
    """Assembled moment matrix for the discrete Hilbert transform."""

    def __init__(self, space, K, skewed, outer_n, inner_n, kernel="line"):
        self.space = space
        self.K = K
        self.skewed = bool(skewed)
        self.outer_n = int(outer_n)
        self.inner_n = int(inner_n)
        self.kernel = kernel


def assemble_hilbert(space, outer_rule=None, inner_rule=None, skew=True, kernel="line",
                     exact_band=_EXACT_BAND):
    """Assemble the dense Hilbert moment matrix for a DG space.

    outer_rule / inner_rule default to 7- and 8-point Gauss rules.  The two
    rules must have different point counts so the kernel is never evaluated
    on the diagonal x == y.

    kernel "line" integrates 1/(pi (x - y)) over the truncated domain and
    suits compactly supported solutions.  kernel "periodic" sums the line
    kernel over all periodic images of [a, b], giving the cotangent kernel
    cot(pi (x - y) / P) / P with P = b - a; this is the transform a
    spatially periodic solution actually satisfies.

    Cell pairs within exact_band cells of a kernel singularity (including
    the periodic wrap-around) are integrated in closed form; set
    exact_band=0 to fall back to pure product quadrature everywhere.
    """
    if outer_rule is None:
        outer_rule = gauss_legendre(7)
    if inner_rule is None:
        inner_rule = gauss_legendre(8)
    if outer_rule.n == inner_rule.n:
        raise ValueError(
            "outer and inner quadrature rules must differ "
            f"(both have {outer_rule.n} points); coinciding nodes would hit "
            "the kernel singularity"
        )
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    mesh = space.mesh
    if np.any(mesh.cell_widths <= 0):
        raise ValueError("mesh has degenerate cells")

    k1 = space.n_modes
    n = space.n_dofs
    N = mesh.N
    centers = mesh.cell_centers
    half = 0.5 * mesh.cell_widths

    X = centers[:, None] + half[:, None] * outer_rule.nodes[None, :]   # (N, no)
    Y = centers[:, None] + half[:, None] * inner_rule.nodes[None, :]   # (N, ni)
    # Weighted basis tables; per-cell h/2 Jacobians are applied afterwards.
    Bx = orthonormal_legendre(space.degree, outer_rule.nodes) * outer_rule.weights[:, None]
    By = orthonormal_legendre(space.degree, inner_rule.nodes) * inner_rule.weights[:, None]

    period = mesh.b - mesh.a
    K = np.empty((n, n))
    for start in range(0, N, _CHUNK_CELLS):
        stop = min(start + _CHUNK_CELLS, N)
        diff = X[start:stop, :, None, None] - Y[None, None, :, :]
        if kernel == "line":
            G = 1.0 / (np.pi * diff)
        else:
            G = 1.0 / (period * np.tan(np.pi * diff / period))
        block = np.einsum("al,iajb->iljb", Bx, G, optimize=True)
        block = np.einsum("iljb,bm->iljm", block, By, optimize=True)
        block *= half[start:stop, None, None, None] * half[None, None, :, None]
        K[start * k1 : stop * k1, :] = block.reshape((stop - start) * k1, n)

    if exact_band > 0:
        # exact closed forms assume translation invariance of the blocks
        h = float(mesh.cell_widths[0])
        pref = h / (2.0 * np.pi)
        if kernel == "line":
            for off in range(-exact_band, exact_band + 1):
                i_lo, i_hi = max(0, -off), min(N, N - off)
                if i_hi <= i_lo:
                    continue
                exact = pref * _kref(space.degree, off)
                for i in range(i_lo, i_hi):
                    j = i + off
                    K[i * k1 : (i + 1) * k1, j * k1 : (j + 1) * k1] = exact
        else:
            seen = set()
            for off in range(-exact_band, exact_band + 1):
                if off % N in seen:
                    continue
                seen.add(off % N)
                # all periodic images of this offset that land in the band
                sigmas = [s for s in range(-exact_band, exact_band + 1) if (s - off) % N == 0]
                exact = pref * sum(_kref(space.degree, s) for s in sigmas)
                for i in range(N):
                    j = (i + off) % N
                    d = X[i][:, None] - Y[j][None, :]
                    # smooth remainder: full cotangent kernel minus the
                    # singular images handled in closed form
                    R = 1.0 / (period * np.tan(np.pi * d / period))
                    for s in sigmas:
                        shift = ((s - (j - i)) // N) * period
                        R -= 1.0 / (np.pi * (d - shift))
                    block = (half[i] * half[j]) * (Bx.T @ R @ By)
                    K[i * k1 : (i + 1) * k1, j * k1 : (j + 1) * k1] = exact + block

    if skew:
        K = 0.5 * (K - K.T)
    return HilbertOperator(space, K, skew, outer_rule.n, inner_rule.n, kernel)


def apply_hilbert(op, q):
    """Apply the discrete Hilbert transform to a field: p = M^{-1} K q."""
    if q.space is not op.space:
        raise ValueError("field does not belong to the operator's space")
    moments = op.K @ q.flat
    inv_mass = 2.0 / q.space.mesh.cell_widths
    coeffs = moments.reshape(q.coeffs.shape) * inv_mass[:, None]
    return FieldCoeffs(q.space, coeffs)


def save_hilbert(op, path):
    """Binary dump of the moment matrix for debugging.

    Layout: magic, then int64 header (N, k, flags), then the matrix
    row-major as 8-byte little-endian floats.  Flag bit 0 records whether
    the matrix was antisymmetrized.
    """
    flags = 1 if op.skewed else 0
    header = struct.pack("<4s3q", DUMP_MAGIC, op.space.mesh.N, op.space.degree, flags)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(op.K, dtype="<f8").tobytes())


def load_hilbert(path, space):
    """Read back a binary dump produced by save_hilbert."""
    header_size = struct.calcsize("<4s3q")
    with open(path, "rb") as fh:
        magic, N, degree, flags = struct.unpack("<4s3q", fh.read(header_size))
        if magic != DUMP_MAGIC:
            raise ValueError(f"{path}: not a Hilbert operator dump")
        if N != space.mesh.N or degree != space.degree:
            raise ValueError(
                f"{path}: dump is for N={N}, k={degree}, "
                f"space has N={space.mesh.N}, k={space.degree}"
            )
        n = space.n_dofs
        data = np.frombuffer(fh.read(n * n * 8), dtype="<f8").reshape(n, n)
    return HilbertOperator(space, data.copy(), flags & 1, 0, 0)
