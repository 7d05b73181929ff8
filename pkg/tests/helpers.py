"""Shared oracles for the test suite.

These deliberately avoid the package's own quadrature/assembly paths so
they can serve as independent references.
"""

import numpy as np


def pv_hilbert_oracle(u, a, b, xs, npts=4096):
    """Brute-force principal-value Hilbert transform on [a, b].

    For each target x, the singular part is integrated over the largest
    symmetric window around x as int_0^R [u(x-d) - u(x+d)] / d dd (the
    pairing cancels the singularity; the integrand tends to -2u'(x)), and
    the asymmetric leftover is integrated with a plain composite midpoint
    rule.  npts points are used for each piece.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.empty_like(xs)
    for i, x in enumerate(xs):
        R = min(x - a, b - x)
        total = 0.0
        if R > 0:
            d = (np.arange(npts) + 0.5) * (R / npts)
            total += np.sum((u(x - d) - u(x + d)) / d) * (R / npts)
        if x - a > b - x:
            lo, hi = a, x - R
        else:
            lo, hi = x + R, b
        if hi > lo:
            y = lo + (np.arange(npts) + 0.5) * ((hi - lo) / npts)
            total += np.sum(u(y) / (x - y)) * ((hi - lo) / npts)
        out[i] = total / np.pi
    return out


def hilbert_fft(vals):
    """Periodic Hilbert transform of uniformly sampled values (symbol -i sgn k)."""
    n = len(vals)
    spec = np.fft.fft(vals)
    k = np.fft.fftfreq(n, d=1.0 / n)
    return np.real(np.fft.ifft(-1j * np.sign(k) * spec))


def fit_rate(errors, Ns):
    """Least-squares slope of log(error) against log(1/N)."""
    return float(np.polyfit(np.log(1.0 / np.asarray(Ns, dtype=float)),
                            np.log(np.asarray(errors, dtype=float)), 1)[0])
