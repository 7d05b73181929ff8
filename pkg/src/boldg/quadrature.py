"""Gauss-Legendre quadrature rules on the reference interval [-1, 1].

Nodes are the roots of the degree-n Legendre polynomial, located by Newton
iteration from the Chebyshev asymptotic guess; weights follow from the
standard derivative formula w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2).  Rules are
cached by point count after first construction.
"""

import threading
from dataclasses import dataclass

import numpy as np

MAX_POINTS = 64

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on [-1, 1]: ``sum(weights * f(nodes)) ~ int f``."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray


def legendre_with_deriv(n, x):
    """Evaluate P_n and P_n' at x via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    dp_prev = np.zeros_like(x)
    dp = np.ones_like(x)
    for m in range(1, n):
        p_next = ((2 * m + 1) * x * p - m * p_prev) / (m + 1)
        dp_next = dp_prev + (2 * m + 1) * p
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def _build_rule(n):
    if n == 1:
        return QuadRule(1, np.zeros(1), np.full(1, 2.0))

    # Solve for the positive half only and mirror: the recurrence maps -x to
    # exactly-negated values in IEEE arithmetic, so mirrored nodes carry the
    # same converged residual and the rule is symmetric bit-for-bit.
    half = n // 2
    i = np.arange(half)
    x = np.cos(np.pi * (4 * i + 3) / (4 * n + 2))  # Chebyshev seed, decreasing
    for _ in range(_NEWTON_MAX_ITER):
        p, dp = legendre_with_deriv(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break

    _, dp = legendre_with_deriv(n, x)
    wh = 2.0 / ((1.0 - x * x) * dp * dp)

    nodes = np.empty(n)
    weights = np.empty(n)
    nodes[n - half :] = x[::-1]
    weights[n - half :] = wh[::-1]
    nodes[:half] = -x
    weights[:half] = wh
    if n % 2 == 1:
        nodes[half] = 0.0
        p0, dp0 = legendre_with_deriv(n, np.zeros(1))
        weights[half] = 2.0 / (dp0[0] * dp0[0])

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(n, nodes, weights)


_cache: dict[int, QuadRule] = {}
_cache_lock = threading.Lock()


def gauss_legendre(n):
    """Return the cached n-point Gauss-Legendre rule on [-1, 1].

    Raises ValueError unless 1 <= n <= 64.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"point count must be an integer, got {n!r}")
    if n < 1 or n > MAX_POINTS:
        raise ValueError(f"point count must be in 1..{MAX_POINTS}, got {n}")
    rule = _cache.get(n)
    if rule is None:
        rule = _build_rule(n)
        with _cache_lock:
            rule = _cache.setdefault(n, rule)
    return rule
