"""Hermite polynomials, orthonormal Hermite functions and the Gauss transform."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, UsageError

HERMITE_N_MAX = 64


def hermite(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` by the three-term recurrence.

    ``H_0 = 1``, ``H_1 = 2x``, ``H_{k+1} = 2x H_k - 2k H_{k-1}``.
    """
    if not (isinstance(n, (int, np.integer)) and 0 <= n <= HERMITE_N_MAX):
        raise UsageError(f"hermite order must be an integer in [0, {HERMITE_N_MAX}], got {n!r}")
    x = np.asarray(x)
    h_prev = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return h_prev
    h = 2.0 * x * h_prev
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``phi_0 .. phi_{n_max}`` at ``x``.

    ``phi_n(x) = (sqrt(pi) 2**n n!)**(-1/2) exp(-x**2/2) H_n(x)``, evaluated by
    the normalised recurrence so that no intermediate overflows.

    Returns
    -------
    ndarray of shape ``(n_max + 1,) + x.shape``
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_norm(n: int) -> float:
    """``sqrt(sqrt(pi) 2**n n!)``, the factor linking ``H_n e^{-x^2/2}`` to ``phi_n``."""
    return math.sqrt(math.sqrt(math.pi) * 2.0 ** n * math.factorial(n))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _composite_gauss_legendre(f, lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return float(np.sum(weights * f(nodes)))


def gauss_transform(n: int, lam: float, a_scale: float, x: float, tol: float = 1e-12):
    """Both sides of the Gauss transform of a Hermite polynomial.

    ``lhs = int exp(-lam**2 (x - y)**2) H_n(a y) dy`` by composite
    Gauss-Legendre quadrature on ``|y - x| <= 10/lam`` (the neglected tail
    is below ``exp(-100)`` times a polynomial), refined until two successive
    panel counts agree to ``tol``;
    ``rhs = sqrt(pi) lam**-(n+1) (lam**2 - a**2)**(n/2) H_n(lam a x / sqrt(lam**2 - a**2))``.
    """
    if not lam ** 2 > a_scale ** 2:
        raise DomainError(f"need lam**2 > a**2 for the real branch, got lam={lam}, a={a_scale}")
    if not lam > 0:
        raise DomainError("lam must be positive")

    def integrand(y):
        return np.exp(-lam ** 2 * (x - y) ** 2) * hermite(n, a_scale * y)

    lo, hi = x - 10.0 / lam, x + 10.0 / lam
    panels = 4
    prev = _composite_gauss_legendre(integrand, lo, hi, panels)
    while True:
        panels *= 2
        cur = _composite_gauss_legendre(integrand, lo, hi, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)) or panels >= 1024:
            break
        prev = cur
    s = math.sqrt(lam ** 2 - a_scale ** 2)
    rhs = math.sqrt(math.pi) / lam ** (n + 1) * s ** n * float(hermite(n, lam * a_scale * x / s))
    return cur, rhs
