"""Linear and quadratic dynamical invariants and the Ermakov superpositions.

An invariant ``O(t)`` maps solutions of ``i psi_t = H psi`` to solutions of
the same equation, so ``<chi(t), O(t) psi(t)>`` is constant whenever
``chi`` and ``psi`` both solve it.  Linear invariants are
``A p + B x + C`` with ``A = mu`` a characteristic solution; quadratic ones
are ``lambda [(kappa p + g x)**2 + (C0/kappa**2) x**2]`` with ``kappa`` an
auxiliary (Ermakov) solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientSet, lambda_factor
from .errors import DomainError, ModeError, NumericalError, UsageError
from .grid_ops import LadderData, WaveFunction, apply_linear_invariant, apply_quadratic_invariant
from .ode_engine import (CharacteristicSolution, ErmakovSolution, _num_deriv, kappa_from_mu,
                         pair_constant, wronskian)

INDEPENDENCE_TOL = 1e-10


def _sweep(*sols, t_end):
    """Dense nodes of all sources plus a uniform sweep, clipped to ``[0, t_end]``."""
    ts = np.concatenate([np.asarray(s.nodes) for s in sols] + [np.linspace(0.0, t_end, 401)])
    return np.unique(ts[ts <= t_end])


# ---------------------------------------------------------------------------
# linear invariants


@dataclass(frozen=True, eq=False)
class LinearInvariant:
    """``P = A p + B x + C`` with ``A = mu``, ``B = (2 c mu - mu')/(2a)``, ``C = C0 lambda``."""

    coeffs: CoefficientSet
    source_mu: CharacteristicSolution
    C0_const: float = 0.0

    def coefficients(self, t):
        mu, mup = self.source_mu.pair(t)
        a, c = self.coeffs.a(t), self.coeffs.c(t)
        lam = self.source_mu.lam(t)
        return mu, (2.0 * c * mu - mup) / (2.0 * a), self.C0_const * lam

    def A(self, t):
        return self.coefficients(t)[0]

    def B(self, t):
        return self.coefficients(t)[1]

    def C(self, t):
        return self.coefficients(t)[2]

    def apply(self, wf: WaveFunction, t: float) -> WaveFunction:
        A, B, C = (float(v) for v in self.coefficients(t))
        return apply_linear_invariant(A, B, C, wf)

    def _Bprime(self, t):
        # uses mu'' from the equation
        mu, mup = self.source_mu.pair(t)
        mupp = self.source_mu.mupp(t)
        a, c = self.coeffs.a(t), self.coeffs.c(t)
        da, dc = self.coeffs.da(t), self.coeffs.dc(t)
        num = 2.0 * c * mu - mup
        dnum = 2.0 * dc * mu + 2.0 * c * mup - mupp
        return dnum / (2.0 * a) - num * da / (2.0 * a * a)

    def residuals(self, t: float):
        """Residuals of ``A' = 2cA - 2aB``, ``B' = 2bA - 2dB``, ``C' = (c - d) C``.

        Derivatives come from differentiating the dense solution, so the
        check exercises the integrator rather than algebra.  Each residual
        is divided by ``1 + max |coefficient|`` at ``t``.
        """
        end = self.source_mu.t_end
        A, B, C = self.coefficients(t)
        dA = _num_deriv(self.A, t, end)
        dB = _num_deriv(self.B, t, end)
        dC = _num_deriv(self.C, t, end)
        a, b, c, d = self.coeffs.values(t)
        scale = 1.0 + max(abs(A), abs(B), abs(C))
        return (abs(dA - 2 * c * A + 2 * a * B) / scale,
                abs(dB - 2 * b * A + 2 * d * B) / scale,
                abs(dC - (c - d) * C) / scale)

    def second_order_residuals(self, t: float):
        """Residuals of the decoupled second-order equations for ``A`` and ``B``.

        ``A`` obeys the characteristic equation.  ``B`` obeys
        ``B'' - (b'/b + 2c - 2d) B' + 4 (ab - cd - (d b'/b - d')/2) B = 0``,
        which needs ``b != 0``; ``None`` is returned for ``B`` otherwise.
        """
        rA = float(self.source_mu.residual(t))
        a, b, c, d = self.coeffs.values(t)
        if b == 0:
            return rA, None
        _, db, _, dd = self.coeffs.derivatives(t)
        B = self.B(t)
        dB = self._Bprime(t)
        ddB = _num_deriv(self._Bprime, t, self.source_mu.t_end)
        lhs = ddB - (db / b + 2 * c - 2 * d) * dB + 4.0 * (a * b - c * d - 0.5 * (d * db / b - dd)) * B
        return rA, float(abs(lhs) / (1.0 + abs(ddB)))


def linear_from_mu(coeffs: CoefficientSet, mu_solution: CharacteristicSolution,
                   C0_const: float = 0.0) -> LinearInvariant:
    if mu_solution.coeffs != coeffs:
        raise UsageError("characteristic solution belongs to a different coefficient set")
    return LinearInvariant(coeffs, mu_solution, float(C0_const))


@dataclass(frozen=True, eq=False)
class ProductInvariant:
    """``lambda**-1 P1 P2`` for two linear invariants of the same Hamiltonian."""

    first: LinearInvariant
    second: LinearInvariant

    def apply(self, wf: WaveFunction, t: float) -> WaveFunction:
        lam = float(self.first.source_mu.lam(t))
        return self.first.apply(self.second.apply(wf, t), t) / lam


@dataclass(frozen=True, eq=False)
class SimplestInvariant:
    """``lambda(t) Id``."""

    coeffs: CoefficientSet

    def apply(self, wf: WaveFunction, t: float) -> WaveFunction:
        return wf * float(lambda_factor(self.coeffs, t))


# ---------------------------------------------------------------------------
# quadratic invariants


@dataclass(frozen=True, eq=False)
class QuadraticInvariant:
    """``E = A p**2 + B x**2 + C (p x + x p)`` built from an auxiliary solution.

    ``A = kappa**2 lambda``, ``B = (h**2 + C0/kappa**2) lambda`` and
    ``C = -kappa h lambda`` with ``h = (kappa' - (c + d) kappa)/(2a)``.
    """

    coeffs: CoefficientSet
    kappa_source: ErmakovSolution

    @property
    def C0(self) -> float:
        return self.kappa_source.C0

    def lam(self, t):
        return lambda_factor(self.coeffs, t)

    def _h(self, t):
        k, kp = self.kappa_source.pair(t)
        a, _, c, d = self.coeffs.values(t)
        return k, (kp - (c + d) * k) / (2.0 * a)

    def coefficients(self, t):
        k, h = self._h(t)
        lam = self.lam(t)
        return k * k * lam, (h * h + self.C0 / (k * k)) * lam, -k * h * lam

    def Aq(self, t):
        return self.coefficients(t)[0]

    def Bq(self, t):
        return self.coefficients(t)[1]

    def Cq(self, t):
        return self.coefficients(t)[2]

    def residuals(self, t: float):
        """Residuals of the three first-order equations for ``(A, B, C)``.

        ``A' + 4aC - (3c + d) A``, ``B' - 4bC + (c + 3d) B`` and
        ``C' + 2(aB - bA) - (c - d) C``, scaled by ``1 + max |coefficient|``.
        """
        end = self.kappa_source.t_end
        A, B, C = self.coefficients(t)
        dA = _num_deriv(self.Aq, t, end)
        dB = _num_deriv(self.Bq, t, end)
        dC = _num_deriv(self.Cq, t, end)
        a, b, c, d = self.coeffs.values(t)
        scale = 1.0 + max(abs(A), abs(B), abs(C))
        return (abs(dA + 4 * a * C - (3 * c + d) * A) / scale,
                abs(dB - 4 * b * C + (c + 3 * d) * B) / scale,
                abs(dC + 2 * (a * B - b * A) - (c - d) * C) / scale)

    def ladder_data(self, t: float) -> LadderData:
        """Data for the oscillator form ``omega (a a^+ + a^+ a)/2``; needs ``C0 > 0``."""
        if not self.C0 > 0:
            raise ModeError(f"no ladder form for C0 = {self.C0} (repulsive or degenerate case)")
        return self._ladder_data(t, 2.0 * math.sqrt(self.C0))

    def _ladder_data(self, t, omega0):
        k, kp = (float(v) for v in self.kappa_source.pair(t))
        a, _, c, d = (float(v) for v in self.coeffs.values(t))
        return LadderData(k, kp, c + d, a, omega0)

    def omega(self, t):
        return 2.0 * math.sqrt(self.C0) * self.lam(t)

    def apply(self, wf: WaveFunction, t: float) -> WaveFunction:
        ld = self._ladder_data(t, 2.0 * math.sqrt(max(self.C0, 0.0)))
        return apply_quadratic_invariant(ld, float(self.lam(t)), self.C0, wf)


def quadratic_from_kappa(coeffs: CoefficientSet, k_solution: ErmakovSolution) -> QuadraticInvariant:
    if k_solution.coeffs != coeffs:
        raise UsageError("auxiliary solution belongs to a different coefficient set")
    ts = _sweep(k_solution, t_end=k_solution.t_end)
    if np.any(np.asarray(k_solution.kappa(ts)) <= 0):
        raise DomainError("kappa must stay positive for a quadratic invariant")
    return QuadraticInvariant(coeffs, k_solution)


# ---------------------------------------------------------------------------
# superpositions


def _combined(coeffs, C0, t_end, nodes, square_fn, origin):
    """Wrap ``t -> (kappa**2, kappa kappa')`` as an :class:`ErmakovSolution`."""

    def _eval(t):
        k2, kkp = square_fn(t)
        k = np.sqrt(k2)
        return k, kkp / k

    return ErmakovSolution(coeffs, float(C0), t_end, nodes, _eval, origin=origin)


def _check_radicand(square_fn, ts, what):
    k2 = np.asarray(square_fn(ts)[0])
    bad = np.flatnonzero(~(k2 > 0))
    if bad.size:
        raise DomainError(f"{what}: kappa**2 is not positive at t = {ts[bad[0]]:.17g}")


def _check_independent(k1, k2):
    x1, xp1 = (float(v) for v in k1.pair(0.0))
    x2, xp2 = (float(v) for v in k2.pair(0.0))
    W = x1 * xp2 - xp1 * x2
    if not abs(W) > INDEPENDENCE_TOL * (abs(x1 * xp2) + abs(xp1 * x2)):
        raise UsageError("solutions are linearly dependent (Wronskian vanishes at t = 0)")
    return W


def pinney(coeffs: CoefficientSet, k1: ErmakovSolution, k2: ErmakovSolution,
           C1: float, C2: float, C3: float) -> ErmakovSolution:
    """``kappa = sqrt(C1 k1**2 + C2 k2**2 + 2 C3 k1 k2)`` from two homogeneous solutions.

    The constant is ``C0 = (C1 C2 - C3**2) (W/2a)**2`` with ``W/2a`` taken at
    ``t = 0``.
    """
    for k in (k1, k2):
        if k.coeffs != coeffs:
            raise UsageError("solutions belong to a different coefficient set")
        if k.C0 != 0.0:
            raise UsageError("pinney needs homogeneous solutions (C0 = 0)")
    W = _check_independent(k1, k2)
    C0 = (C1 * C2 - C3 ** 2) * (W / (2.0 * float(coeffs.a(0.0)))) ** 2
    t_end = min(k1.t_end, k2.t_end)

    def square(t):
        x1, xp1 = k1.pair(t)
        x2, xp2 = k2.pair(t)
        k2_ = C1 * x1 * x1 + C2 * x2 * x2 + 2.0 * C3 * x1 * x2
        kkp = C1 * x1 * xp1 + C2 * x2 * xp2 + C3 * (xp1 * x2 + x1 * xp2)
        return k2_, kkp

    ts = _sweep(k1, k2, t_end=t_end)
    _check_radicand(square, ts, "pinney")
    return _combined(coeffs, C0, t_end, ts, square, "pinney")


def decompose_quadratic(coeffs: CoefficientSet, mu1: CharacteristicSolution, mu2: CharacteristicSolution,
                        C1: float, C2: float, C3: float) -> ErmakovSolution:
    """Auxiliary solution behind ``C1 P1**2 + C2 P2**2 + C3 (P1 P2 + P2 P1)``.

    ``kappa**2 = (C1 mu1**2 + C2 mu2**2 + 2 C3 mu1 mu2) exp(-2 int (c - d))``;
    the result is built by :func:`pinney` on ``kappa_i = mu_i / lambda`` and
    checked against this formula on the dense nodes.
    """
    out = pinney(coeffs, kappa_from_mu(mu1), kappa_from_mu(mu2), C1, C2, C3)
    ts = out.nodes
    m1, m2 = mu1.mu(ts), mu2.mu(ts)
    direct = (C1 * m1 * m1 + C2 * m2 * m2 + 2.0 * C3 * m1 * m2) * np.exp(-2.0 * mu1.quad_cd(ts))
    k2 = out.kappa(ts) ** 2
    err = float(np.max(np.abs(k2 - direct) / np.abs(direct)))
    if err > 1e-10:
        raise NumericalError(f"decomposition disagrees with the Pinney form (relative {err:.2e})")
    return out


def general_superposition(coeffs: CoefficientSet, e1: ErmakovSolution, e2: ErmakovSolution,
                          D1: float, D2: float) -> ErmakovSolution:
    """``kappa**2 = D1 k1**2 + D2 k2**2`` for two auxiliary solutions with constants ``C01``, ``C02``.

    ``C0 = C01 D1**2 + C02 D2**2 + D1 D2 [(W/2a)**2 + C01 (k2/k1)**2 + C02 (k1/k2)**2]``
    with the bracket evaluated at ``t = 0``.
    """
    for e in (e1, e2):
        if e.coeffs != coeffs:
            raise UsageError("solutions belong to a different coefficient set")
    C0 = e1.C0 * D1 ** 2 + e2.C0 * D2 ** 2
    if D1 != 0 and D2 != 0:
        C0 += D1 * D2 * float(pair_constant(e1, e2, 0.0))
    t_end = min(e1.t_end, e2.t_end)

    def square(t):
        x1, xp1 = e1.pair(t)
        x2, xp2 = e2.pair(t)
        return D1 * x1 * x1 + D2 * x2 * x2, D1 * x1 * xp1 + D2 * x2 * xp2

    ts = _sweep(e1, e2, t_end=t_end)
    _check_radicand(square, ts, "general_superposition")
    return _combined(coeffs, C0, t_end, ts, square, "superposition")


def ermakov_invariant(coeffs: CoefficientSet, k_homog: ErmakovSolution, k: ErmakovSolution, t):
    """``C0 (k1/k)**2 + ((k1 k' - k1' k)/(2a))**2`` for homogeneous ``k1`` and auxiliary ``k``."""
    if k_homog.C0 != 0.0:
        raise UsageError("first solution must be homogeneous (C0 = 0)")
    if k_homog.coeffs != coeffs or k.coeffs != coeffs:
        raise UsageError("solutions belong to a different coefficient set")
    x1 = k_homog.kappa(t)
    x = k.kappa(t)
    W = wronskian(k_homog, k, t)
    return k.C0 * (x1 / x) ** 2 + (W / (2.0 * coeffs.a(t))) ** 2
