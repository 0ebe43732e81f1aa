"""Adaptive integration of the characteristic and auxiliary equations.

Both equations are integrated as augmented first-order systems.  The path
integrals ``int (c - d)``, ``int (c + d)`` and, on request, the singular
quadratures used by the kernel and phase formulas ride along as extra
state components, so a single step-size controller governs all of them.

The integrator is scipy's DOP853 (explicit embedded Runge-Kutta 8(5,3))
with its native 7th-order dense output.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .coeffs import CoefficientSet, tau_sigma
from .errors import DomainError, IntegrationError, SingularityError, UsageError

logger = logging.getLogger(__name__)

RTOL = 1e-12
ATOL = 1e-14
KAPPA_MIN = 1e-8
MUP_MIN = 1e-10
METHOD = "DOP853"


def _integrate(rhs, t_end, y0, events=None):
    sol = solve_ivp(rhs, (0.0, t_end), y0, method=METHOD, rtol=RTOL, atol=ATOL,
                    dense_output=True, events=events)
    if sol.status == -1:
        raise IntegrationError(f"integrator failed: {sol.message}", t=float(sol.t[-1]))
    return sol


def _first_event(sol):
    if sol.t_events is None:
        return None
    hits = [float(te[0]) for te in sol.t_events if len(te)]
    return min(hits) if hits else None


def _zero_event(index, offset=0.0):
    def event(t, y):
        return y[index] - offset
    event.terminal = True
    return event


def _stiffness(coeffs, t):
    """Bracketed coefficient of kappa in the auxiliary equation."""
    a, b, c, d = coeffs.values(t)
    da, _, dc, dd = coeffs.derivatives(t)
    s = c + d
    return 4.0 * a * b + (da / a - s) * s - dc - dd


# ---------------------------------------------------------------------------
# shared quadratures


@dataclass(frozen=True, eq=False)
class Quadratures:
    """Dense ``int_0^t (c - d)`` and ``int_0^t (c + d)`` over ``[0, t_max]``."""

    coeffs: CoefficientSet
    _sol: object = field(repr=False)

    def cd(self, t):
        self.coeffs.check_time(t)
        return self._sol.sol(t)[0]

    def cpd(self, t):
        self.coeffs.check_time(t)
        return self._sol.sol(t)[1]


@functools.lru_cache(maxsize=64)
def quadratures(coeffs: CoefficientSet) -> Quadratures:
    def rhs(t, y):
        c, d = coeffs.c(t), coeffs.d(t)
        return [c - d, c + d]

    return Quadratures(coeffs, _integrate(rhs, coeffs.t_max, [0.0, 0.0]))


# ---------------------------------------------------------------------------
# characteristic equation


@dataclass(frozen=True, eq=False)
class CharacteristicSolution:
    """Dense solution of ``mu'' - tau mu' + 4 sigma mu = 0`` plus quadratures.

    State layout: ``mu, mu', int(c-d), int(c+d)`` followed by the optional
    Green-function integral ``int a sigma lambda**2 / mu'**2`` and the
    optional kernel-phase integral ``int a lambda**2 / mu**2``.
    """

    coeffs: CoefficientSet
    mu0: float
    mup0: float
    t_end: float
    has_gamma0: bool
    has_phase: bool
    _sol: object = field(repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return np.asarray(self._sol.t)

    def _check(self, t):
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0.0) or np.any(tt > self.t_end * (1 + 1e-12)):
            raise DomainError(f"t = {t} outside the solved interval [0, {self.t_end}]")

    def state(self, t):
        self._check(t)
        return self._sol.sol(t)

    def mu(self, t):
        return self.state(t)[0]

    def mup(self, t):
        return self.state(t)[1]

    def pair(self, t):
        s = self.state(t)
        return s[0], s[1]

    def mupp(self, t):
        """Second derivative from the right-hand side of the equation."""
        mu, mup = self.pair(t)
        tau, sigma = tau_sigma(self.coeffs, t)
        return tau * mup - 4.0 * sigma * mu

    def quad_cd(self, t):
        return self.state(t)[2]

    def quad_cpd(self, t):
        return self.state(t)[3]

    def lam(self, t):
        return np.exp(self.quad_cd(t))

    def quad_gamma0(self, t):
        if not self.has_gamma0:
            raise UsageError("solution was computed without the Green-function integral")
        return self.state(t)[4]

    def quad_phase(self, t):
        if not self.has_phase:
            raise UsageError("solution was computed without the kernel-phase integral")
        return self.state(t)[4 + int(self.has_gamma0)]

    def residual(self, t):
        """``|mu'' - tau mu' + 4 sigma mu| / (1 + |mu''|)`` with ``mu''`` from the interpolant."""
        mu, mup = self.pair(t)
        mupp = _num_deriv(self.mup, t, self.t_end)
        tau, sigma = tau_sigma(self.coeffs, t)
        return abs(mupp - tau * mup + 4.0 * sigma * mu) / (1.0 + abs(mupp))


def _num_deriv(f, t, t_end, h=1e-3):
    """Fourth-order finite difference of a dense-output component, one-sided at the ends."""
    if t - 2 * h >= 0 and t + 2 * h <= t_end:
        ts = t + h * np.array([-2.0, -1.0, 1.0, 2.0])
        w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    elif t - 2 * h < 0:
        ts = t + h * np.arange(5.0)
        w = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    else:
        ts = t - h * np.arange(5.0)
        w = -np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    return float(np.sum(w * f(ts)))


def _char_base_rhs(coeffs):
    def rhs(t, y):
        mu, mup = y[0], y[1]
        tau, sigma = tau_sigma(coeffs, t)
        c, d = coeffs.c(t), coeffs.d(t)
        return [mup, tau * mup - 4.0 * sigma * mu, c - d, c + d]
    return rhs


def solve_characteristic(coeffs: CoefficientSet, mu0: float, mup0: float, t_end: float | None = None,
                         *, gamma0_integral: bool = False, phase_integral: bool = False) -> CharacteristicSolution:
    """Integrate the characteristic equation from ``mu(0) = mu0``, ``mu'(0) = mup0``.

    Parameters
    ----------
    gamma0_integral : bool
        Also integrate ``a sigma lambda**2 / mu'**2`` (Green-function
        quadrature).  Requires ``mu'`` to stay away from zero on
        ``[0, t_end]``; otherwise :class:`SingularityError` is raised at
        the first zero.
    phase_integral : bool
        Also integrate ``a lambda**2 / mu**2``.  Requires ``mu`` to stay
        away from zero on ``[0, t_end]``.
    """
    t_end = coeffs.t_max if t_end is None else float(t_end)
    coeffs.check_time(t_end, where="t_end")
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    if mu0 == 0.0 and mup0 == 0.0:
        raise UsageError("(mu0, mup0) = (0, 0) gives the trivial solution")
    base = _char_base_rhs(coeffs)
    y0 = [float(mu0), float(mup0), 0.0, 0.0]

    if gamma0_integral or phase_integral:
        # first pass locates the zeros that would make the extra integrands singular
        events = []
        if gamma0_integral:
            if abs(mup0) < MUP_MIN:
                raise SingularityError("mu'(0) vanishes; Green-function integral undefined", t=0.0)
            events.append(_zero_event(1))
        if phase_integral:
            if abs(mu0) < KAPPA_MIN:
                raise SingularityError("mu(0) vanishes; kernel-phase integral undefined", t=0.0)
            events.append(_zero_event(0))
        names = (["mu'"] if gamma0_integral else []) + (["mu"] if phase_integral else [])
        probe = _integrate(base, t_end, y0, events=events)
        hits = [(float(te[0]), nm) for te, nm in zip(probe.t_events, names) if len(te)]
        if hits:
            hit, which = min(hits)
            raise SingularityError(f"{which} vanishes inside [0, {t_end}]", t=hit)

    def rhs(t, y):
        out = base(t, y)
        if gamma0_integral or phase_integral:
            a = coeffs.a(t)
            lam2 = np.exp(2.0 * y[2])
            if gamma0_integral:
                _, sigma = tau_sigma(coeffs, t)
                out.append(a * sigma * lam2 / y[1] ** 2)
            if phase_integral:
                out.append(a * lam2 / y[0] ** 2)
        return out

    y0 = y0 + [0.0] * (int(gamma0_integral) + int(phase_integral))
    sol = _integrate(rhs, t_end, y0)
    return CharacteristicSolution(coeffs, float(mu0), float(mup0), t_end, gamma0_integral, phase_integral, sol)


def green_seed(coeffs: CoefficientSet, t_end: float | None = None, **kw) -> CharacteristicSolution:
    """Characteristic solution with ``mu(0) = 0``, ``mu'(0) = 2 a(0)``."""
    return solve_characteristic(coeffs, 0.0, 2.0 * float(coeffs.a(0.0)), t_end, **kw)


# ---------------------------------------------------------------------------
# auxiliary (Ermakov) equation


@dataclass(frozen=True, eq=False)
class ErmakovSolution:
    """A solution ``kappa`` of the auxiliary equation with constant ``C0``.

    Instances come either from :func:`solve_ermakov` or from the
    superposition constructors in :mod:`quadinv.invariants`; both expose the
    same accessors.  ``C0 == 0`` marks a solution of the homogeneous
    (linear) equation.
    """

    coeffs: CoefficientSet
    C0: float
    t_end: float
    nodes: np.ndarray
    _eval: Callable = field(repr=False)
    _phase: Callable | None = field(default=None, repr=False)
    origin: str = "ode"

    def _check(self, t):
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0.0) or np.any(tt > self.t_end * (1 + 1e-12)):
            raise DomainError(f"t = {t} outside the solved interval [0, {self.t_end}]")

    def pair(self, t):
        self._check(t)
        return self._eval(t)

    def kappa(self, t):
        return self.pair(t)[0]

    def kappap(self, t):
        return self.pair(t)[1]

    def kappapp(self, t):
        """Second derivative taken from the auxiliary equation itself."""
        k, kp = self.pair(t)
        a, da = self.coeffs.a(t), self.coeffs.da(t)
        return (da / a) * kp - _stiffness(self.coeffs, t) * k + self.C0 * (2.0 * a) ** 2 / k ** 3

    def phase_integral(self, t):
        """``int_0^t a / kappa**2 ds``."""
        if self._phase is None:
            raise UsageError("solution was computed without the phase integral")
        self._check(t)
        return self._phase(t)

    def residual(self, t):
        """Auxiliary-equation residual with ``kappa''`` from the interpolant, relative to ``1 + |kappa''|``."""
        k, kp = self.pair(t)
        kpp = _num_deriv(self.kappap, t, self.t_end)
        a, da = self.coeffs.a(t), self.coeffs.da(t)
        lhs = kpp - (da / a) * kp + _stiffness(self.coeffs, t) * k
        return abs(lhs - self.C0 * (2.0 * a) ** 2 / k ** 3) / (1.0 + abs(kpp))


def solve_ermakov(coeffs: CoefficientSet, C0: float, k0: float, kp0: float, t_end: float | None = None,
                  *, phase_integral: bool = False) -> ErmakovSolution:
    """Integrate ``kappa'' - (a'/a) kappa' + [...] kappa = C0 (2a)**2 / kappa**3``.

    For ``C0 != 0`` (and whenever ``phase_integral`` is requested) the
    solution must stay above ``KAPPA_MIN``; reaching it raises
    :class:`SingularityError`.  Homogeneous solves (``C0 == 0``) are
    linear and may change sign.
    """
    t_end = coeffs.t_max if t_end is None else float(t_end)
    coeffs.check_time(t_end, where="t_end")
    positive = C0 != 0.0 or phase_integral
    if positive and not k0 > 0:
        raise DomainError(f"kappa(0) must be positive, got {k0}")
    if not positive and k0 == 0.0 and kp0 == 0.0:
        raise UsageError("(kappa0, kappa'0) = (0, 0) gives the trivial solution")

    def rhs(t, y):
        k, kp = y[0], y[1]
        a, da = coeffs.a(t), coeffs.da(t)
        c, d = coeffs.c(t), coeffs.d(t)
        kpp = (da / a) * kp - _stiffness(coeffs, t) * k
        if C0 != 0.0:
            kpp = kpp + C0 * (2.0 * a) ** 2 / k ** 3
        out = [kp, kpp, c - d, c + d]
        if phase_integral:
            out.append(a / k ** 2)
        return out

    events = [_zero_event(0, KAPPA_MIN)] if positive else None
    y0 = [float(k0), float(kp0), 0.0, 0.0] + ([0.0] if phase_integral else [])
    try:
        sol = _integrate(rhs, t_end, y0, events=events)
    except IntegrationError as exc:
        if not positive:
            raise
        # with smooth coefficients the step size only collapses as kappa -> 0
        raise SingularityError("kappa collapses to zero (step-size underflow)", t=exc.t) from exc
    hit = _first_event(sol) if positive else None
    if hit is not None:
        raise SingularityError(f"kappa reached the floor {KAPPA_MIN}", t=hit)

    dense = sol.sol

    def _eval(t):
        s = dense(t)
        return s[0], s[1]

    phase = (lambda t: dense(t)[4]) if phase_integral else None
    return ErmakovSolution(coeffs, float(C0), t_end, np.asarray(sol.t), _eval, phase, origin="ode")


def kappa_from_mu(mu: CharacteristicSolution) -> ErmakovSolution:
    """Map a characteristic solution to a homogeneous auxiliary solution.

    ``kappa = mu exp(-int (c - d))``; the derivative follows by the product rule.
    """
    coeffs = mu.coeffs

    def _eval(t):
        s = mu.state(t)
        inv = np.exp(-s[2])
        rate = coeffs.c(t) - coeffs.d(t)
        return s[0] * inv, (s[1] - rate * s[0]) * inv

    return ErmakovSolution(coeffs, 0.0, mu.t_end, mu.nodes, _eval, origin="mu")


# ---------------------------------------------------------------------------
# Wronskian and the two-solution identities


def _same_family(s1, s2):
    if s1.coeffs != s2.coeffs:
        raise UsageError("solutions belong to different coefficient sets")


def wronskian(s1, s2, t):
    """``f1 g2' - f1' g2`` for two solutions exposing ``pair(t)``."""
    _same_family(s1, s2)
    if np.any(np.asarray(t) > min(s1.t_end, s2.t_end) * (1 + 1e-12)):
        raise UsageError(f"t = {t} outside the common domain of the two solutions")
    f1, fp1 = s1.pair(t)
    f2, fp2 = s2.pair(t)
    return f1 * fp2 - fp1 * f2


def _w_over_2a_and_rate(k1: ErmakovSolution, k2: ErmakovSolution, t):
    """``W/2a`` and its time derivative.

    The derivative is a finite difference of the dense output, so the
    identities built on it test the solutions rather than restate the
    equation.
    """
    coeffs = k1.coeffs
    t_end = min(k1.t_end, k2.t_end)

    def w_of(ts):
        return np.array([wronskian(k1, k2, s) / (2.0 * coeffs.a(s)) for s in np.atleast_1d(ts)])

    return float(w_of(t)[0]), _num_deriv(w_of, t, t_end)


def pair_constant(k1: ErmakovSolution, k2: ErmakovSolution, t):
    """``(W/2a)**2 + C01 (k2/k1)**2 + C02 (k1/k2)**2``, conserved along both solutions."""
    _same_family(k1, k2)
    x1, x2 = k1.kappa(t), k2.kappa(t)
    W = wronskian(k1, k2, t)
    a = k1.coeffs.a(t)
    return (W / (2.0 * a)) ** 2 + k1.C0 * (x2 / x1) ** 2 + k2.C0 * (x1 / x2) ** 2


def abel_residual(k1: ErmakovSolution, k2: ErmakovSolution, t):
    """Residual of ``(1/2a) d/dt(W/2a) + C01 k2/k1**3 - C02 k1/k2**3 = 0``."""
    _same_family(k1, k2)
    w, wp = _w_over_2a_and_rate(k1, k2, t)
    a = k1.coeffs.a(t)
    x1, x2 = k1.kappa(t), k2.kappa(t)
    return wp / (2.0 * a) + k1.C0 * x2 / x1 ** 3 - k2.C0 * x1 / x2 ** 3


def ratio_identity_residual(k1: ErmakovSolution, k2: ErmakovSolution, t):
    """Residual of ``d/dt[(k2/k1)(W/2a)] = (2a/k1**2)[(W/2a)**2 - C01 (k2/k1)**2 + C02 (k1/k2)**2]``."""
    _same_family(k1, k2)
    w, wp = _w_over_2a_and_rate(k1, k2, t)
    a = k1.coeffs.a(t)
    x1, xp1 = k1.pair(t)
    x2, xp2 = k2.pair(t)
    r = x2 / x1
    lhs = (xp2 / x1 - x2 * xp1 / x1 ** 2) * w + r * wp
    rhs = (2.0 * a / x1 ** 2) * (w ** 2 - k1.C0 * r ** 2 + k2.C0 / r ** 2)
    return lhs - rhs
