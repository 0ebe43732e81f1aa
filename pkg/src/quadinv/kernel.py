"""Gaussian propagators: Green-function and general kernel parameters.

The Green function is

    G(x, y, t) = (2 pi i mu0)**(-1/2) exp(i (alpha0 x**2 + beta0 x y + gamma0 y**2))

with ``mu0`` the characteristic solution seeded by ``mu0(0) = 0``,
``mu0'(0) = 2 a(0)``.  The general kernel replaces ``mu0`` by a solution
``mu`` with ``mu(0) != 0`` and prefactor ``(2 pi mu)**(-1/2)``; its
parameters follow from the Green data and the initial values
``alpha(0), beta(0), gamma(0), mu(0)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coeffs import CoefficientSet
from .errors import DomainError, SingularityError, UsageError
from .grid_ops import Grid, hamiltonian_samples, interior_mask, smooth_window
from .ode_engine import CharacteristicSolution, green_seed, solve_characteristic

T_MIN = 1e-6
MU_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelParameters:
    """Quadratic-phase data of a Gaussian kernel at time ``t``.

    ``init`` holds ``(alpha(0), beta(0), gamma(0), mu(0))`` for general
    kernels.  ``mu_direct`` and ``mup_direct`` come from integrating the
    characteristic equation straight from the initial data and serve as
    a consistency check.
    """

    mu: float
    alpha: float
    beta: float
    gamma: float
    lam: float
    t: float
    kind: str
    init: tuple | None = None
    coeffs: CoefficientSet | None = None
    mu_direct: float | None = None
    mup_direct: float | None = None

    def __post_init__(self):
        if self.kind not in ("green", "general"):
            raise UsageError(f"kind must be 'green' or 'general', got {self.kind!r}")
        if self.kind == "general" and self.init is None:
            raise UsageError("general kernels need their initial data")

    def prefactor(self) -> complex:
        if abs(self.mu) < MU_FLOOR:
            raise SingularityError("kernel prefactor diverges (mu = 0)", t=self.t)
        arg = 2j * math.pi * self.mu if self.kind == "green" else 2.0 * math.pi * self.mu
        return 1.0 / cmath.sqrt(arg)

    def consistency(self) -> dict:
        """Relative mismatches between the two routes, for general kernels.

        Keys: ``mu`` (product formula vs direct ODE), ``beta_mu``
        (``beta mu`` vs ``beta(0) mu(0) lambda``) and ``alpha``
        (``alpha`` vs ``mu'/(4 a mu) - c/(2a)`` on the direct solution).
        """
        if self.kind != "general" or self.mu_direct is None:
            raise UsageError("consistency data exists only for general kernels")
        _, b0, _, m0 = self.init
        a, c = float(self.coeffs.a(self.t)), float(self.coeffs.c(self.t))
        alpha_direct = self.mup_direct / (4.0 * a * self.mu_direct) - c / (2.0 * a)
        ref = b0 * m0 * self.lam
        return {
            "mu": abs(self.mu - self.mu_direct) / abs(self.mu_direct),
            "beta_mu": abs(self.beta * self.mu - ref) / abs(ref),
            "alpha": abs(self.alpha - alpha_direct) / max(abs(alpha_direct), 1.0),
        }


def _check_t(coeffs, t):
    coeffs.check_time(t)
    if t < T_MIN:
        raise DomainError(f"kernel parameters need t >= {T_MIN:g}, got {t}")


def green_parameters(coeffs: CoefficientSet, t: float,
                     solution: CharacteristicSolution | None = None) -> KernelParameters:
    """Green-function parameters at ``t``.

    ``alpha0 = mu0'/(4 a mu0) - c/(2a)``, ``beta0 = -lambda/mu0`` and
    ``gamma0 = a lambda**2/(mu0 mu0') + c(0)/(2 a(0)) - 4 int a sigma lambda**2/mu0'**2``.

    Parameters
    ----------
    solution : CharacteristicSolution, optional
        A Green seed computed with ``gamma0_integral=True`` that covers ``t``.
        Reusing one seed keeps every time slice on the same quadrature.

    Raises
    ------
    SingularityError
        When ``mu0`` or ``mu0'`` vanishes on ``(0, t]``.
    """
    _check_t(coeffs, t)
    if solution is None:
        solution = green_seed(coeffs, t, gamma0_integral=True)
    elif not (solution.has_gamma0 and solution.mu0 == 0.0):
        raise UsageError("solution must be a Green seed with the gamma0 integral")
    st = solution.state(t)
    mu, mup, lam = float(st[0]), float(st[1]), math.exp(float(st[2]))
    if abs(mu) < MU_FLOOR:
        raise SingularityError("caustic: mu0 vanishes", t=t)
    a, c = float(coeffs.a(t)), float(coeffs.c(t))
    a0, c0 = float(coeffs.a(0.0)), float(coeffs.c(0.0))
    alpha = mup / (4.0 * a * mu) - c / (2.0 * a)
    beta = -lam / mu
    gamma = a * lam ** 2 / (mu * mup) + c0 / (2.0 * a0) - 4.0 * float(solution.quad_gamma0(t))
    return KernelParameters(mu, alpha, beta, gamma, lam, float(t), "green", coeffs=coeffs)


def _direct_solution(coeffs, alpha0, mu0, t_end):
    mup0 = (4.0 * float(coeffs.a(0.0)) * alpha0 + 2.0 * float(coeffs.c(0.0))) * mu0
    return solve_characteristic(coeffs, mu0, mup0, t_end, phase_integral=True)


def kernel_from_mu(coeffs: CoefficientSet, alpha0: float, beta0: float, gamma0: float, mu0: float, t: float,
                   solution: CharacteristicSolution | None = None) -> KernelParameters:
    """General kernel parameters straight from ``mu`` (no Green function).

    ``mu'(0) = (4 a(0) alpha(0) + 2 c(0)) mu(0)``, then
    ``alpha = mu'/(4 a mu) - c/(2a)``, ``beta = beta(0) mu(0) lambda / mu`` and
    ``gamma = gamma(0) - beta(0)**2 mu(0)**2 int a lambda**2 / mu**2``.
    Valid up to the first caustic, including ``t = 0``.
    """
    if mu0 == 0:
        raise DomainError("mu(0) must be nonzero")
    coeffs.check_time(t)
    if solution is None:
        solution = _direct_solution(coeffs, alpha0, mu0, max(t, T_MIN))
    mu, mup = (float(v) for v in solution.pair(t))
    lam = float(solution.lam(t))
    if abs(mu) < MU_FLOOR:
        raise SingularityError("caustic: mu vanishes", t=t)
    a, c = float(coeffs.a(t)), float(coeffs.c(t))
    alpha = mup / (4.0 * a * mu) - c / (2.0 * a)
    beta = beta0 * mu0 * lam / mu
    gamma = gamma0 - beta0 ** 2 * mu0 ** 2 * float(solution.quad_phase(t))
    return KernelParameters(mu, alpha, beta, gamma, lam, float(t), "general",
                            init=(alpha0, beta0, gamma0, mu0), coeffs=coeffs,
                            mu_direct=mu, mup_direct=mup)


def general_kernel_parameters(coeffs: CoefficientSet, alpha0_init: float, beta0_init: float,
                              gamma0_init: float, mu_init: float, t: float,
                              green: CharacteristicSolution | None = None,
                              direct: CharacteristicSolution | None = None) -> KernelParameters:
    """Kernel parameters built from the Green data and the initial values.

    ``mu = 2 mu(0) mu0 (alpha(0) + gamma0)``,
    ``alpha = alpha0 - beta0**2 / (4 (alpha(0) + gamma0))``,
    ``beta = -beta(0) beta0 / (2 (alpha(0) + gamma0))`` and
    ``gamma = gamma(0) - beta(0)**2 / (4 (alpha(0) + gamma0))``.

    The product formula is a limit at ``t = 0``; below ``T_MIN`` the
    parameters come from the direct route, which starts at the initial
    data exactly.
    """
    if mu_init == 0:
        raise DomainError("mu(0) must be nonzero")
    coeffs.check_time(t)
    if direct is None:
        direct = _direct_solution(coeffs, alpha0_init, mu_init, max(t, T_MIN))
    if t < T_MIN:
        return kernel_from_mu(coeffs, alpha0_init, beta0_init, gamma0_init, mu_init, t, direct)
    g = green_parameters(coeffs, t, green)
    s = alpha0_init + g.gamma
    if abs(s) < MU_FLOOR * max(1.0, abs(g.gamma)):
        raise SingularityError("alpha(0) + gamma0(t) vanishes", t=t)
    mu = 2.0 * mu_init * g.mu * s
    alpha = g.alpha - g.beta ** 2 / (4.0 * s)
    beta = -beta0_init * g.beta / (2.0 * s)
    gamma = gamma0_init - beta0_init ** 2 / (4.0 * s)
    mu_d, mup_d = (float(v) for v in direct.pair(t))
    return KernelParameters(mu, alpha, beta, gamma, g.lam, float(t), "general",
                            init=(alpha0_init, beta0_init, gamma0_init, mu_init), coeffs=coeffs,
                            mu_direct=mu_d, mup_direct=mup_d)


def eval_kernel(params: KernelParameters, x, y, t: float | None = None):
    """Evaluate the kernel on broadcast ``x``, ``y``.

    The optional ``t`` must match ``params.t``; it is accepted so call
    sites can state the time they expect.
    """
    if t is not None and abs(t - params.t) > 1e-14 * max(1.0, abs(t)):
        raise UsageError(f"parameters belong to t = {params.t}, not {t}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = params.alpha * x * x + params.beta * x * y + params.gamma * y * y
    return params.prefactor() * np.exp(1j * phase)


def schrodinger_residual(field: Callable[[float], np.ndarray], coeffs: CoefficientSet, grid: Grid,
                         t: float, dt: float) -> float:
    """``max |i d/dt u - H u| / max |u|`` on the grid interior.

    ``field(t)`` returns samples of ``u(., t)`` on ``grid``.  The samples
    are multiplied by :func:`smooth_window` before spectral differentiation,
    so fields that do not decay (kernels) are handled; only the interior,
    where the window is 1, enters the maximum.  ``d/dt`` is the centred
    five-point difference with step ``dt``.
    """
    w = smooth_window(grid)
    inner = interior_mask(grid)
    u = np.asarray(field(t))
    scale = float(np.max(np.abs(u[inner])))
    if scale == 0.0:
        return 0.0
    f = [np.asarray(field(t + k * dt)) for k in (-2, -1, 1, 2)]
    dudt = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * dt)
    hu = hamiltonian_samples(coeffs, t, w * u, grid)
    res = 1j * dudt - hu
    return float(np.max(np.abs(res[inner]))) / scale


def kernel_residual(params_fn: Callable[[float], KernelParameters], grid: Grid, t: float, dt: float,
                    y: float = 0.0) -> float:
    """:func:`schrodinger_residual` of ``x -> K(x, y, t)`` for a parameter factory."""
    p = params_fn(t)
    return schrodinger_residual(lambda s: eval_kernel(params_fn(s), grid.x, y), p.coeffs, grid, t, dt)
