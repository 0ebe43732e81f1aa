"""Two analytic routes to the Cauchy problem ``i psi_t = H psi``.

* Kernel quadrature: ``psi(x, t) = int K(x, y, t) phi(y) dy``.
* Eigenfunction expansion: ``psi = sum_n c_n(t) Psi_n(x, t)`` over the
  eigenfunctions of a quadratic invariant, with ``K`` built from a
  homogeneous auxiliary solution ``kappa1`` (``beta(0) kappa1(0) = 1``).

In the expansion route ``chi`` denotes the data entering
``psi(x, t) = int K(x, y, t) chi(y) dy``; :func:`chi_from_initial` converts an
initial wavefunction ``psi(x, 0)`` into that ``chi``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coeffs import CoefficientSet, lambda_factor
from .errors import AccuracyWarning, DomainError, ModeError, ResolutionError, TruncationWarning, UsageError
from .grid_ops import Grid, LadderData, WaveFunction, hermite_modes
from .kernel import T_MIN, KernelParameters, eval_kernel
from .ode_engine import ErmakovSolution, solve_ermakov
from .special_functions import HERMITE_N_MAX, hermite_functions, hermite_norm

N_DEFAULT = 48
N_MAX = HERMITE_N_MAX
TRUNCATION_TOL = 1e-6
KPSI_TOL = 1e-6
SUPPORT_TOL = 1e-16


# ---------------------------------------------------------------------------
# kernel quadrature


def _support_radius(samples, x, center):
    mag = np.abs(samples)
    live = mag > SUPPORT_TOL * mag.max() if mag.max() > 0 else np.zeros(mag.shape, bool)
    return float(np.max(np.abs(x[live] - center))) if live.any() else 0.0


def oscillation_number(params: KernelParameters, x_grid: Grid, phi0: WaveFunction) -> float:
    """``(|beta| max|x| + 2 |gamma| max|y|) dy``, the phase advance per cell of the integrand.

    ``max|y|`` runs over the numerical support of ``phi0`` only, since the
    integrand vanishes elsewhere.
    """
    y = phi0.grid.x
    ymax = _support_radius(phi0.samples, y, 0.0)
    xmax = float(np.max(np.abs(x_grid.x)))
    return (abs(params.beta) * xmax + 2.0 * abs(params.gamma) * ymax) * phi0.grid.dx


def evolve_by_kernel(params: KernelParameters | None, phi0: WaveFunction, t: float | None = None,
                     x_grid: Grid | None = None) -> WaveFunction:
    """``psi(x, t) = int K(x, y, t) phi0(y) dy`` by the trapezoid rule on the ``y`` grid.

    Green kernels below ``T_MIN`` return ``phi0`` unchanged (the kernel
    tends to a delta function); ``params`` may then be ``None``.

    Raises
    ------
    ResolutionError
        If the integrand advances by ``pi/2`` or more in phase per grid
        cell (see :func:`oscillation_number`).
    """
    if t is None:
        if params is None:
            raise UsageError("give either kernel parameters or t")
        t = params.t
    if t < T_MIN and (params is None or params.kind == "green"):
        return phi0
    if params is None:
        raise UsageError("kernel parameters are required for t >= T_MIN")
    if abs(params.t - t) > 1e-14 * max(1.0, abs(t)):
        raise UsageError(f"parameters belong to t = {params.t}, not {t}")
    x_grid = phi0.grid if x_grid is None else x_grid
    osc = oscillation_number(params, x_grid, phi0)
    if osc >= 0.5 * math.pi:
        raise ResolutionError(f"kernel oscillates too fast for the grid (phase step {osc:.3f} >= pi/2); "
                              "use a finer or narrower grid")
    K = eval_kernel(params, x_grid.x[:, None], phi0.grid.x[None, :])
    return WaveFunction(x_grid, phi0.grid.dx * (K @ phi0.samples))


# ---------------------------------------------------------------------------
# expansion state


def default_k1(coeffs: CoefficientSet, t_end: float | None = None) -> ErmakovSolution:
    """Homogeneous auxiliary solution with ``kappa1(0) = 1`` and ``alpha(0) = 0``."""
    cpd0 = float(coeffs.c(0.0) + coeffs.d(0.0))
    return solve_ermakov(coeffs, 0.0, 1.0, cpd0, t_end, phase_integral=True)


@dataclass(eq=False)
class ExpansionState:
    """Constants and time functions of the eigenfunction expansion.

    Attributes
    ----------
    delta : float
        ``C0**(1/4) / sqrt(C0 (k1/k)**2 + (W/2a)**2)`` at ``t = 0``.
    xi_const : float
        ``gamma + (k/k1)(W/2a)/(2 D)`` at ``t = 0`` (``D`` the Ermakov constant).
    gamma0 : float
        ``gamma(0)`` of the kernel; ``gamma(t) = gamma0 - int a/k1**2``.
    """

    coeffs: CoefficientSet
    k1: ErmakovSolution
    k: ErmakovSolution
    gamma0: float
    delta: float
    xi_const: float
    N: int = N_DEFAULT
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def C0(self) -> float:
        return self.k.C0

    @property
    def t_end(self) -> float:
        return min(self.k1.t_end, self.k.t_end)

    @property
    def init(self):
        """``(alpha(0), beta(0), gamma(0), mu(0))`` of the kernel."""
        s, sp = (float(v) for v in self.k1.pair(0.0))
        a0 = float(self.coeffs.a(0.0))
        cpd0 = float(self.coeffs.c(0.0) + self.coeffs.d(0.0))
        return (sp - cpd0 * s) / (4.0 * a0 * s), 1.0 / s, self.gamma0, s

    def w(self, t):
        """``W(k1, k) / (2a)``."""
        x1, xp1 = self.k1.pair(t)
        x, xp = self.k.pair(t)
        return (x1 * xp - xp1 * x) / (2.0 * self.coeffs.a(t))

    def ermakov_constant(self, t):
        x1, x = self.k1.kappa(t), self.k.kappa(t)
        return self.C0 * (x1 / x) ** 2 + self.w(t) ** 2

    def delta_at(self, t):
        return self.C0 ** 0.25 / np.sqrt(self.ermakov_constant(t))

    def phi(self, t):
        """``arctan((k/k1) (W/2a) / sqrt(C0))``."""
        return np.arctan(self.k.kappa(t) * self.w(t) / (self.k1.kappa(t) * math.sqrt(self.C0)))

    def gamma(self, t):
        return self.gamma0 - self.k1.phase_integral(t)

    def xi_at(self, t):
        return self.gamma(t) + self.k.kappa(t) * self.w(t) / (2.0 * self.k1.kappa(t) * self.ermakov_constant(t))

    def lam(self, t):
        return lambda_factor(self.coeffs, t)

    def kernel(self, t: float) -> KernelParameters:
        """Kernel with ``mu = k1 lambda``, ``alpha = (k1' - (c+d) k1)/(4 a k1)``, ``beta = 1/k1``."""
        x1, xp1 = (float(v) for v in self.k1.pair(t))
        a, _, c, d = (float(v) for v in self.coeffs.values(t))
        lam = float(self.lam(t))
        return KernelParameters(x1 * lam, (xp1 - (c + d) * x1) / (4.0 * a * x1), 1.0 / x1,
                                float(self.gamma(t)), lam, float(t), "general", init=self.init,
                                coeffs=self.coeffs, mu_direct=x1 * lam)

    def ladder_data(self, t: float) -> LadderData:
        x, xp = (float(v) for v in self.k.pair(t))
        a, _, c, d = (float(v) for v in self.coeffs.values(t))
        return LadderData(x, xp, c + d, a, 2.0 * math.sqrt(self.C0))

    def omega(self, t):
        return 2.0 * math.sqrt(self.C0) * self.lam(t)

    def modes(self, t: float, grid: Grid, N: int | None = None) -> np.ndarray:
        N = self.N if N is None else N
        return hermite_modes(N - 1, self.ladder_data(t), grid)

    def y_integrals(self, chi: WaveFunction, N: int | None = None) -> np.ndarray:
        """``int exp(i xi y**2) delta**(1/2) phi_n(delta y) chi(y) dy`` for ``n < N`` (cached)."""
        N = self.N if N is None else N
        key = (id(chi), N)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is chi:
            return hit[1]
        y = chi.grid.x
        basis = math.sqrt(self.delta) * hermite_functions(N - 1, self.delta * y)
        vals = chi.grid.dx * (basis * np.exp(1j * self.xi_const * y * y)) @ chi.samples
        self._cache[key] = (chi, vals)
        return vals

    def coefficients(self, chi: WaveFunction, t: float, N: int | None = None) -> np.ndarray:
        """``c_n(t) = i**n e^{-i(n+1/2) phi} lambda**(-1/2) I_n`` for ``n < N``."""
        N = self.N if N is None else N
        n = np.arange(N)
        pref = (1j) ** n * np.exp(-1j * (n + 0.5) * float(self.phi(t))) / math.sqrt(float(self.lam(t)))
        return pref * self.y_integrals(chi, N)


def expansion_setup(coeffs: CoefficientSet, k1: ErmakovSolution, k: ErmakovSolution,
                    gamma0: float = 0.0, N: int = N_DEFAULT) -> ExpansionState:
    """Validate the pair ``(k1, k)`` and fix ``delta`` and ``xi`` at ``t = 0``."""
    if k1.coeffs != coeffs or k.coeffs != coeffs:
        raise UsageError("auxiliary solutions belong to a different coefficient set")
    if k1.C0 != 0.0:
        raise UsageError("k1 must solve the homogeneous equation (C0 = 0)")
    if not k.C0 > 0:
        raise ModeError(f"the expansion needs C0 > 0, got {k.C0}")
    if k1._phase is None:
        raise UsageError("k1 must carry its phase integral (solve_ermakov(..., phase_integral=True))")
    if not (isinstance(N, (int, np.integer)) and 1 <= N <= N_MAX + 1):
        raise UsageError(f"N must be in [1, {N_MAX + 1}], got {N!r}")
    if not float(k1.kappa(0.0)) > 0:
        raise DomainError("k1(0) must be positive")
    st = ExpansionState(coeffs, k1, k, float(gamma0), 0.0, 0.0, int(N))
    st.delta = float(st.delta_at(0.0))
    st.xi_const = float(st.xi_at(0.0))
    return st


def expansion_coefficients(coeffs, k1, k, chi: WaveFunction, n: int, t: float,
                           state: ExpansionState | None = None) -> complex:
    """Single coefficient ``c_n(t)``."""
    if not (isinstance(n, (int, np.integer)) and 0 <= n <= N_MAX):
        raise UsageError(f"n must be an integer in [0, {N_MAX}], got {n!r}")
    state = expansion_setup(coeffs, k1, k) if state is None else state
    return complex(state.coefficients(chi, t, int(n) + 1)[n])


def eigenfunction_expansion(coeffs, k1, k, chi: WaveFunction, t: float, N: int = N_DEFAULT,
                            grid: Grid | None = None, state: ExpansionState | None = None) -> WaveFunction:
    """``psi(x, t) = sum_{n<N} c_n(t) Psi_n(x, t)`` on ``grid`` (default: ``chi``'s grid)."""
    state = expansion_setup(coeffs, k1, k, N=N) if state is None else state
    if not (isinstance(N, (int, np.integer)) and 1 <= N <= N_MAX + 1):
        raise UsageError(f"N must be in [1, {N_MAX + 1}], got {N!r}")
    grid = chi.grid if grid is None else grid
    cn = state.coefficients(chi, t, N)
    peak = float(np.max(np.abs(cn)))
    if peak > 0 and abs(cn[-1]) / peak > TRUNCATION_TOL:
        warnings.warn(f"expansion not converged: |c_(N-1)|/max|c_n| = {abs(cn[-1]) / peak:.2e}",
                      TruncationWarning, stacklevel=2)
    return WaveFunction(grid, cn @ state.modes(t, grid, N))


# ---------------------------------------------------------------------------
# special solutions and the re-indexed expansion


def chi_special(m: int, state: ExpansionState, grid: Grid) -> WaveFunction:
    """``exp(-i xi y**2) exp(-delta**2 y**2/2) H_m(delta y)``."""
    y = grid.x
    phi = hermite_functions(m, state.delta * y)[m]
    return WaveFunction(grid, np.exp(-1j * state.xi_const * y * y) * hermite_norm(m) * phi)


def psi_special(m: int, state: ExpansionState, t: float, grid: Grid) -> WaveFunction:
    """``lambda**(-1/2) e^{-i(m+1/2) phi(t)} Psi_m(x, t)``."""
    pref = np.exp(-1j * (m + 0.5) * float(state.phi(t))) / math.sqrt(float(state.lam(t)))
    return WaveFunction(grid, pref * state.modes(t, grid, m + 1)[m])


def matched_kappa_initial(coeffs: CoefficientSet, k1: ErmakovSolution, C0: float = 1.0,
                          gamma0: float = 0.0):
    """``(kappa(0), kappa'(0))`` meeting ``C0**(1/4)/kappa(0) = delta`` and the ``xi`` condition.

    With ``s = k1(0)`` and ``alpha0`` the kernel's ``alpha(0)``, the
    conditions give ``xi = (gamma0 - alpha0)/2``,
    ``kappa(0)**4 = C0 s**2 / (1 - s**2 (alpha0 + gamma0)**2)`` and
    ``kappa'(0) = ((c + d)(0) - 4 a(0) xi) kappa(0)``.
    """
    if not C0 > 0:
        raise ModeError("matching needs C0 > 0")
    s, sp = (float(v) for v in k1.pair(0.0))
    a0 = float(coeffs.a(0.0))
    cpd0 = float(coeffs.c(0.0) + coeffs.d(0.0))
    alpha0 = (sp - cpd0 * s) / (4.0 * a0 * s)
    den = 1.0 - s * s * (alpha0 + gamma0) ** 2
    if not den > 0:
        raise DomainError("no real kappa(0) satisfies the matching conditions "
                          f"(s**2 (alpha0 + gamma0)**2 = {1 - den:.6g} >= 1)")
    k0 = (C0 * s * s / den) ** 0.25
    xi = 0.5 * (gamma0 - alpha0)
    return k0, (cpd0 - 4.0 * a0 * xi) * k0


def matched_state(coeffs: CoefficientSet, t_end: float | None = None, C0: float = 1.0, gamma0: float = 0.0,
                  k1: ErmakovSolution | None = None, N: int = N_DEFAULT) -> ExpansionState:
    """Expansion state whose ``kappa`` satisfies the matching conditions at ``t = 0``."""
    k1 = default_k1(coeffs, t_end) if k1 is None else k1
    k0, kp0 = matched_kappa_initial(coeffs, k1, C0, gamma0)
    k = solve_ermakov(coeffs, C0, k0, kp0, k1.t_end)
    return expansion_setup(coeffs, k1, k, gamma0, N)


def expansion_in_wavefunctions(coeffs, chi: WaveFunction, t: float, N: int = N_DEFAULT,
                               state: ExpansionState | None = None, grid: Grid | None = None) -> WaveFunction:
    """``psi = sum_n i**n e^{-i(n+1/2) phi(0)} psi_n(x, t) <psi_n(., 0), chi>``.

    ``state`` must satisfy the matching conditions; by default one is built
    with :func:`matched_state`.
    """
    state = matched_state(coeffs, N=N) if state is None else state
    eps0 = state.C0 ** 0.25 / float(state.k.kappa(0.0))
    if abs(eps0 - state.delta) > 1e-8 * state.delta:
        raise UsageError("state does not satisfy the matching conditions (epsilon(0) != delta)")
    grid = chi.grid if grid is None else grid
    n = np.arange(N)
    phi0, phit = float(state.phi(0.0)), float(state.phi(t))
    # psi_n(., 0) on chi's grid, then the overlaps
    modes0 = np.exp(-1j * (n + 0.5) * phi0)[:, None] * state.modes(0.0, chi.grid, N)
    overlaps = chi.grid.dx * (modes0.conj() @ chi.samples)
    weights = (1j) ** n * np.exp(-1j * (n + 0.5) * phi0) * overlaps
    psi_t = (np.exp(-1j * (n + 0.5) * phit) / math.sqrt(float(state.lam(t))))[:, None] * state.modes(t, grid, N)
    return WaveFunction(grid, weights @ psi_t)


def kpsi_overlap(coeffs, k1, k, n: int, y: float, t: float, grid: Grid | None = None,
                 state: ExpansionState | None = None, both: bool = False):
    """``int conj(Psi_n(x, t)) K(x, y, t) dx`` in closed form.

    The closed form is
    ``i**n e^{-i(n+1/2) phi} lambda**(-1/2) delta**(1/2) e^{i xi y**2} phi_n(delta y)``;
    it is also computed by quadrature on ``grid`` and an
    :class:`AccuracyWarning` is issued if the two differ by more than
    ``1e-6``.  With ``both=True`` the pair ``(closed, quadrature)`` is returned.
    """
    state = expansion_setup(coeffs, k1, k) if state is None else state
    grid = Grid() if grid is None else grid
    lam = float(state.lam(t))
    ph = float(state.phi(t))
    hf = hermite_functions(n, state.delta * y)[n]
    closed = ((1j) ** n * np.exp(-1j * (n + 0.5) * ph) / math.sqrt(lam) * math.sqrt(state.delta)
              * np.exp(1j * state.xi_const * y * y) * hf)
    mode = state.modes(t, grid, n + 1)[n]
    K = eval_kernel(state.kernel(t), grid.x, y)
    quad = complex(grid.dx * np.vdot(mode, K))
    if abs(complex(closed) - quad) > KPSI_TOL:
        warnings.warn(f"closed form and quadrature differ by {abs(complex(closed) - quad):.2e}",
                      AccuracyWarning, stacklevel=2)
    return (complex(closed), quad) if both else complex(closed)


def chi_from_initial(state: ExpansionState, psi0: WaveFunction, grid: Grid | None = None) -> WaveFunction:
    """Data ``chi`` with ``int K(x, y, 0) chi(y) dy = psi0(x)``.

    ``K(x, y, 0) = (2 pi s)**(-1/2) exp(i (alpha0 x**2 + x y / s + gamma0 y**2))`` is a
    chirped, scaled Fourier transform, inverted here by quadrature:
    ``chi(y) = e^{-i gamma0 y**2} (2 pi s)**(-1/2) int e^{-i x y/s} e^{-i alpha0 x**2} psi0(x) dx``.
    """
    alpha0, _, gamma0, s = state.init
    grid = psi0.grid if grid is None else grid
    x, y = psi0.grid.x, grid.x
    f = np.exp(-1j * alpha0 * x * x) * psi0.samples
    vals = psi0.grid.dx * (np.exp(-1j * np.outer(y, x) / s) @ f) / math.sqrt(2.0 * math.pi * s)
    return WaveFunction(grid, np.exp(-1j * gamma0 * y * y) * vals)


def coefficients_csv(cn, path=None) -> str:
    """Rows ``n, abs, arg`` with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "abs", "arg"])
    for n, c in enumerate(np.asarray(cn, dtype=complex)):
        w.writerow([n, format(abs(c), ".17g"), format(float(np.angle(c)), ".17g")])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text
