"""Crank-Nicolson reference solver for ``i psi_t = H(t) psi``.

Space is discretised with fourth-order central differences and homogeneous
Dirichlet conditions; ``p x`` and ``x p`` are kept as separate products so
that non-Hermitian Hamiltonians (``c != d``) are treated exactly as written.
Each step solves the pentadiagonal system

    (I + i dt/2 H(t + dt/2)) psi_new = (I - i dt/2 H(t + dt/2)) psi_old

with a banded LU solve.  The scheme shares no code with the analytic
routes, which is what makes it useful as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .coeffs import CoefficientSet
from .errors import DomainError, NumericalError, ResolutionError
from .grid_ops import WaveFunction

EDGE_TOL = 1e-8

_D1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}          # / (12 dx)
_D2 = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}  # / (12 dx**2)


@dataclass(frozen=True)
class OracleConfig:
    dt: float = 5e-4
    scheme_order: int = 2
    banded_half_width: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.scheme_order != 2:
            raise DomainError("only the second-order (Crank-Nicolson) scheme is available")
        if self.banded_half_width != 2:
            raise DomainError("the fourth-order stencil has half-width 2")


def hamiltonian_banded(coeffs: CoefficientSet, t: float, x: np.ndarray, dx: float) -> np.ndarray:
    """Discrete ``H(t)`` in LAPACK banded storage, shape ``(5, n)``.

    Entry ``H[i, i + o]`` lives at ``ab[2 - o, i + o]``.
    """
    a, b, c, d = (float(v) for v in coeffs.values(t))
    n = x.size
    ab = np.zeros((5, n), dtype=complex)
    for o in range(-2, 3):
        j = np.arange(max(o, 0), n + min(o, 0))
        xi, xj = x[j - o], x[j]
        val = -a * _D2[o] / (12.0 * dx * dx) + np.zeros(j.size)
        if o == 0:
            val = val + b * xi * xi
        else:
            d1 = _D1[o] / (12.0 * dx)
            val = val - 1j * c * d1 * xj - 1j * d * xi * d1
        ab[2 - o, j] = val
    return ab


def _banded_matvec(ab: np.ndarray, v: np.ndarray) -> np.ndarray:
    n = v.size
    out = ab[2] * v
    for o in (-2, -1, 1, 2):
        if o > 0:
            out[:n - o] += ab[2 - o, o:] * v[o:]
        else:
            out[-o:] += ab[2 - o, :n + o] * v[:n + o]
    return out


def edge_fraction(psi: np.ndarray, dx: float) -> float:
    """L2 norm of the outer two points on each side relative to the full norm."""
    total = math.sqrt(dx * float(np.sum(np.abs(psi) ** 2)))
    if total == 0.0:
        return 0.0
    edge = np.concatenate([psi[:2], psi[-2:]])
    return math.sqrt(dx * float(np.sum(np.abs(edge) ** 2))) / total


def _check_edges(psi, dx, t):
    frac = edge_fraction(psi, dx)
    if frac > EDGE_TOL:
        raise ResolutionError(f"wavefunction reaches the grid edge (edge norm fraction {frac:.2e} "
                              f"at t = {t:.6g}); enlarge the grid")


def oracle_step(coeffs: CoefficientSet, psi: np.ndarray, t: float, dt: float, x: np.ndarray,
                dx: float) -> np.ndarray:
    """One Crank-Nicolson step from ``t`` to ``t + dt`` on raw samples."""
    H = hamiltonian_banded(coeffs, t + 0.5 * dt, x, dx)
    lhs = 0.5j * dt * H
    lhs[2] += 1.0
    rhs = psi - 0.5j * dt * _banded_matvec(H, psi)
    try:
        out = solve_banded((2, 2), lhs, rhs, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"banded solve failed at t = {t}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite state after the step at t = {t}")
    return out


def evolve_path(coeffs: CoefficientSet, psi0: WaveFunction, times, cfg: OracleConfig = OracleConfig(),
                t0: float = 0.0) -> list[WaveFunction]:
    """States at each of the increasing ``times`` starting from ``psi0`` at ``t0``.

    Each interval is split into equal steps no longer than ``cfg.dt``.
    """
    times = [float(t) for t in np.atleast_1d(times)]
    if times[0] < t0 or any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise DomainError("output times must be increasing and not before t0")
    coeffs.check_time(times[-1], where="t_end")
    coeffs.check_time(t0, where="t0")
    grid = psi0.grid
    x, dx = grid.x, grid.dx
    psi = np.array(psi0.samples, dtype=complex)
    _check_edges(psi, dx, t0)
    out = []
    t = t0
    for target in times:
        span = target - t
        steps = max(int(math.ceil(span / cfg.dt - 1e-9)), 0)
        h = span / steps if steps else 0.0
        for k in range(steps):
            psi = oracle_step(coeffs, psi, t + k * h, h, x, dx)
        t = target
        _check_edges(psi, dx, t)
        out.append(WaveFunction(grid, psi))
    return out


def evolve_oracle(coeffs: CoefficientSet, psi0: WaveFunction, t_end: float,
                  cfg: OracleConfig = OracleConfig(), t0: float = 0.0) -> WaveFunction:
    """``psi(t_end)`` by Crank-Nicolson from ``psi(t0) = psi0``.

    Raises
    ------
    ResolutionError
        If the state carries more than ``1e-8`` of its norm in the outer
        grid points, initially or at ``t_end``.
    NumericalError
        If a banded solve fails.
    """
    return evolve_path(coeffs, psi0, [t_end], cfg, t0)[0]
