"""Wavefunctions on a uniform periodic grid and the operators acting on them.

Derivatives are taken by discrete Fourier differentiation.  States that
decay at the edges are effectively periodic, so the spectral derivative is
accurate to rounding; a validator warns when that assumption fails.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .errors import AccuracyWarning, DomainError, ModeError, UsageError
from .special_functions import HERMITE_N_MAX, hermite_functions

DECAY_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_j = x_min + j dx``, ``j = 0 .. n-1``, ``dx = (x_max - x_min)/n``."""

    x_min: float = -12.0
    x_max: float = 12.0
    n: int = 512

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise DomainError(f"grid size must be a power of two >= 16, got {n!r}")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    @property
    def center(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


class WaveFunction:
    """Complex samples of a wavefunction on a :class:`Grid`.

    The sample array is stored read-only; arithmetic returns new objects.
    """

    __slots__ = ("grid", "samples")

    def __init__(self, grid: Grid, samples):
        s = np.array(samples, dtype=complex)
        if s.shape != (grid.n,):
            raise UsageError(f"expected {grid.n} samples, got shape {s.shape}")
        s.setflags(write=False)
        self.grid = grid
        self.samples = s

    @classmethod
    def from_function(cls, grid: Grid, f) -> "WaveFunction":
        return cls(grid, f(grid.x))

    @property
    def x(self):
        return self.grid.x

    def norm(self) -> float:
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def normalized(self) -> "WaveFunction":
        return self / self.norm()

    def edge_ratio(self) -> float:
        peak = float(np.max(np.abs(self.samples)))
        if peak == 0.0:
            return 0.0
        edge = np.abs(np.concatenate([self.samples[:2], self.samples[-2:]]))
        return float(np.max(edge)) / peak

    def boundary_ok(self, tol: float = DECAY_TOL) -> bool:
        return self.edge_ratio() < tol

    def _check_other(self, other):
        if not isinstance(other, WaveFunction):
            return NotImplemented
        if other.grid != self.grid:
            raise UsageError("wavefunctions live on different grids")
        return other

    def __add__(self, other):
        other = self._check_other(other)
        if other is NotImplemented:
            return other
        return WaveFunction(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        other = self._check_other(other)
        if other is NotImplemented:
            return other
        return WaveFunction(self.grid, self.samples - other.samples)

    def __mul__(self, scalar):
        if isinstance(scalar, WaveFunction):
            return NotImplemented
        return WaveFunction(self.grid, self.samples * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return WaveFunction(self.grid, self.samples / complex(scalar))

    def __neg__(self):
        return WaveFunction(self.grid, -self.samples)

    def __repr__(self):
        return f"WaveFunction(grid={self.grid!r}, norm={self.norm():.6g})"


@dataclass(frozen=True)
class LadderData:
    """Auxiliary-solution data at one time, enough to build the ladder operators.

    ``omega0 = 2 sqrt(C0)``; it must be positive for :func:`ladder` and
    :func:`hermite_mode`, while :func:`apply_quadratic_invariant` takes
    ``C0`` separately and accepts any sign.
    """

    kappa: float
    kappap: float
    cpd: float
    a_t: float
    omega0: float = 2.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.a_t == 0:
            raise DomainError("a(t) must be nonzero")

    @property
    def h(self) -> float:
        """``(kappa' - (c + d) kappa) / (2a)``."""
        return (self.kappap - self.cpd * self.kappa) / (2.0 * self.a_t)

    @property
    def C0(self) -> float:
        return 0.25 * self.omega0 ** 2

    @property
    def epsilon(self) -> float:
        """Scale of the local coordinate ``eps x``: ``eps**2 = sqrt(C0) / kappa**2``."""
        return math.sqrt(0.5 * self.omega0) / self.kappa

    def _require_ladder(self):
        if not self.omega0 > 0:
            raise ModeError(f"ladder form needs omega0 > 0, got {self.omega0}")


# ---------------------------------------------------------------------------
# elementary actions


def _warn_decay(wf: WaveFunction, what: str):
    ratio = wf.edge_ratio()
    if ratio >= DECAY_TOL:
        warnings.warn(f"{what}: edge amplitude ratio {ratio:.2e} exceeds {DECAY_TOL:g}; "
                      "the periodic derivative may be inaccurate", AccuracyWarning, stacklevel=3)


def spectral_derivative(samples: np.ndarray, grid: Grid) -> np.ndarray:
    """``d/dx`` of periodic samples; the Nyquist mode is dropped."""
    k = grid.k
    if grid.n % 2 == 0:
        k = k.copy()
        k[grid.n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(samples))


def apply_p(wf: WaveFunction) -> WaveFunction:
    """``p psi = -i psi'`` by Fourier differentiation."""
    _warn_decay(wf, "apply_p")
    return WaveFunction(wf.grid, -1j * spectral_derivative(wf.samples, wf.grid))


def apply_x(wf: WaveFunction) -> WaveFunction:
    return WaveFunction(wf.grid, wf.grid.x * wf.samples)


def apply_linear_invariant(A: float, B: float, C: complex, wf: WaveFunction) -> WaveFunction:
    """``(A p + B x + C) psi``."""
    out = C * wf.samples + B * wf.grid.x * wf.samples
    if A != 0:
        out = out + A * apply_p(wf).samples
    return WaveFunction(wf.grid, out)


def apply_quadratic_invariant(ld: LadderData, lam: float, C0: float, wf: WaveFunction) -> WaveFunction:
    """``lam [(kappa p + g x)**2 + (C0/kappa**2) x**2] psi`` with ``g = -ld.h``."""
    x = wf.grid.x
    g = -ld.h

    def q(s):
        return ld.kappa * (-1j) * spectral_derivative(s, wf.grid) + g * x * s

    _warn_decay(wf, "apply_quadratic_invariant")
    s = wf.samples
    out = q(q(s)) + (C0 / ld.kappa ** 2) * x * x * s
    return WaveFunction(wf.grid, lam * out)


def ladder(ld: LadderData, wf: WaveFunction, direction: str) -> WaveFunction:
    """Apply the lowering (``"lower"``) or raising (``"raise"``) operator.

    ``a = (sqrt(w0)/(2 kappa) - i h/sqrt(w0)) x + (kappa/sqrt(w0)) d/dx`` and
    ``a^+ = (sqrt(w0)/(2 kappa) + i h/sqrt(w0)) x - (kappa/sqrt(w0)) d/dx``.
    """
    ld._require_ladder()
    if direction not in ("lower", "raise"):
        raise UsageError(f"direction must be 'lower' or 'raise', got {direction!r}")
    _warn_decay(wf, "ladder")
    r = math.sqrt(ld.omega0)
    sign = 1.0 if direction == "lower" else -1.0
    coef_x = r / (2.0 * ld.kappa) - sign * 1j * ld.h / r
    ds = spectral_derivative(wf.samples, wf.grid)
    return WaveFunction(wf.grid, coef_x * wf.grid.x * wf.samples + sign * (ld.kappa / r) * ds)


def hermite_mode(n: int, ld: LadderData, grid: Grid) -> WaveFunction:
    """Eigenfunction ``Psi_n`` of the quadratic invariant at the time encoded in ``ld``.

    ``Psi_n = exp(i h x**2 / (2 kappa)) sqrt(eps) phi_n(eps x)`` with
    ``phi_n`` the orthonormal Hermite function, so ``C_n`` is positive.
    """
    ld._require_ladder()
    if not (isinstance(n, (int, np.integer)) and 0 <= n <= HERMITE_N_MAX):
        raise UsageError(f"mode index must be an integer in [0, {HERMITE_N_MAX}], got {n!r}")
    eps = ld.epsilon
    x = grid.x
    phi = hermite_functions(int(n), eps * x)[n]
    chirp = np.exp(1j * ld.h / (2.0 * ld.kappa) * x * x)
    return WaveFunction(grid, chirp * math.sqrt(eps) * phi)


def hermite_modes(n_max: int, ld: LadderData, grid: Grid) -> np.ndarray:
    """All ``Psi_0 .. Psi_{n_max}`` as rows of a complex array."""
    ld._require_ladder()
    eps = ld.epsilon
    x = grid.x
    chirp = np.exp(1j * ld.h / (2.0 * ld.kappa) * x * x)
    return chirp[None, :] * math.sqrt(eps) * hermite_functions(n_max, eps * x)


def decay_safe_mode_bound(ld: LadderData, grid: Grid, tol: float = DECAY_TOL) -> int:
    """Largest ``n <= 64`` such that ``Psi_0 .. Psi_n`` all pass the edge-decay check."""
    modes = np.abs(hermite_modes(HERMITE_N_MAX, ld, grid))
    edges = np.concatenate([modes[:, :2], modes[:, -2:]], axis=1).max(axis=1)
    ok = edges < tol * modes.max(axis=1)
    bad = np.flatnonzero(~ok)
    return HERMITE_N_MAX if bad.size == 0 else int(bad[0]) - 1


def hamiltonian_samples(coeffs, t: float, samples: np.ndarray, grid: Grid) -> np.ndarray:
    """``(a p**2 + b x**2 + c p x + d x p)`` applied to raw periodic samples.

    No decay check: callers that pass non-decaying data (windowed kernels)
    restrict their use of the result to the grid interior.
    """
    a, b, c, d = (float(v) for v in coeffs.values(t))
    x = grid.x
    ds = spectral_derivative(samples, grid)
    dds = spectral_derivative(ds, grid)
    pxs = -1j * spectral_derivative(x * samples, grid)
    xps = -1j * x * ds
    return -a * dds + b * x * x * samples + c * pxs + d * xps


def apply_hamiltonian(coeffs, t: float, wf: WaveFunction) -> WaveFunction:
    """``H(t) psi`` for the quadratic Hamiltonian with coefficients ``coeffs``."""
    _warn_decay(wf, "apply_hamiltonian")
    return WaveFunction(wf.grid, hamiltonian_samples(coeffs, t, wf.samples, wf.grid))


def inner_product(wf1: WaveFunction, wf2: WaveFunction) -> complex:
    """``int conj(psi1) psi2 dx`` by the trapezoid rule on the periodic grid."""
    if wf1.grid != wf2.grid:
        raise UsageError("inner product of wavefunctions on different grids")
    return complex(wf1.grid.dx * np.vdot(wf1.samples, wf2.samples))


def l2_distance(wf1: WaveFunction, wf2: WaveFunction) -> float:
    return (wf1 - wf2).norm()


# ---------------------------------------------------------------------------
# windowing for states that do not decay (kernels sampled in x)


def smooth_window(grid: Grid, x: np.ndarray | None = None) -> np.ndarray:
    """Even erfc window centred on the grid.

    Equal to 1 within 1e-12 on :func:`interior_mask` and below 1e-15 at
    the edges, so windowed chirps can be differentiated spectrally.
    """
    x = grid.x if x is None else x
    half = 0.5 * grid.span
    edge, width = 0.7 * half, 0.05 * half
    return 0.5 * erfc((np.abs(x - grid.center) - edge) / width)


def interior_mask(grid: Grid) -> np.ndarray:
    half = 0.5 * grid.span
    return np.abs(grid.x - grid.center) <= 0.7 * half - 5.3 * 0.05 * half


# ---------------------------------------------------------------------------
# CSV


def to_csv(wf: WaveFunction, path=None, *, density: bool = False) -> str:
    """Write ``x, re, im`` (and ``abs2`` when ``density``) with 17 significant digits.

    Returns the text; also writes it to ``path`` when given.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "re", "im"] + (["abs2"] if density else []))
    for x, s in zip(wf.grid.x, wf.samples):
        row = [format(x, ".17g"), format(s.real, ".17g"), format(s.imag, ".17g")]
        if density:
            row.append(format(abs(s) ** 2, ".17g"))
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def from_csv(path, grid: Grid | None = None) -> WaveFunction:
    """Read a file written by :func:`to_csv`.  The grid is inferred unless given."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:3] != ["x", "re", "im"]:
        raise UsageError(f"unexpected CSV header {header}")
    data = np.array([[float(v) for v in r[:3]] for r in body])
    if grid is None:
        x = data[:, 0]
        dx = x[1] - x[0]
        grid = Grid(float(x[0]), float(x[0] + dx * len(x)), len(x))
    return WaveFunction(grid, data[:, 1] + 1j * data[:, 2])
