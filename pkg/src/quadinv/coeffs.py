"""Hamiltonian coefficient models.

The Hamiltonian is ``H = a(t) p**2 + b(t) x**2 + c(t) p x + d(t) x p`` with
``p = -i d/dx``.  A :class:`CoefficientSet` bundles the four coefficient
functions with their exact derivatives and the time interval on which
they are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import expr as _expr
from .errors import DomainError

DEFAULT_T_MAX = 3.0

Func = Callable[[float], float]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients ``a, b, c, d`` and their time derivatives on ``[0, t_max]``.

    All callables must accept scalars and numpy arrays.
    """

    a: Func
    b: Func
    c: Func
    d: Func
    da: Func
    db: Func
    dc: Func
    dd: Func
    t_max: float = DEFAULT_T_MAX
    name: str = "custom"
    source: Mapping[str, str] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.t_max > 0:
            raise DomainError(f"t_max must be positive, got {self.t_max}")
        ts = np.linspace(0.0, self.t_max, 101)
        vals = [np.asarray(f(ts), dtype=float) for f in self.functions()]
        if not all(np.all(np.isfinite(v)) for v in vals):
            raise DomainError(f"coefficients of {self.name!r} are not finite on [0, {self.t_max}]")
        if np.any(vals[0] == 0.0) or np.any(np.sign(vals[0]) != np.sign(vals[0][0])):
            raise DomainError(f"a(t) vanishes on the domain of {self.name!r}")

    def functions(self):
        return (self.a, self.b, self.c, self.d, self.da, self.db, self.dc, self.dd)

    def check_time(self, t, *, where="t"):
        tt = np.asarray(t, dtype=float)
        # tolerate rounding at the right end of the interval
        if np.any(tt < 0.0) or np.any(tt > self.t_max * (1 + 1e-12)):
            raise DomainError(f"{where} = {t} outside [0, {self.t_max}] for {self.name!r}")

    def values(self, t):
        return self.a(t), self.b(t), self.c(t), self.d(t)

    def derivatives(self, t):
        return self.da(t), self.db(t), self.dc(t), self.dd(t)

    def with_t_max(self, t_max: float) -> "CoefficientSet":
        return CoefficientSet(*self.functions(), t_max=t_max, name=self.name, source=self.source)

    def __reduce__(self):
        # presets and inline specs are rebuilt from their description, so
        # instances can cross process boundaries in batch runs
        if self.source is None:
            raise TypeError(f"coefficient set {self.name!r} has no serialisable source")
        return (from_inline, (dict(self.source), self.t_max, self.name))


def from_exprs(a, b, c, d, *, t_max=DEFAULT_T_MAX, name="custom", source=None) -> CoefficientSet:
    """Build a coefficient set from :mod:`quadinv.expr` nodes (derivatives by rule)."""
    exprs = [_expr.parse(e) if not isinstance(e, _expr.Expr) else e for e in (a, b, c, d)]
    if source is None:
        source = {k: str(e) for k, e in zip("abcd", exprs)}
    return CoefficientSet(*exprs, *(e.deriv() for e in exprs), t_max=t_max, name=name, source=source)


def from_inline(spec: Mapping[str, str | float], t_max=DEFAULT_T_MAX, name="inline") -> CoefficientSet:
    """Coefficient set from a mapping ``{"a": "...", "b": ..., "c": ..., "d": ...}``.

    Missing ``b``, ``c`` or ``d`` default to zero; ``a`` is required.
    """
    if "a" not in spec:
        raise DomainError("inline coefficient spec needs at least 'a'")
    unknown = set(spec) - set("abcd")
    if unknown:
        raise DomainError(f"unknown coefficient names {sorted(unknown)}")
    src = {k: spec.get(k, 0.0) for k in "abcd"}
    return from_exprs(*(src[k] for k in "abcd"), t_max=t_max, name=name,
                      source={k: str(v) for k, v in src.items()})


_PRESET_SPECS = {
    "free": {"a": "0.5", "b": "0", "c": "0", "d": "0"},
    "sho": {"a": "0.5", "b": "0.5", "c": "0", "d": "0"},
    "parametric": {"a": "0.5", "b": "0.5 + 0.1*cos(t)", "c": "0", "d": "0"},
    "caldirola_kanai": {"a": "0.5*exp(-0.2*t)", "b": "0.5*exp(0.2*t)", "c": "0", "d": "0"},
    "skew": {"a": "0.5", "b": "0.5", "c": "0.3", "d": "0.1"},
}

PRESET_NAMES = tuple(_PRESET_SPECS)

_preset_cache: dict[str, CoefficientSet] = {}


def preset(name: str) -> CoefficientSet:
    """Return the named preset.  Repeated calls return the same object."""
    if name not in _PRESET_SPECS:
        raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    if name not in _preset_cache:
        _preset_cache[name] = from_inline(_PRESET_SPECS[name], name=name)
    return _preset_cache[name]


def tau_sigma(coeffs: CoefficientSet, t):
    """Damping and stiffness functions of the characteristic equation.

    ``tau = a'/a + 2c - 2d`` and ``sigma = ab - cd + (c a'/a - c')/2``.
    The last term is written without dividing by ``c`` so that ``c = 0``
    is regular.
    """
    coeffs.check_time(t)
    a, b, c, d = coeffs.values(t)
    da, _, dc, _ = coeffs.derivatives(t)
    if np.any(np.asarray(a) == 0.0):
        raise DomainError(f"a(t) = 0 at t = {t}")
    tau = da / a + 2.0 * c - 2.0 * d
    sigma = a * b - c * d + 0.5 * (c * da / a - dc)
    return tau, sigma


def sigma_unregularized(coeffs: CoefficientSet, t):
    """``ab - cd + (c/2)(a'/a - c'/c)``, defined only where ``c != 0``."""
    a, b, c, d = coeffs.values(t)
    da, _, dc, _ = coeffs.derivatives(t)
    return a * b - c * d + 0.5 * c * (da / a - dc / c)


def lambda_factor(coeffs: CoefficientSet, t):
    """``exp(int_0^t (c - d) ds)`` from the engine's shared quadrature state."""
    from .ode_engine import quadratures

    coeffs.check_time(t)
    return np.exp(quadratures(coeffs).cd(t))
