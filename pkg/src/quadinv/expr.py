"""Small closed grammar for time-dependent coefficients.

Expressions are built from constants, integer powers of ``t``, ``exp(k*t)``,
``cos(k*t)``, ``sin(k*t)`` and sums, differences and products of these.
Every node knows its exact derivative, so coefficient derivatives never
go through numerical differentiation.

>>> e = parse("0.5*exp(-0.2*t)")
>>> float(e(0.0)), float(e.deriv()(0.0))
(0.5, -0.1)
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


class Expr:
    def __call__(self, t):
        raise NotImplementedError

    def deriv(self) -> "Expr":
        raise NotImplementedError

    def __add__(self, other):
        return Add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Add(self, Mul(Const(-1.0), _lift(other)))

    def __rsub__(self, other):
        return Add(_lift(other), Mul(Const(-1.0), self))

    def __mul__(self, other):
        return Mul(self, _lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Mul(Const(-1.0), self)


def _lift(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(float(v))


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float)) + self.value

    def deriv(self):
        return Const(0.0)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Power(Expr):
    """``t**n`` for integer ``n >= 1``."""

    n: int

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.n

    def deriv(self):
        if self.n == 1:
            return Const(1.0)
        return Mul(Const(float(self.n)), Power(self.n - 1))

    def __str__(self):
        return "t" if self.n == 1 else f"t**{self.n}"


@dataclass(frozen=True)
class Exp(Expr):
    k: float

    def __call__(self, t):
        return np.exp(self.k * np.asarray(t, dtype=float))

    def deriv(self):
        return Mul(Const(self.k), self)

    def __str__(self):
        return f"exp({self.k!r}*t)"


@dataclass(frozen=True)
class Cos(Expr):
    k: float

    def __call__(self, t):
        return np.cos(self.k * np.asarray(t, dtype=float))

    def deriv(self):
        return Mul(Const(-self.k), Sin(self.k))

    def __str__(self):
        return f"cos({self.k!r}*t)"


@dataclass(frozen=True)
class Sin(Expr):
    k: float

    def __call__(self, t):
        return np.sin(self.k * np.asarray(t, dtype=float))

    def deriv(self):
        return Mul(Const(self.k), Cos(self.k))

    def __str__(self):
        return f"sin({self.k!r}*t)"


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def __call__(self, t):
        return self.left(t) + self.right(t)

    def deriv(self):
        return Add(self.left.deriv(), self.right.deriv())

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def __call__(self, t):
        return self.left(t) * self.right(t)

    def deriv(self):
        return Add(Mul(self.left.deriv(), self.right), Mul(self.left, self.right.deriv()))

    def __str__(self):
        return f"{self.left}*{self.right}"


_FUNCS = {"exp": Exp, "cos": Cos, "sin": Sin}


def _rate(node: ast.AST, source: str) -> float:
    """Extract ``k`` from an argument of the form ``k*t``, ``t*k``, ``t`` or ``-k*t``."""
    if isinstance(node, ast.Name) and node.id == "t":
        return 1.0
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        k = _rate(node.operand, source)
        return -k if isinstance(node.op, ast.USub) else k
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        for lhs, rhs in ((node.left, node.right), (node.right, node.left)):
            if isinstance(rhs, ast.Name) and rhs.id == "t":
                return _number(lhs, source)
    raise UsageError(f"function argument must be k*t in {source!r}")


def _number(node: ast.AST, source: str) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _number(node.operand, source)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Div, ast.Mult)):
        lhs, rhs = _number(node.left, source), _number(node.right, source)
        return lhs / rhs if isinstance(node.op, ast.Div) else lhs * rhs
    raise UsageError(f"expected a numeric constant in {source!r}")


def _build(node: ast.AST, source: str) -> Expr:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id == "t":
            return Power(1)
        raise UsageError(f"unknown name {node.id!r} in {source!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand, source)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return Add(_build(node.left, source), _build(node.right, source))
        if isinstance(node.op, ast.Sub):
            return _build(node.left, source) - _build(node.right, source)
        if isinstance(node.op, ast.Mult):
            return Mul(_build(node.left, source), _build(node.right, source))
        if isinstance(node.op, ast.Div):
            # division only by constants keeps derivatives closed-form
            return Mul(_build(node.left, source), Const(1.0 / _number(node.right, source)))
        if isinstance(node.op, ast.Pow):
            base, power = node.left, _number(node.right, source)
            if not (isinstance(base, ast.Name) and base.id == "t"):
                raise UsageError(f"only t may be raised to a power in {source!r}")
            if power != int(power) or power < 0:
                raise UsageError(f"powers of t must be non-negative integers in {source!r}")
            return Const(1.0) if power == 0 else Power(int(power))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name == "poly":
            # poly(c0, c1, ...) = c0 + c1*t + c2*t**2 + ...
            if not node.args:
                raise UsageError(f"poly() needs at least one coefficient in {source!r}")
            out: Expr = Const(_number(node.args[0], source))
            for i, arg in enumerate(node.args[1:], start=1):
                out = Add(out, Mul(Const(_number(arg, source)), Power(i)))
            return out
        if name in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[name](_rate(node.args[0], source))
    raise UsageError(f"unsupported construct in coefficient expression {source!r}")


def parse(source: str | float | int) -> Expr:
    """Parse a coefficient expression into an :class:`Expr`.

    Numbers are accepted directly and become constants.
    """
    if isinstance(source, (int, float)):
        return Const(float(source))
    try:
        tree = ast.parse(str(source), mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse coefficient expression {source!r}: {exc.msg}") from exc
    return _build(tree.body, str(source))
