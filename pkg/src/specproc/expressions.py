"""Small expression grammar for densities and lattice weights.

Expressions are functions of a single variable written with constants,
``+ - * / **``, ``abs`` and ``exp`` (plus the constants ``pi`` and ``e``).
They are parsed through :mod:`ast` against a strict whitelist, compiled once,
and evaluated vectorized over numpy arrays.

Besides evaluation, the parser derives a coarse asymptotic certificate
(leading power at infinity, Gaussian/exponential rates, singularity exponent
at the origin) which the measure layer uses to certify integrability and
tail bounds.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_ALLOWED_CALLS = {"abs", "exp"}
_ALLOWED_NAMES = {"u", "n", "x", "pi", "e"}


@dataclass(frozen=True)
class Asymptotics:
    """Leading behavior ``sign * coeff * |u|^power * exp(gauss*u^2 + expo*|u|)``.

    ``sign`` is +1, -1 or 0 when known, None when it could not be determined.
    ``zero_exponent`` describes the |u|^a factor as u -> 0 (0 for regular
    expressions, negative for an integrable singularity at the origin).
    ``monomial`` is set when the expression is exactly ``coeff * |u|^power``.
    """

    coeff: float
    power: float
    gauss: float = 0.0
    expo: float = 0.0
    sign: float | None = 1.0
    zero_exponent: float = 0.0
    monomial: bool = False

    def dominates(self, other: "Asymptotics") -> bool:
        """True if self grows strictly faster than other at infinity."""
        if self.gauss != other.gauss:
            return self.gauss > other.gauss
        if self.expo != other.expo:
            return self.expo > other.expo
        return self.power > other.power

    @property
    def polynomial_bounded(self) -> bool:
        """True when the expression grows at most polynomially."""
        return self.gauss <= 0 and (self.gauss < 0 or self.expo <= 0)


def _combine_sum(a: Asymptotics, b: Asymptotics, flip_b=False) -> Asymptotics:
    sb = b.sign
    if flip_b and sb is not None:
        sb = -sb
    if a.coeff == 0:
        return Asymptotics(b.coeff, b.power, b.gauss, b.expo, sb,
                           b.zero_exponent, b.monomial and not flip_b)
    if b.coeff == 0:
        return a
    zero_exp = min(a.zero_exponent, b.zero_exponent)
    if a.dominates(b):
        lead = a
        sign = a.sign
    elif b.dominates(a):
        lead = b
        sign = sb
    else:
        # equal growth: coefficients may cancel, keep a safe upper envelope
        lead = a
        sign = a.sign if (a.sign is not None and a.sign == sb) else None
        return Asymptotics(a.coeff + b.coeff, a.power, a.gauss, a.expo,
                           sign, zero_exp, False)
    return Asymptotics(lead.coeff, lead.power, lead.gauss, lead.expo,
                       sign, zero_exp, False)


def _combine_product(a: Asymptotics, b: Asymptotics, divide=False) -> Asymptotics:
    if divide:
        if b.coeff == 0:
            raise ConfigError("division by an identically-zero expression")
        b = Asymptotics(1.0 / b.coeff, -b.power, -b.gauss, -b.expo,
                        b.sign, -b.zero_exponent, b.monomial)
    sign = None
    if a.sign is not None and b.sign is not None:
        sign = a.sign * b.sign
    return Asymptotics(a.coeff * b.coeff, a.power + b.power,
                       a.gauss + b.gauss, a.expo + b.expo, sign,
                       a.zero_exponent + b.zero_exponent,
                       a.monomial and b.monomial)


class _Analyzer(ast.NodeVisitor):
    """Walks the whitelisted AST and returns Asymptotics bottom-up."""

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        if not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric constant {node.value!r}")
        v = float(node.value)
        return Asymptotics(abs(v), 0.0, sign=float(np.sign(v)), monomial=True)

    def visit_Name(self, node):
        if node.id in ("pi", "e"):
            v = math.pi if node.id == "pi" else math.e
            return Asymptotics(v, 0.0, sign=1.0, monomial=True)
        if node.id in ("u", "n", "x"):
            # sign unknown (u can be negative), magnitude |u|
            return Asymptotics(1.0, 1.0, sign=None, zero_exponent=1.0,
                               monomial=True)
        raise ConfigError(f"unknown name {node.id!r}")

    def visit_UnaryOp(self, node):
        a = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            s = None if a.sign is None else -a.sign
            return Asymptotics(a.coeff, a.power, a.gauss, a.expo, s,
                               a.zero_exponent, a.monomial)
        if isinstance(node.op, ast.UAdd):
            return a
        raise ConfigError(f"operator {type(node.op).__name__} not allowed")

    def visit_BinOp(self, node):
        a = self.visit(node.left)
        if isinstance(node.op, ast.Pow):
            if not isinstance(node.right, (ast.Constant, ast.UnaryOp)):
                raise ConfigError("exponent must be a numeric constant")
            try:
                c = float(eval(compile(ast.Expression(node.right), "<expr>", "eval")))
            except Exception as exc:
                raise ConfigError(f"bad exponent: {exc}") from exc
            sign = a.sign
            if sign is None and c == int(c) and int(c) % 2 == 0:
                sign = 1.0
            return Asymptotics(a.coeff ** c, a.power * c, a.gauss * c,
                               a.expo * c, sign, a.zero_exponent * c,
                               a.monomial)
        b = self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return _combine_sum(a, b)
        if isinstance(node.op, ast.Sub):
            return _combine_sum(a, b, flip_b=True)
        if isinstance(node.op, ast.Mult):
            return _combine_product(a, b)
        if isinstance(node.op, ast.Div):
            return _combine_product(a, b, divide=True)
        raise ConfigError(f"operator {type(node.op).__name__} not allowed")

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            raise ConfigError("only abs() and exp() calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id}() takes exactly one argument")
        a = self.visit(node.args[0])
        if node.func.id == "abs":
            return Asymptotics(a.coeff, a.power, a.gauss, a.expo, 1.0,
                               a.zero_exponent, a.monomial)
        # exp(argument): classify the argument's leading power
        if a.sign is None:
            raise ConfigError("exp() argument must have a determinable sign")
        rate = a.sign * a.coeff
        if a.coeff == 0 or a.power == 0:
            scale = math.exp(rate) if a.coeff else 1.0
            return Asymptotics(scale, 0.0, sign=1.0)
        if a.power == 1:
            return Asymptotics(1.0, 0.0, expo=rate, sign=1.0)
        if a.power == 2:
            return Asymptotics(1.0, 0.0, gauss=rate, sign=1.0)
        # faster than quadratic: collapse onto the gauss slot
        return Asymptotics(1.0, 0.0, gauss=math.copysign(math.inf, rate),
                           sign=1.0)

    def generic_visit(self, node):
        raise ConfigError(f"syntax {type(node).__name__} not allowed in expressions")


class Expression:
    """A compiled one-variable expression with an asymptotic certificate."""

    def __init__(self, source: str, variable: str = "u"):
        if variable not in _ALLOWED_NAMES:
            raise ConfigError(f"unsupported variable {variable!r}")
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc}",
                              position=exc.offset) from exc
        for sub in ast.walk(tree):
            if isinstance(sub, ast.Name) and \
                    sub.id not in (_ALLOWED_NAMES | _ALLOWED_CALLS):
                raise ConfigError(f"unknown name {sub.id!r} in {source!r}")
        self.source = source
        self.variable = variable
        self.asymptotics = _Analyzer().visit(tree)
        self._code = compile(tree, "<expression>", "eval")
        self._globals = {"__builtins__": {}, "abs": np.abs, "exp": np.exp,
                         "pi": np.pi, "e": np.e}

    def __call__(self, u):
        arr = np.asarray(u, dtype=float)
        env = dict.fromkeys(("u", "n", "x"), arr)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = eval(self._code, self._globals, env)
        return np.broadcast_to(np.asarray(out, dtype=float), arr.shape).copy() \
            if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def check_nonnegative(self, lo=-50.0, hi=50.0, samples=4001):
        """Probe the expression on a grid and reject negative values."""
        pts = np.linspace(lo, hi, samples)
        pts = pts[np.abs(pts) > 1e-12]
        vals = self(pts)
        vals = vals[np.isfinite(vals)]
        if vals.size and vals.min() < -1e-12 * max(1.0, float(np.abs(vals).max())):
            raise ConfigError(
                f"expression {self.source!r} takes negative values "
                f"(min {vals.min():.3g} on probe grid)")
