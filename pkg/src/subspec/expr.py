"""Expression language for potentials and weights.

A small recursive-descent parser turns strings such as ``x^2 + y^2``,
``y^2*x - 2*y*t`` or ``exp(-x^2/2) * abs(t)^(1/2)`` into sympy
expressions over the coordinate symbols of a group model. From there an
expression can be turned into an exact :class:`~subspec.poly.Poly`, a
vectorized numpy callable, or differentiated symbolically.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' [expr (',' expr)*] ')' | '(' expr ')'

Top-level commas separate the components of a vector-valued polynomial.
"""

from __future__ import annotations

import re
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
import sympy as sp

from .errors import ExpressionError, NotPolynomial
from .group_model import GroupModel, variable_aliases
from .poly import Poly

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

_FUNCTIONS: Dict[str, Callable] = {
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
    "sin": sp.sin,
    "cos": sp.cos,
}


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ExpressionError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(_Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


def coordinate_symbols(model: GroupModel) -> List[sp.Symbol]:
    return [sp.Symbol(name, real=True) for name in model.names]


def norm_expression(model: GroupModel) -> sp.Expr:
    """The homogeneous norm as a sympy expression in the coordinates."""
    syms = coordinate_symbols(model)
    if model.norm_kind == "kaplan":
        horiz = sum(s ** 2 for s in syms[:-1])
        return (horiz ** 2 + 16 * syms[-1] ** 2) ** sp.Rational(1, 4)
    model._require_stratified()
    parts = [sp.Abs(s) ** sp.Rational(1, w) for s, w in zip(syms, model.weights)]
    return parts[0] if len(parts) == 1 else sp.Max(*parts)


class _Parser:
    def __init__(self, text: str, model: GroupModel):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        syms = coordinate_symbols(model)
        self.names = {name: syms[idx] for name, idx in variable_aliases(model).items()}
        self.model = model

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ExpressionError(msg, self.text, tok.pos)

    def accept(self, *ops) -> _Token | None:
        if self.tok.kind == "op" and self.tok.text in ops:
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, op):
        if not self.accept(op):
            raise self.error(f"expected {op!r}")

    def components(self) -> List[sp.Expr]:
        out = [self.expr()]
        while self.accept(","):
            out.append(self.expr())
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return out

    def expr(self) -> sp.Expr:
        node = self.term()
        while True:
            if self.accept("+"):
                node = node + self.term()
            elif self.accept("-"):
                node = node - self.term()
            else:
                return node

    def term(self) -> sp.Expr:
        node = self.unary()
        while True:
            if self.accept("*"):
                node = node * self.unary()
            elif (tok := self.accept("/")):
                den = self.unary()
                if den == 0:
                    raise self.error("division by zero", tok)
                node = node / den
            else:
                return node

    def unary(self) -> sp.Expr:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> sp.Expr:
        base = self.atom()
        if self.accept("^", "**"):
            return base ** self.unary()
        return base

    def atom(self) -> sp.Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return sp.Rational(tok.text)
        if tok.kind == "name":
            self.i += 1
            if self.accept("("):
                args = []
                if not self.accept(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                    self.expect(")")
                return self.call(tok, args)
            if tok.text in self.names:
                return self.names[tok.text]
            if tok.text == "pi":
                return sp.pi
            raise self.error(f"unknown variable {tok.text!r}", tok)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "end":
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected {tok.text!r}")

    def call(self, tok, args):
        name = tok.text
        if name == "norm":
            if args:
                raise self.error("norm() takes no arguments", tok)
            return norm_expression(self.model)
        if name not in _FUNCTIONS:
            raise self.error(f"unknown function {name!r}", tok)
        if len(args) != 1:
            raise self.error(f"{name}() takes exactly one argument", tok)
        return _FUNCTIONS[name](args[0])


def parse(text: str, model: GroupModel) -> sp.Expr:
    """Parse a scalar expression."""
    comps = parse_components(text, model)
    if len(comps) != 1:
        raise ExpressionError("expected a scalar expression, got a vector", text, None)
    return comps[0]


def parse_components(text: str, model: GroupModel) -> List[sp.Expr]:
    if not text.strip():
        raise ExpressionError("empty expression", text, 0)
    return _Parser(text, model).components()


def to_poly(expr: sp.Expr, model: GroupModel, text: str = "") -> Poly:
    """Exact polynomial in the model's coordinates, or :class:`NotPolynomial`."""
    syms = coordinate_symbols(model)
    expanded = sp.expand(expr)
    try:
        sp_poly = sp.Poly(expanded, *syms, domain="QQ")
    except (sp.PolynomialError, sp.CoercionFailed, sp.GeneratorsNeeded) as exc:
        raise NotPolynomial(f"not a polynomial with rational coefficients: {expr}", text, None) from exc
    terms = {}
    for mono, coeff in sp_poly.terms():
        c = sp.Rational(coeff)
        terms[tuple(int(e) for e in mono)] = Fraction(int(c.p), int(c.q))
    return Poly(model.dim, terms)


def poly_to_sympy(p: Poly, model: GroupModel) -> sp.Expr:
    syms = coordinate_symbols(model)
    out = sp.Integer(0)
    for mono, c in p.terms.items():
        term = sp.Rational(c.numerator, c.denominator)
        for s, e in zip(syms, mono):
            if e:
                term = term * s ** e
        out += term
    return out


def lambdify(expr: sp.Expr, model: GroupModel) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator taking an ``(N, n)`` array of points."""
    syms = coordinate_symbols(model)
    fn = sp.lambdify(syms, expr, modules="numpy")

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            val = fn(*[pts[:, i] for i in range(pts.shape[1])])
        return np.broadcast_to(np.asarray(val, dtype=float), (pts.shape[0],)).copy()

    evaluate.expr = expr
    return evaluate


def as_evaluator(f, model: GroupModel) -> Callable[[np.ndarray], np.ndarray]:
    """Accept a string, sympy expression, Poly or callable and return a vectorized evaluator."""
    if isinstance(f, str):
        return lambdify(parse(f, model), model)
    if isinstance(f, sp.Basic):
        return lambdify(f, model)
    if isinstance(f, Poly):
        return f.evaluate
    if isinstance(f, (int, float)):
        c = float(f)
        return lambda pts: np.full(np.atleast_2d(pts).shape[0], c)
    if callable(f):
        return f
    raise TypeError(f"cannot evaluate {f!r}")


def vector_norm_squared(components: Sequence[Poly]) -> Poly:
    out = Poly.zero(components[0].nvars)
    for c in components:
        out = out + c * c
    return out
