"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Poly` maps exponent tuples to :class:`fractions.Fraction`
coefficients. Instances are treated as immutable values: every operation
returns a new polynomial.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

Monomial = Tuple[int, ...]


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    if isinstance(value, np.integer):
        return Fraction(int(value))
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def grlex_key(mono: Monomial):
    """Sort key for graded lexicographic order (highest first when reversed)."""
    return (sum(mono), mono)


class Poly:
    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Monomial, object] | None = None):
        self.nvars = nvars
        clean: Dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                if len(mono) != nvars:
                    raise ValueError(f"monomial {mono} does not have {nvars} variables")
                c = as_fraction(c)
                if c:
                    clean[tuple(mono)] = clean.get(tuple(mono), Fraction(0)) + c
            clean = {m: c for m, c in clean.items() if c}
        self.terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        mono = [0] * nvars
        mono[i] = 1
        return cls(nvars, {tuple(mono): 1})

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Monomial, Fraction]) -> "Poly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # -- basic queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def sorted_terms(self) -> Iterator[Tuple[Monomial, Fraction]]:
        for mono in sorted(self.terms, key=grlex_key, reverse=True):
            yield mono, self.terms[mono]

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.const(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials over different variable sets")
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = as_fraction(other)
            if not c:
                return Poly.zero(self.nvars)
            return Poly._raw(self.nvars, {m: v * c for m, v in self.terms.items()})
        other = self._coerce(other)
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Poly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Poly":
        c = as_fraction(other)
        return self * (1 / c)

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus and composition -------------------------------------------
    def diff(self, i: int) -> "Poly":
        out: Dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = list(m)
                mm[i] = e - 1
                out[tuple(mm)] = c * e
        return Poly._raw(self.nvars, out)

    def coefficient_in(self, i: int, power: int) -> "Poly":
        """Coefficient of ``x_i**power`` viewed as a polynomial in x_i (x_i set to 0)."""
        out = {}
        for m, c in self.terms.items():
            if m[i] == power:
                mm = list(m)
                mm[i] = 0
                out[tuple(mm)] = c
        return Poly._raw(self.nvars, out)

    def subs(self, values: Mapping[int, object]) -> "Poly":
        """Substitute exact scalars for some variables (variable count unchanged)."""
        vals = {i: as_fraction(v) for i, v in values.items()}
        out: Dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            mm = list(m)
            for i, v in vals.items():
                if mm[i]:
                    c = c * v ** mm[i]
                    mm[i] = 0
            if c:
                key = tuple(mm)
                s = out.get(key, 0) + c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return Poly._raw(self.nvars, out)

    def compose(self, images: Sequence["Poly"]) -> "Poly":
        """Return ``self(images[0], ..., images[n-1])``."""
        if len(images) != self.nvars:
            raise ValueError("need one image polynomial per variable")
        if not images:
            return Poly._raw(0, dict(self.terms))
        target = images[0].nvars
        powers: Dict[Tuple[int, int], Poly] = {}

        def power(i, e):
            key = (i, e)
            if key not in powers:
                powers[key] = images[i] ** e
            return powers[key]

        result = Poly.zero(target)
        for m, c in self.terms.items():
            term = Poly.const(target, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def embed(self, nvars: int, offset: int = 0) -> "Poly":
        """Re-express in ``nvars`` variables, shifting variable i to i + offset."""
        out = {}
        for m, c in self.terms.items():
            mm = [0] * nvars
            for i, e in enumerate(m):
                if e:
                    mm[i + offset] = e
            out[tuple(mm)] = c
        return Poly._raw(nvars, out)

    def restrict(self, keep: Sequence[int]) -> "Poly":
        """Drop variables not in ``keep``; they must not occur."""
        out = {}
        keep_set = set(keep)
        for m, c in self.terms.items():
            if any(e for i, e in enumerate(m) if i not in keep_set):
                raise ValueError("restricting away a variable that occurs")
            out[tuple(m[i] for i in keep)] = c
        return Poly._raw(len(keep), out)

    # -- evaluation ---------------------------------------------------------
    def __call__(self, point: Sequence) -> Fraction:
        """Exact evaluation at a point of rationals."""
        pt = [as_fraction(v) for v in point]
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in zip(pt, m):
                if e:
                    term *= v ** e
            total += term
        return total

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Float evaluation on an ``(N, nvars)`` array of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        out = np.zeros(pts.shape[0])
        for m, c in self.terms.items():
            term = np.full(pts.shape[0], float(c))
            for i, e in enumerate(m):
                if e:
                    term = term * pts[:, i] ** e
            out += term
        return out

    def interval(self, lo: Sequence[float], hi: Sequence[float]) -> Tuple[float, float]:
        """Enclosure of the range over the box ``[lo, hi]`` by interval arithmetic."""
        total_lo = total_hi = 0.0
        for m, c in self.terms.items():
            a, b = 1.0, 1.0
            for i, e in enumerate(m):
                if not e:
                    continue
                l, h = lo[i] ** e, hi[i] ** e
                if e % 2 == 0 and lo[i] < 0 < hi[i]:
                    pl, ph = 0.0, max(l, h)
                else:
                    pl, ph = min(l, h), max(l, h)
                cands = (a * pl, a * ph, b * pl, b * ph)
                a, b = min(cands), max(cands)
            c = float(c)
            if c >= 0:
                total_lo += c * a
                total_hi += c * b
            else:
                total_lo += c * b
                total_hi += c * a
        return total_lo, total_hi

    # -- display --------------------------------------------------------------
    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors)
                text = body if mag == 1 else f"{mag}*{body}"
            else:
                text = str(mag)
            parts.append(("-" if c < 0 else "+", text))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __repr__(self) -> str:
        return f"Poly({self.to_string()})"


def variables(nvars: int) -> list:
    return [Poly.var(nvars, i) for i in range(nvars)]


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list:
    """Exact basis of ``{v : M v = 0}`` via reduced row echelon form.

    Basis vectors come out in the order of the free columns, each with a 1
    in its own free column, so the result is deterministic.
    """
    m = [[as_fraction(x) for x in row] for row in rows if any(row)]
    pivots = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            v[pc] = -m[row_idx][fc]
        basis.append(tuple(v))
    return basis


def rank(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    return ncols - len(nullspace(rows, ncols))
