"""Polynomials on the group and the exact discreteness test for polynomial potentials.

For a potential ``V = f(p)`` with ``p`` polynomial and ``f`` proper, the
operator ``L + V`` has purely discrete spectrum exactly when no nonzero
right-invariant field annihilates ``p``. :func:`right_annihilator`
computes that kernel as an exact rational nullspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegreeSearchOverflow, IdentityFailed
from .expr import parse_components, to_poly
from .group_model import GroupModel, VectorFieldOp, field_combination
from .poly import Poly, as_fraction, grlex_key, nullspace
from .quadrature import unit_ball_points

DISCRETE = "Discrete"
NOT_DISCRETE = "NotDiscrete"


@dataclass(frozen=True)
class GroupPolynomial:
    """Vector-valued polynomial map ``G -> R^m`` in exponential coordinates."""

    components: Tuple[Poly, ...]
    declared_degree: Optional[int] = None

    def __post_init__(self):
        if not self.components:
            raise ValueError("a group polynomial needs at least one component")
        nv = {c.nvars for c in self.components}
        if len(nv) != 1:
            raise ValueError("components must share the coordinate variables")

    @classmethod
    def scalar(cls, p: Poly) -> "GroupPolynomial":
        return cls((p,))

    @classmethod
    def parse(cls, text: str, model: GroupModel) -> "GroupPolynomial":
        """Parse ``"x^2 + y^2"`` or a comma-separated vector ``"x, y"``."""
        return cls(tuple(to_poly(e, model, text) for e in parse_components(text, model)))

    @property
    def nvars(self) -> int:
        return self.components[0].nvars

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def map(self, fn) -> "GroupPolynomial":
        return GroupPolynomial(tuple(fn(c) for c in self.components))

    def scale(self, c) -> "GroupPolynomial":
        return self.map(lambda p: p * c)

    def compose(self, images: Sequence[Poly]) -> "GroupPolynomial":
        return self.map(lambda p: p.compose(images))

    def squared_norm(self) -> Poly:
        """The default potential ``|p|^2``."""
        out = Poly.zero(self.nvars)
        for c in self.components:
            out = out + c * c
        return out

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.stack([c.evaluate(points) for c in self.components], axis=-1)

    def to_string(self, names: Sequence[str]) -> str:
        return ", ".join(c.to_string(names) for c in self.components)


def _as_group_poly(p) -> GroupPolynomial:
    if isinstance(p, GroupPolynomial):
        return p
    if isinstance(p, Poly):
        return GroupPolynomial.scalar(p)
    raise TypeError(f"expected Poly or GroupPolynomial, got {type(p).__name__}")


def apply_field(v: VectorFieldOp, p) -> GroupPolynomial:
    """Apply a first-order operator componentwise, exactly."""
    return _as_group_poly(p).map(v.apply)


def leibman_degree(m: GroupModel, p, cap: Optional[int] = None) -> int:
    """Smallest d such that every (d+1)-fold product of right-invariant basis
    fields kills ``p``.

    By multilinearity it is enough to test products of basis fields. The
    search walks the set of distinct derivatives level by level.
    """
    p = _as_group_poly(p)
    if p.is_zero():
        raise ValueError("the zero polynomial has no Leibman degree")
    if cap is None:
        cap = m.step * p.degree() + 1
    level = {p}
    d = 0
    while True:
        nxt = set()
        for q in level:
            for X in m.right_fields:
                r = apply_field(X, q)
                if not r.is_zero():
                    nxt.add(r)
        if not nxt:
            return d
        d += 1
        if d > cap:
            raise DegreeSearchOverflow(f"Leibman degree exceeds cap {cap}")
        level = nxt


@dataclass(frozen=True)
class AnnihilatorResult:
    kernel_basis: Tuple[Tuple[Fraction, ...], ...]
    verdict: str
    witness: Optional[Tuple[Fraction, ...]] = None
    images: Tuple[GroupPolynomial, ...] = field(default=(), repr=False)

    @property
    def discrete(self) -> bool:
        return self.verdict == DISCRETE

    @property
    def dimension(self) -> int:
        return len(self.kernel_basis)


def right_annihilator(m: GroupModel, p) -> AnnihilatorResult:
    """Kernel of the linear map ``X -> X^R p`` on the Lie algebra.

    The verdict is ``NotDiscrete`` iff the kernel is nonzero. The zero
    polynomial is annihilated by everything; constant potentials never give
    discrete spectrum on a noncompact group.
    """
    p = _as_group_poly(p)
    n = m.dim
    images = tuple(apply_field(X, p) for X in m.right_fields)
    rows = {}
    for j, img in enumerate(images):
        for c_idx, comp in enumerate(img.components):
            for mono, coeff in comp.terms.items():
                rows.setdefault((c_idx, mono), [Fraction(0)] * n)[j] = coeff
    order = sorted(rows, key=lambda key: (key[0], grlex_key(key[1])), reverse=True)
    basis = tuple(nullspace([rows[k] for k in order], n))
    verdict = NOT_DISCRETE if basis else DISCRETE
    return AnnihilatorResult(basis, verdict, basis[0] if basis else None, images)


def field_of(m: GroupModel, X: Sequence, kind: str = "right") -> VectorFieldOp:
    """Invariant field attached to the algebra element with coordinates ``X``."""
    fields = m.right_fields if kind == "right" else m.left_fields
    return field_combination(fields, [as_fraction(x) for x in X])


@dataclass
class WitnessReport:
    identity_holds: bool
    centers: List[Tuple[Fraction, ...]]
    sup_abs: List[float]
    radius: float

    @property
    def uniformly_bounded(self) -> bool:
        s = np.asarray(self.sup_abs)
        return bool(np.all(np.isfinite(s)) and s.max() <= 1.0001 * s.min() + 1e-12)


def witness_check(m: GroupModel, p, X: Sequence, samples: int = 8, radius: float = 1.0,
                  points: int = 4096, seed: int = 0) -> WitnessReport:
    """Check that ``p`` is invariant along the left flow ``exp(sX) y``.

    Symbolically, ``p(exp(sX) * y) - p(y)`` must vanish as a polynomial in
    ``(s, y)``; a nonzero remainder raises :class:`IdentityFailed`.
    Numerically, ``sup |p|`` is sampled on the balls ``B(exp(kX), radius)``
    for ``k = 1..samples`` and should not depend on k.
    """
    p = _as_group_poly(p)
    n = m.dim
    X = [as_fraction(x) for x in X]
    if not any(X):
        raise ValueError("witness must be a nonzero algebra element")
    # variables: y_0..y_{n-1}, s
    s = Poly.var(n + 1, n)
    flow = [s * x for x in X]
    ys = [Poly.var(n + 1, i) for i in range(n)]
    prod = [c.compose(flow + ys) for c in m.product_map]
    for comp in p.components:
        lifted = comp.embed(n + 1)
        if lifted.compose(prod + [s]) != lifted:
            raise IdentityFailed(
                "p(exp(sX) y) != p(y): X is not in the right annihilator of p"
            )

    u = unit_ball_points(m, points, seed)
    centers, sups = [], []
    for k in range(1, samples + 1):
        c = tuple(k * x for x in X)
        pts = m.multiply_array(np.array([float(v) for v in c]), m.dilate_array(u, radius))
        vals = np.abs(p.evaluate(pts))
        centers.append(c)
        sups.append(float(vals.max()))
    return WitnessReport(True, centers, sups, radius)


def kernel_to_string(vec: Sequence[Fraction], labels: Sequence[str]) -> str:
    parts = []
    for c, lab in zip(vec, labels):
        if not c:
            continue
        if c == 1:
            parts.append(lab)
        elif c == -1:
            parts.append(f"-{lab}")
        else:
            parts.append(f"{c}*{lab}")
    return " + ".join(parts).replace("+ -", "- ") or "0"


def basis_labels(m: GroupModel) -> List[str]:
    """Display names of the Lie algebra basis (X, Y, T on H^1)."""
    if m.norm_kind == "kaplan":
        k = (m.dim - 1) // 2
        if k == 1:
            return ["X", "Y", "T"]
        return [f"X{j + 1}" for j in range(k)] + [f"Y{j + 1}" for j in range(k)] + ["T"]
    return [f"E{i + 1}" for i in range(m.dim)]


def ordinary_degree_bound(m: GroupModel, p) -> int:
    return m.step * _as_group_poly(p).degree()
