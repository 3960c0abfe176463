"""Weighted sub-Laplacians and their Schrodinger counterparts.

For a positive weight w, the map ``f -> f * w^(1/2)`` carries the form
``Q_w(f) = sum_j int |X_j f|^2 w`` on ``L^2(w dmu)`` to the Schrodinger form
with potential

    V_w = -|grad_H w|^2 / (4 w^2) - (L w) / (2 w),    L = -sum_j X_j^2.

``V_w`` is always derived symbolically: the two terms are individually
unbounded and cancel, which finite differences would destroy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import sympy as sp
from scipy.stats import qmc

from .errors import LowerBoundViolated, NotDifferentiable, WeightNonpositive
from .expr import as_evaluator, coordinate_symbols, lambdify, parse, poly_to_sympy
from .group_model import GroupModel
from .quadrature import ball_points
from .spectral import (DIRICHLET, Domain, SparseOperator, assemble_on, difference_matrices,
                       discretize, gram, smallest_eigenvalues, Box, BallSpec)

log = logging.getLogger(__name__)

_NONSMOOTH = (sp.Abs, sp.Max, sp.Min, sp.sign, sp.Heaviside, sp.DiracDelta, sp.floor,
              sp.ceiling, sp.Piecewise)


def horizontal_derivative(model: GroupModel, expr: sp.Expr, j: int) -> sp.Expr:
    """Apply the j-th horizontal field symbolically."""
    syms = coordinate_symbols(model)
    X = model.horizontal_fields[j]
    out = sp.Integer(0)
    for s, coeff in zip(syms, X.coefficients):
        if not coeff.is_zero():
            out += poly_to_sympy(coeff, model) * sp.diff(expr, s)
    return out


def _as_expr(w, model: GroupModel) -> sp.Expr:
    if isinstance(w, str):
        return parse(w, model)
    if isinstance(w, (int, float)):
        return sp.nsimplify(w)
    if isinstance(w, sp.Basic):
        return w
    raise TypeError("the weight must be an expression string or a sympy expression")


@dataclass
class PotentialExpr:
    expr: sp.Expr
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lower_bound: Optional[float] = None

    def text(self) -> str:
        return str(self.expr)


def potential_from_weight(model: GroupModel, w, sample_points: Optional[np.ndarray] = None
                          ) -> PotentialExpr:
    """Symbolic ``V_w``; the lower bound is the minimum over ``sample_points`` if given."""
    expr = _as_expr(w, model)
    if expr.has(*_NONSMOOTH):
        raise NotDifferentiable(f"weight {expr} is not smooth (contains a non-smooth function)")
    grad2 = sp.Integer(0)
    lap = sp.Integer(0)
    for j in range(model.rank):
        d1 = horizontal_derivative(model, expr, j)
        grad2 += d1 ** 2
        lap -= horizontal_derivative(model, d1, j)
    V = -grad2 / (4 * expr ** 2) - lap / (2 * expr)
    V = sp.simplify(sp.powsimp(sp.expand(sp.powsimp(V)), force=True))
    if V.has(sp.Derivative, sp.Subs):
        raise NotDifferentiable(f"could not differentiate {expr}")
    pot = PotentialExpr(V, lambdify(V, model))
    if sample_points is not None:
        vals = pot.evaluate(sample_points)
        pot.lower_bound = float(np.min(vals))
    return pot


def _weight_values(fn, pts, what):
    vals = np.asarray(fn(pts), dtype=float)
    vals = np.broadcast_to(vals, (pts.shape[0],))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise WeightNonpositive(f"weight is not positive and finite at every {what}")
    return vals.copy()


def weighted_form_matrix(model: GroupModel, w, domain: Domain, h, bc: str = DIRICHLET
                         ) -> SparseOperator:
    """Gram assembly of ``Q_w`` with mass ``vol * w(node)``; the potential is zero."""
    disc = discretize(model, domain, h, bc)
    fn = as_evaluator(w, model)
    mass = disc.cell_volume * _weight_values(fn, disc.nodes, "node")
    Ds = difference_matrices(disc, weight_fn=lambda mid: _weight_values(fn, mid, "cell midpoint"))
    A = gram(Ds, disc.size)
    return SparseOperator(A, mass, np.zeros(disc.size), disc)


def _sample_domain(model: GroupModel, domain: Domain, count: int = 4096) -> np.ndarray:
    if isinstance(domain, Box):
        lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
        u = qmc.Sobol(model.dim, scramble=False).random(count)
        return lo + (hi - lo) * u
    return ball_points(model, domain.center, domain.radius, count, seed=0)


@dataclass
class EquivalenceReport:
    weighted: List[float]
    schrodinger: List[float]
    differences: List[float]
    h: List[float]
    domain: dict
    potential: str
    lower_bound: float
    warnings: List[str] = field(default_factory=list)

    @property
    def max_difference(self) -> float:
        return float(np.max(np.abs(self.differences)))

    def to_dict(self) -> dict:
        return {
            "weighted_eigenvalues": self.weighted, "schrodinger_eigenvalues": self.schrodinger,
            "differences": self.differences, "h": self.h, "domain": self.domain,
            "potential": self.potential, "potential_lower_bound": self.lower_bound,
            "warnings": self.warnings,
        }


def _domain_dict(domain: Domain) -> dict:
    if isinstance(domain, Box):
        return {"box": {"lo": list(domain.lo), "hi": list(domain.hi)}}
    return {"ball": {"center": list(domain.center), "radius": domain.radius}}


def equivalence_check(model: GroupModel, w, domain: Domain, h, k: int = 5,
                      bc: str = DIRICHLET, declared_lower: Optional[float] = None,
                      tol: float = 1e-9, blowup: float = 1e6) -> EquivalenceReport:
    """Compare the k smallest eigenvalues of ``(Q_w, w)`` and ``(Q_{V_w}, 1)`` on one grid.

    ``declared_lower`` plays the role of ``-m + 1``: a sampled ``V_w`` below
    it raises :class:`LowerBoundViolated`. The integrability hypotheses on
    ``grad_H w`` are only probed: sampled ratios ``|grad_H w| / w`` and
    ``|grad_H w| / sqrt(w)`` above ``blowup`` produce a warning.
    """
    expr = _as_expr(w, model)
    disc = discretize(model, domain, h, bc)
    samples = np.vstack([disc.nodes, _sample_domain(model, domain)])
    pot = potential_from_weight(model, expr, samples)
    if declared_lower is not None and pot.lower_bound < declared_lower:
        raise LowerBoundViolated(
            f"sampled V_w reaches {pot.lower_bound:.6g} below the declared bound {declared_lower:.6g}")

    warnings = []
    wfn = lambdify(expr, model)
    grads = [lambdify(horizontal_derivative(model, expr, j), model) for j in range(model.rank)]
    wv = wfn(samples)
    gnorm = np.sqrt(sum(g(samples) ** 2 for g in grads))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.nanmax(gnorm / wv)
        r2 = np.nanmax(gnorm / np.sqrt(wv))
    if not (r1 <= blowup and r2 <= blowup):
        warnings.append(f"|grad_H w|/w or |grad_H w|/sqrt(w) exceeds {blowup:g} on samples")

    op_w = weighted_form_matrix(model, expr, domain, h, bc)
    op_v = assemble_on(disc, pot.evaluate)
    ew = smallest_eigenvalues(op_w, k, tol).values
    ev = smallest_eigenvalues(op_v, k, tol).values
    return EquivalenceReport([float(v) for v in ew], [float(v) for v in ev],
                             [float(a - b) for a, b in zip(ew, ev)],
                             [float(x) for x in disc.h], _domain_dict(domain), str(pot.expr),
                             float(pot.lower_bound), warnings)


def form_intertwining_error(model: GroupModel, w, domain: Domain, h, f, bc: str = DIRICHLET
                            ) -> float:
    """Relative gap ``|Q_w(f) - Q_{V_w}(f sqrt(w))| / Q_w(f)`` for a smooth test function f."""
    expr = _as_expr(w, model)
    op_w = weighted_form_matrix(model, expr, domain, h, bc)
    disc = op_w.disc
    pot = potential_from_weight(model, expr)
    op_v = assemble_on(disc, pot.evaluate)
    fv = np.asarray(as_evaluator(f, model)(disc.nodes), dtype=float)
    g = fv * np.sqrt(lambdify(expr, model)(disc.nodes))
    qw = float(fv @ (op_w.A @ fv))
    qv = float(g @ (op_v.stiffness @ g))
    return abs(qw - qv) / abs(qw)
