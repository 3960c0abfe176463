"""Finite-family checks of local Muckenhoupt conditions and ball-integral criteria.

Every check samples a finite family of balls (a net of centres times a
grid of radii), so a pass is a certificate on that family only and a fail
is a reproducible counterexample. Ball averages use scrambled Sobol' points;
two independent scrambles are pooled for the estimate and compared for the
error.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import WeightNonpositive
from .expr import as_evaluator
from .group_model import GroupModel, ball_volume, center_net, homogeneous_norm
from .quadrature import ball_points, derive_seed
from .verdicts import BOUNDED, GROWTH, INCONCLUSIVE, VerdictConfig, envelope_verdict

log = logging.getLogger(__name__)

DEFAULT_DELTAS = tuple(float(d) for d in np.geomspace(1e-3, 1.0, 16))
DEFAULT_SAMPLES = 2 ** 17


def default_radii(R: float) -> List[float]:
    """``R`` together with the dyadic radii ``2^j`` in ``[1/8, R)``."""
    R = float(R)
    out = {R}
    j = -3
    while 2.0 ** j < R:
        out.add(2.0 ** j)
        j += 1
    return sorted(out)


@dataclass
class BallStatistics:
    center: Tuple[float, ...]
    radius: float
    mu_B: float
    muw_B: float
    avg_w: float
    avg_w_neg_power: Optional[float]
    p: Optional[float]
    min_w: float
    max_inv_w: float
    sublevel: Dict[float, float]
    quadrature_error: float
    samples: int

    @property
    def ap_product(self) -> float:
        """``(avg w)(avg w^(-1/(p-1)))^(p-1)``, or ``(avg w) max(1/w)`` for p = 1."""
        if self.p is None:
            raise ValueError("statistics were computed without an exponent p")
        if self.p == 1:
            return self.avg_w * self.max_inv_w
        return self.avg_w * self.avg_w_neg_power ** (self.p - 1)

    def to_row(self) -> dict:
        row = asdict(self)
        row["sublevel"] = {f"{d:.6g}": v for d, v in self.sublevel.items()}
        return row


def _moments(w: np.ndarray, p: Optional[float], deltas: Sequence[float]):
    avg = float(np.mean(w))
    neg = None
    if p is not None and p > 1:
        neg = float(np.mean(w ** (-1.0 / (p - 1))))
    frac = {float(d): float(np.mean(w >= d * avg)) for d in deltas}
    return avg, neg, frac


def ball_stats(model: GroupModel, w, center: Sequence[float], radius: float,
               p: Optional[float] = None, samples: int = DEFAULT_SAMPLES, seed: int = 0,
               deltas: Sequence[float] = DEFAULT_DELTAS,
               require_positive: Optional[bool] = None) -> BallStatistics:
    """Quasi-Monte Carlo statistics of ``w`` on ``B(center, radius)``.

    Positivity of every sample is enforced when ``p`` is given (the A_p
    product needs ``1/w``) or when ``require_positive`` is set.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    fn = as_evaluator(w, model)
    center = tuple(float(c) for c in center)
    half = max(1, samples // 2)
    values = []
    for rep in range(2):
        s = derive_seed(seed, center, radius, rep)
        pts = ball_points(model, center, radius, half, s)[:half]
        values.append(np.asarray(fn(pts), dtype=float))
    if require_positive is None:
        require_positive = p is not None
    allw = np.concatenate(values)
    if not np.all(np.isfinite(allw)):
        raise WeightNonpositive(f"weight is not finite on B({center}, {radius})")
    if require_positive and np.any(allw <= 0):
        raise WeightNonpositive(f"weight has nonpositive samples on B({center}, {radius})")
    if np.any(allw < 0):
        raise WeightNonpositive(f"weight takes negative values on B({center}, {radius})")

    avg, neg, frac = _moments(allw, p, deltas)
    # spread between scrambles, plus the change from a half-size estimate
    # (in one dimension scrambled nets are shifted lattices and the two
    # scrambles can agree to rounding)
    err = 0.0
    reps = [_moments(v, p, ()) for v in values]
    halves = _moments(np.concatenate([v[: len(v) // 2] for v in values]), p, ())
    for a, b in [(reps[0][0], reps[1][0]), (reps[0][1], reps[1][1]),
                 (avg, halves[0]), (neg, halves[1])]:
        if a is not None and b is not None and max(abs(a), abs(b)) > 0:
            err = max(err, abs(a - b) / max(abs(a), abs(b)))
    vol, _ = ball_volume(model, radius)
    with np.errstate(divide="ignore"):
        max_inv = float(np.max(1.0 / allw)) if np.all(allw > 0) else math.inf
    return BallStatistics(center, float(radius), vol, vol * avg, avg, neg,
                          None if p is None else float(p), float(allw.min()), max_inv,
                          frac, err, int(allw.size))


@dataclass
class ClassVerdict:
    class_name: str
    R: float
    constant_estimate: float
    passed: bool
    worst_ball: Optional[BallStatistics]
    cap: float
    radii: List[float]
    centers: List[Tuple[float, ...]]
    details: dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    balls: List[BallStatistics] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "class": self.class_name, "R": self.R, "constant": self.constant_estimate,
            "pass": self.passed, "cap": self.cap, "radii": self.radii,
            "centers": [list(c) for c in self.centers],
            "worst_ball": None if self.worst_ball is None else {
                "center": list(self.worst_ball.center), "radius": self.worst_ball.radius},
            "details": self.details, "warnings": self.warnings,
        }


def _family(model, net, R, radii):
    if radii is None:
        radii = default_radii(R)
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0 or radii[-1] > float(R) * (1 + 1e-12):
        raise ValueError("radii must lie in (0, R]")
    centers = [tuple(float(v) for v in c) for c in net]
    if not centers:
        raise ValueError("the net of centres is empty")
    return centers, radii


def _collect(model, w, centers, radii, p, samples, seed, deltas, threads, require_positive=None):
    jobs = [(c, r) for c in centers for r in radii]

    def one(job):
        return ball_stats(model, w, job[0], job[1], p, samples, seed, deltas, require_positive)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def ap_constant(model: GroupModel, w, p: float, R: float, net: Sequence, radii=None,
                cap: float = 100.0, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                threads: int = 1) -> ClassVerdict:
    """Sup of the A_p ball product over the tested family; pass iff it is at most ``cap``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    centers, radii = _family(model, net, R, radii)
    stats = _collect(model, w, centers, radii, p, samples, seed, DEFAULT_DELTAS, threads)
    products = [s.ap_product for s in stats]
    k = int(np.argmax(products))
    const = float(products[k])
    warnings = []
    if p == 1:
        warnings.append("ess sup of 1/w approximated by the sample maximum (biased low)")
    qerr = max(s.quadrature_error for s in stats)
    return ClassVerdict(f"A_p({p:g})", float(R), const, bool(const <= cap), stats[k], cap,
                        radii, centers, {"p": p, "quadrature_error": qerr}, warnings, stats)


def ainfty_check(model: GroupModel, w, R: float, net: Sequence, radii=None,
                 delta_grid: Sequence[float] = DEFAULT_DELTAS, c_min: float = 0.5,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0, threads: int = 1) -> ClassVerdict:
    """Search for a uniform pair ``(delta, c)`` with ``mu(E_delta(B)) >= c mu(B)``.

    For each delta of the grid, c(delta) is the least sublevel fraction over
    the tested balls. The check passes when some delta has c(delta) at least
    ``c_min``; the reported pair is then the largest such delta.
    """
    centers, radii = _family(model, net, R, radii)
    deltas = sorted(float(d) for d in delta_grid)
    stats = _collect(model, w, centers, radii, None, samples, seed, deltas, threads)
    c_of = {d: min(s.sublevel[d] for s in stats) for d in deltas}
    good = [d for d in deltas if c_of[d] >= c_min]
    if good:
        delta = max(good)
    else:
        delta = deltas[0]
    c = c_of[delta]
    worst = min(stats, key=lambda s: s.sublevel[delta])
    qerr = max(s.quadrature_error for s in stats)
    return ClassVerdict("A_infty", float(R), float(c), bool(good), worst, c_min, radii, centers,
                        {"delta": delta, "c": c, "c_of_delta": {f"{d:.6g}": v for d, v in c_of.items()},
                         "quadrature_error": qerr}, [], stats)


def doubling_check(model: GroupModel, w, R: float, net: Sequence, radii=None, cap: float = 1e3,
                   samples: int = DEFAULT_SAMPLES, seed: int = 0, threads: int = 1) -> ClassVerdict:
    """Sup of ``mu_w(2B)/mu_w(B)`` over tested balls, with the factor-5 ratio alongside."""
    centers, radii = _family(model, net, R, radii)
    scales = sorted({r * f for r in radii for f in (1.0, 2.0, 5.0)})
    stats = _collect(model, w, centers, scales, None, samples, seed, (), threads,
                     require_positive=False)
    by = {(s.center, s.radius): s for s in stats}
    ratio2, ratio5 = [], []
    for c in centers:
        for r in radii:
            base = by[(c, r)].muw_B
            if base <= 0:
                ratio2.append((math.inf, by[(c, r)]))
                ratio5.append((math.inf, by[(c, r)]))
                continue
            ratio2.append((by[(c, 2.0 * r)].muw_B / base, by[(c, r)]))
            ratio5.append((by[(c, 5.0 * r)].muw_B / base, by[(c, r)]))
    const, worst = max(ratio2, key=lambda t: t[0])
    const5 = max(t[0] for t in ratio5)
    qerr = max(s.quadrature_error for s in stats)
    return ClassVerdict("A_infty_tilde", float(R), float(const), bool(const <= cap), worst, cap,
                        radii, centers,
                        {"doubling_factor_2": float(const), "doubling_factor_5": float(const5),
                         "quadrature_error": qerr}, [], [b for _, b in ratio2])


# -- ball-integral criteria ----------------------------------------------------------

@dataclass
class RayScan:
    ray: Tuple[float, ...]
    centers: List[Tuple[float, ...]]
    values: List[float]
    verdict: str


@dataclass
class GrowthReport:
    R: float
    rays: List[RayScan]
    verdict: str
    config: VerdictConfig

    def rows(self) -> List[dict]:
        return [{"ray": r.ray, "center": c, "M": v, "verdict": r.verdict}
                for r in self.rays for c, v in zip(r.centers, r.values)]


def combine_verdicts(verdicts: Sequence[str]) -> str:
    """Overall verdict across rays: Bounded if any ray stays bounded, Growth if all grow."""
    if any(v == BOUNDED for v in verdicts):
        return BOUNDED
    if verdicts and all(v == GROWTH for v in verdicts):
        return GROWTH
    return INCONCLUSIVE


def integral_growth_check(model: GroupModel, V, R: float, rays: Sequence, K: int = 8,
                          spacing: float = 1.0, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                          config: VerdictConfig = VerdictConfig(), threads: int = 1) -> GrowthReport:
    """``M(B) = R^2 * avg_B V`` at centres ``k*spacing*ray``, k = 1..K, per ray.

    A bounded sequence along one ray already rules out growth at infinity,
    so the overall verdict is Bounded when any ray is Bounded.
    """
    if K < 4:
        raise ValueError("need at least 4 centres per ray")
    if not rays:
        raise ValueError("need at least one ray")
    scans = []
    for ray in rays:
        ray = tuple(float(v) for v in ray)
        centers = center_net(model, K * spacing, spacing, ray)
        stats = _collect(model, V, centers, [R], None, samples, seed, (), threads,
                         require_positive=False)
        values = [R * R * s.avg_w for s in stats]
        scans.append(RayScan(ray, [tuple(float(v) for v in c) for c in centers], values,
                             envelope_verdict(values, config)))
    return GrowthReport(float(R), scans, combine_verdicts([s.verdict for s in scans]), config)


@dataclass
class ThinnessReport:
    r: float
    M_grid: List[float]
    centers: List[Tuple[float, ...]]
    norms: List[float]
    measures: Dict[float, List[float]]
    fractions: Dict[float, List[float]]
    passed: bool
    tolerance: float

    def rows(self) -> List[dict]:
        return [{"M": M, "center": c, "norm": n, "measure": m, "fraction": f}
                for M in self.M_grid
                for c, n, m, f in zip(self.centers, self.norms, self.measures[M], self.fractions[M])]


def sublevel_thinness(model: GroupModel, V, M_grid: Sequence[float], r: float, net: Sequence,
                      tolerance: float = 1e-3, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                      threads: int = 1) -> ThinnessReport:
    """Relative measure of ``{V <= M}`` in ``B(x, r)`` along the net.

    The sufficient condition passes when, for every M, the fraction is at
    most ``tolerance`` on the outer quarter of the net (ordered by norm).
    """
    M_grid = [float(M) for M in M_grid]
    centers = sorted((tuple(float(v) for v in c) for c in net),
                     key=lambda c: homogeneous_norm(model, c))
    if len(centers) < 4:
        raise ValueError("the net needs at least 4 centres")
    norms = [homogeneous_norm(model, c) for c in centers]
    fn = as_evaluator(V, model)
    vol, _ = ball_volume(model, r)
    half = max(1, samples // 2)

    def one(c):
        vals = []
        for rep in range(2):
            pts = ball_points(model, c, r, half, derive_seed(seed, c, r, rep))[:half]
            vals.append(np.asarray(fn(pts), dtype=float))
        v = np.concatenate(vals)
        return [float(np.mean(v <= M)) for M in M_grid]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per = list(pool.map(one, centers))
    else:
        per = [one(c) for c in centers]
    fractions = {M: [row[i] for row in per] for i, M in enumerate(M_grid)}
    measures = {M: [f * vol for f in fr] for M, fr in fractions.items()}
    outer = max(1, len(centers) // 4)
    passed = all(max(fr[-outer:]) <= tolerance for fr in fractions.values())
    return ThinnessReport(float(r), M_grid, centers, norms, measures, fractions, passed, tolerance)


# -- combined label ---------------------------------------------------------------

LABEL_DISCRETE = "discrete (ball integrals grow, doubling and A-infinity certificates passed)"
LABEL_NOT_DISCRETE = "not discrete (ball integrals bounded along a ray, certificates passed)"
LABEL_GROWTH_ONLY = "integral growth only"
LABEL_BOUNDED_ONLY = "bounded integrals only"
LABEL_INCONCLUSIVE = "inconclusive"


def discreteness_label(growth: GrowthReport, doubling: ClassVerdict, ainfty: ClassVerdict) -> str:
    """Never claims discreteness unless both weight certificates hold on the tested family."""
    certified = doubling.passed and ainfty.passed
    if growth.verdict == GROWTH:
        return LABEL_DISCRETE if certified else LABEL_GROWTH_ONLY
    if growth.verdict == BOUNDED:
        return LABEL_NOT_DISCRETE if certified else LABEL_BOUNDED_ONLY
    return LABEL_INCONCLUSIVE
