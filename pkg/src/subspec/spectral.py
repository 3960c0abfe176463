"""Finite-difference discretization of ``L + V`` and spectral probes.

The quadratic form ``Q(f) = sum_j ||X_j f||^2 + <V f, f>`` is discretized
on a rectangular lattice. Every horizontal field ``X_j = sum_i a_ji d_i``
gives a difference matrix ``D_j`` with one row per base node p:

    (D_j u)(p) = sum_i a_ji(p + h_i e_i / 2) (u(p + h_i e_i) - u(p)) / h_i

so the stiffness matrix ``A = sum_j D_j^T D_j * vol`` is a Gram matrix.
Under Dirichlet conditions, nodes outside the domain carry the value 0 and
every row touching an unknown node is kept. Under Neumann conditions only
rows whose nodes all lie in the domain are kept.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .eigen import EigenResult, eigsh_smallest, standard_form
from .errors import EmptyDomain, NoConvergence, PotentialNotEvaluable
from .expr import as_evaluator
from .group_model import GroupModel
from .verdicts import VerdictConfig, envelope_verdict

log = logging.getLogger(__name__)

DIRICHLET = "Dirichlet"
NEUMANN = "Neumann"


def _bc(bc: str) -> str:
    key = str(bc).strip().lower()
    if key in ("d", "dirichlet"):
        return DIRICHLET
    if key in ("n", "neumann"):
        return NEUMANN
    raise ValueError(f"unknown boundary condition {bc!r}")


@dataclass(frozen=True)
class Box:
    """Coordinate box ``prod [lo_i, hi_i]``; the lattice is anchored at ``lo``."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise EmptyDomain(f"degenerate box {self.lo} .. {self.hi}")

    @classmethod
    def cube(cls, dim: int, a: float, b: float) -> "Box":
        return cls((a,) * dim, (b,) * dim)


@dataclass(frozen=True)
class BallSpec:
    """Homogeneous ball ``B(center, radius)``; the lattice is anchored at the origin."""

    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise EmptyDomain("ball radius must be positive")


Domain = Union[Box, BallSpec]


@dataclass
class Discretization:
    model: GroupModel
    domain: Domain
    h: np.ndarray
    bc: str
    lattice: np.ndarray          # (N, n) integer lattice indices of unknown nodes
    anchor: np.ndarray           # coordinates = anchor + lattice * h
    _keys: np.ndarray = field(repr=False, default=None)
    _order: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self._base = self.lattice.min(axis=0) - 2
        self._span = self.lattice.max(axis=0) - self._base + 3
        keys = self.encode(self.lattice)
        self._order = np.argsort(keys, kind="stable")
        self._keys = keys[self._order]

    @property
    def size(self) -> int:
        return self.lattice.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return self.anchor + self.lattice * self.h

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def encode(self, idx: np.ndarray) -> np.ndarray:
        rel = idx - self._base
        key = np.zeros(idx.shape[0], dtype=np.int64)
        for i in range(idx.shape[1]):
            key = key * int(self._span[i]) + rel[:, i]
        return key

    def lookup(self, idx: np.ndarray) -> np.ndarray:
        """Unknown index of each lattice point, or -1 outside the node set."""
        inside = np.all((idx > self._base) & (idx < self._base + self._span - 1), axis=1)
        out = np.full(idx.shape[0], -1, dtype=np.int64)
        if not inside.any():
            return out
        keys = self.encode(idx[inside])
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, len(self._keys) - 1)
        hit = self._keys[pos] == keys
        res = np.full(keys.shape[0], -1, dtype=np.int64)
        res[hit] = self._order[pos[hit]]
        out[inside] = res
        return out


def _spacing(model: GroupModel, h) -> np.ndarray:
    h = np.broadcast_to(np.asarray(h, dtype=float), (model.dim,)).copy()
    if np.any(h <= 0):
        raise ValueError("grid spacing must be positive")
    return h


def discretize(model: GroupModel, domain: Domain, h, bc: str = DIRICHLET) -> Discretization:
    bc = _bc(bc)
    h = _spacing(model, h)
    n = model.dim
    if isinstance(domain, Box):
        if len(domain.lo) != n:
            raise ValueError("box dimension does not match the group")
        lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
        counts = np.floor((hi - lo) / h + 1e-9).astype(int)
        first = 1 if bc == DIRICHLET else 0
        # Dirichlet drops the nodes on the faces lo and lo + counts*h
        last = counts - 1 if bc == DIRICHLET else counts
        if np.any(last < first):
            raise EmptyDomain(f"no interior nodes in {domain} at spacing {h}")
        axes = [np.arange(first, last[i] + 1) for i in range(n)]
        lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        return Discretization(model, domain, h, bc, lattice, lo)
    if isinstance(domain, BallSpec):
        if len(domain.center) != n:
            raise ValueError("ball centre dimension does not match the group")
        blo, bhi = model.ball_bounding_box(domain.center, domain.radius)
        kmin = np.ceil(blo / h - 1e-9).astype(int)
        kmax = np.floor(bhi / h + 1e-9).astype(int)
        axes = [np.arange(kmin[i], kmax[i] + 1) for i in range(n)]
        if any(a.size == 0 for a in axes):
            raise EmptyDomain(f"no lattice nodes in {domain} at spacing {h}")
        lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        mask = model.in_ball(lattice * h, domain.center, domain.radius)
        lattice = lattice[mask]
        if lattice.shape[0] == 0:
            raise EmptyDomain(f"no lattice nodes in {domain} at spacing {h}")
        return Discretization(model, domain, h, bc, lattice, np.zeros(n))
    raise TypeError(f"unsupported domain {domain!r}")


@dataclass
class SparseOperator:
    """Pencil ``(A + diag(mass * potential), diag(mass))``."""

    A: sps.csr_matrix
    mass: np.ndarray
    potential: np.ndarray
    disc: Discretization

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def stiffness(self) -> sps.csr_matrix:
        """``A + diag(mass * potential)``."""
        return (self.A + sps.diags(self.mass * self.potential)).tocsr()

    def standard(self, extra_shift: float = 0.0) -> sps.csr_matrix:
        """``M^-1/2 (A + M V) M^-1/2 + extra_shift * I``."""
        B = standard_form(self.A, self.mass)
        return (B + sps.diags(self.potential + extra_shift)).tocsr()

    def with_potential(self, potential: np.ndarray) -> "SparseOperator":
        return SparseOperator(self.A, self.mass, np.asarray(potential, dtype=float), self.disc)


def _evaluate(f, model: GroupModel, pts: np.ndarray, what: str) -> np.ndarray:
    fn = as_evaluator(f, model)
    try:
        vals = np.asarray(fn(pts), dtype=float)
    except Exception as exc:  # user callables may raise anything
        raise PotentialNotEvaluable(f"{what} could not be evaluated: {exc}") from exc
    vals = np.broadcast_to(vals, (pts.shape[0],))
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise PotentialNotEvaluable(f"{what} is not finite at {tuple(bad)}")
    return vals.copy()


def difference_matrices(disc: Discretization,
                        weight_fn: Optional[Callable] = None) -> List[sps.csr_matrix]:
    """Scaled difference matrices, two per horizontal field (both orientations).

    Each row is multiplied by ``sqrt(vol * W(mid) / 2)`` where ``W`` is the
    optional stiffness weight at the cell midpoint, so that
    ``sum D^T D`` is the stiffness matrix.
    """
    out = []
    for X in disc.model.horizontal_fields:
        for sign in (1, -1):
            out.append(_oriented_rows(disc, X, sign, weight_fn))
    return out


def _oriented_rows(disc: Discretization, X, sign: int, weight_fn) -> sps.csr_matrix:
    h, n = disc.h, disc.model.dim
    unit = np.eye(n, dtype=np.int64) * sign
    support = [i for i in range(n) if not X.coefficients[i].is_zero()]
    if not support:
        return sps.csr_matrix((0, disc.size))
    shifts = [unit[i] for i in support]
    if disc.bc == DIRICHLET:
        base = np.unique(np.concatenate([disc.lattice] + [disc.lattice - s for s in shifts]), axis=0)
    else:
        keep = np.ones(disc.size, dtype=bool)
        for s in shifts:
            keep &= disc.lookup(disc.lattice + s) >= 0
        base = disc.lattice[keep]
    nrows = base.shape[0]
    if nrows == 0:
        return sps.csr_matrix((0, disc.size))
    x0 = disc.anchor + base * h
    rows, cols, vals = [], [], []
    diag = np.zeros(nrows)
    mid = x0.copy()
    for i, s in zip(support, shifts):
        xm = x0.copy()
        xm[:, i] += 0.5 * sign * h[i]
        mid[:, i] += 0.5 * sign * h[i]
        c = sign * X.coefficients[i].evaluate(xm) / h[i]
        diag -= c
        col = disc.lookup(base + s)
        ok = col >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(col[ok])
        vals.append(c[ok])
    col_p = disc.lookup(base)
    ok = col_p >= 0
    rows.append(np.nonzero(ok)[0])
    cols.append(col_p[ok])
    vals.append(diag[ok])
    scale = np.full(nrows, 0.5 * disc.cell_volume)
    if weight_fn is not None:
        scale = scale * weight_fn(mid)
    D = sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nrows, disc.size),
    )
    return (sps.diags(np.sqrt(scale)) @ D).tocsr()


def gram(Ds: Sequence[sps.spmatrix], size: int) -> sps.csr_matrix:
    A = sps.csr_matrix((size, size))
    for D in Ds:
        A = A + (D.T @ D)
    A = A.tocsr()
    # exact symmetry: (A + A^T)/2 is bitwise symmetric since fp addition commutes
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    return A


def assemble(model: GroupModel, domain: Domain, h, V=0.0, bc: str = DIRICHLET) -> SparseOperator:
    """Gram assembly of the form of ``L + V`` on ``domain``."""
    disc = discretize(model, domain, h, bc)
    return assemble_on(disc, V)


def assemble_on(disc: Discretization, V=0.0) -> SparseOperator:
    A = gram(difference_matrices(disc), disc.size)
    pot = _evaluate(V, disc.model, disc.nodes, "potential")
    mass = np.full(disc.size, disc.cell_volume)
    return SparseOperator(A, mass, pot, disc)


def potential_shift(potential: np.ndarray) -> float:
    """Internal shift making the potential at least 1 (so the form is coercive)."""
    return max(0.0, 1.0 - float(np.min(potential)))


def smallest_eigenvalues(op: SparseOperator, k: int = 1, tol: float = 1e-8,
                         method: str = "auto", seed: int = 0) -> EigenResult:
    """k smallest eigenvalues of the pencil, ascending, with residuals.

    The potential is shifted internally so that it is at least 1; the
    shifted operator is then positive definite and shift-invert Lanczos
    needs no further shift. The shift is subtracted again before returning.
    """
    if k < 1 or (k >= op.size and op.size > 1):
        raise ValueError(f"need 1 <= k < dimension ({op.size}), got {k}")
    B = op.standard()
    s = potential_shift(op.potential)
    res = eigsh_smallest(B, k, tol=tol, method=method, shift=s, seed=seed)
    if np.any(res.residuals > tol * np.maximum(1.0, np.abs(res.values)) * 10):
        raise NoConvergence(f"residuals {res.residuals} exceed tolerance {tol}")
    return res


def sigma(model: GroupModel, V, center, r: float, h, bc: str = DIRICHLET,
          tol: float = 1e-8, return_result: bool = False):
    """Bottom of the discrete Dirichlet or Neumann spectrum on ``B(center, r)``."""
    op = assemble(model, BallSpec(tuple(center), r), h, V, bc)
    if op.size == 1:
        val = float(op.standard().toarray()[0, 0])
        res = EigenResult(np.array([val]), np.zeros(1), np.ones((1, 1)), "dense")
    else:
        res = smallest_eigenvalues(op, 1, tol)
    return res if return_result else float(res.values[0])


@dataclass
class SigmaScanResult:
    centers: List[Tuple[float, ...]]
    values: List[float]
    residuals: List[float]
    bc: str
    r: float
    h: Tuple[float, ...]
    verdict: str
    config: VerdictConfig

    def rows(self) -> List[dict]:
        return [
            {"center": c, "sigma": v, "bc": self.bc, "r": self.r, "h": self.h, "residual": res}
            for c, v, res in zip(self.centers, self.values, self.residuals)
        ]


def sigma_scan(model: GroupModel, V, centers: Sequence, r: float, h, bc: str = DIRICHLET,
               config: VerdictConfig = VerdictConfig(), tol: float = 1e-8,
               threads: int = 1) -> SigmaScanResult:
    """sigma at each centre plus an envelope verdict on the sequence."""
    centers = [tuple(float(v) for v in c) for c in centers]
    if not centers:
        raise ValueError("need at least one centre")
    bc = _bc(bc)

    def one(c):
        return sigma(model, V, c, r, h, bc, tol, return_result=True)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, centers))
    else:
        results = [one(c) for c in centers]
    values = [float(res.values[0]) for res in results]
    residuals = [float(res.residuals[0]) for res in results]
    verdict = envelope_verdict(values, config)
    return SigmaScanResult(centers, values, residuals, bc, float(r),
                           tuple(_spacing(model, h)), verdict, config)


# -- tail mass -----------------------------------------------------------------

def _tail_mask(disc: Discretization, tail_radius: float) -> np.ndarray:
    model = disc.model
    return ~model.in_ball(disc.nodes, np.zeros(model.dim), tail_radius)


def _tail_power(op: SparseOperator, tail: np.ndarray, tol: float, max_iter: int,
                seed: int) -> float:
    if not tail.any():
        return 0.0
    pot = op.potential + potential_shift(op.potential)
    K = (op.A + sps.diags(op.mass * pot)).tocsc()
    lu = spla.splu(K)
    mt = op.mass * tail
    v = np.random.default_rng(seed).random(op.size) * tail + tail
    lam_old = -np.inf
    for _ in range(max_iter):
        v = lu.solve(mt * v)
        v /= np.linalg.norm(v)
        lam = float(v @ (mt * v)) / float(v @ (K @ v))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam
        lam_old = lam
    raise NoConvergence(f"tail-mass power iteration stalled after {max_iter} steps")


def tail_mass_sup(model: GroupModel, V, domain: Domain, h, tail_radius: float,
                  bc: str = DIRICHLET, tol: float = 1e-10, max_iter: int = 20000,
                  seed: int = 0) -> float:
    """Largest ``||1_tail f||^2 / Q(f)`` over discrete f, Q with V shifted to V >= 1.

    The tail is the set of nodes outside ``B(e, tail_radius)``. Computed by
    power iteration on ``K^-1 M_tail``.
    """
    return tail_mass_profile(model, V, domain, h, [tail_radius], bc, tol, max_iter, seed)[0]


def tail_mass_profile(model: GroupModel, V, domain: Domain, h, radii: Sequence[float],
                      bc: str = DIRICHLET, tol: float = 1e-10, max_iter: int = 20000,
                      seed: int = 0) -> List[float]:
    op = assemble(model, domain, h, V, bc)
    return [_tail_power(op, _tail_mask(op.disc, rho), tol, max_iter, seed) for rho in radii]


def tail_mass_dense(model: GroupModel, V, domain: Domain, h, tail_radius: float,
                    bc: str = DIRICHLET) -> float:
    """Same quantity from a dense generalized eigensolve (small grids only)."""
    op = assemble(model, domain, h, V, bc)
    tail = _tail_mask(op.disc, tail_radius)
    pot = op.potential + potential_shift(op.potential)
    K = (op.A + sps.diags(op.mass * pot)).toarray()
    Mt = np.diag(op.mass * tail)
    return float(sla.eigh(Mt, K, eigvals_only=True)[-1])


# -- Poincare --------------------------------------------------------------------

def poincare_constant(model: GroupModel, r: float, h, center=None, tol: float = 1e-8) -> float:
    """Smallest nonzero Neumann eigenvalue of the potential-free form on ``B(center, r)``.

    The Poincare constant on that ball is comparable to ``1 / (lambda * r^2)``.
    """
    if center is None:
        center = np.zeros(model.dim)
    op = assemble(model, BallSpec(tuple(center), r), h, 0.0, NEUMANN)
    ncomp, _ = csgraph.connected_components(op.A, directed=False)
    k = ncomp + 1
    if k >= op.size:
        raise EmptyDomain("discrete ball too small for a nonzero Neumann eigenvalue")
    res = smallest_eigenvalues(op, k, tol)
    vals = res.values
    thresh = 1e3 * tol * max(1.0, float(np.abs(vals).max()))
    nonzero = vals[vals > thresh]
    if nonzero.size == 0:
        raise NoConvergence("no nonzero Neumann eigenvalue among the computed ones")
    return float(nonzero[0])
