"""Simply connected nilpotent Lie groups in exponential coordinates.

Points are tuples of coordinates ``x`` standing for ``exp(sum x_i E_i)``.
The group law comes from the Baker-Campbell-Hausdorff series, which
terminates on a nilpotent algebra, so products of rational points are
computed exactly. Haar measure is Lebesgue measure in these coordinates.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .errors import (
    GroupDefinitionError,
    JacobiViolation,
    NotBracketGenerating,
    NotNilpotent,
    NotStratified,
)
from .poly import Poly, as_fraction, rank

Point = Tuple[Fraction, ...]


@dataclass(frozen=True)
class StructureConstants:
    """Brackets ``[E_i, E_j] = sum_k c[i, j, k] E_k`` over a fixed basis (0-based)."""

    dim: int
    constants: Dict[Tuple[int, int, int], Fraction] = field(default_factory=dict)

    @classmethod
    def from_brackets(cls, dim: int, brackets) -> "StructureConstants":
        """Build from ``(i, j, k, c)`` entries meaning ``[E_i, E_j] += c E_k``.

        Only one of ``(i, j)`` and ``(j, i)`` needs to be listed; the other is
        filled in by antisymmetry. Listing both with inconsistent values is
        an error.
        """
        consts: Dict[Tuple[int, int, int], Fraction] = {}
        for i, j, k, c in brackets:
            c = as_fraction(c)
            for idx in (i, j, k):
                if not 0 <= idx < dim:
                    raise GroupDefinitionError(f"basis index {idx + 1} out of range 1..{dim}")
            if i == j:
                if c:
                    raise GroupDefinitionError(f"[E{i + 1}, E{i + 1}] must vanish")
                continue
            for key, val in (((i, j, k), c), ((j, i, k), -c)):
                if key in consts and consts[key] != val:
                    raise GroupDefinitionError(
                        f"bracket [E{key[0] + 1}, E{key[1] + 1}] given inconsistently "
                        "(antisymmetry violated)"
                    )
                consts[key] = val
        return cls(dim, {k: v for k, v in consts.items() if v})

    def bracket_basis(self, i: int, j: int) -> Tuple[Fraction, ...]:
        return tuple(self.constants.get((i, j, k), Fraction(0)) for k in range(self.dim))

    def bracket(self, u: Sequence, v: Sequence) -> list:
        """Bracket of two vectors whose entries live in any commutative ring."""
        out = [0] * self.dim
        for (i, j, k), c in self.constants.items():
            if i < j:
                a = u[i] * v[j] - u[j] * v[i]
                out[k] = out[k] + a * c
        return out

    def check_antisymmetry(self) -> None:
        for (i, j, k), c in self.constants.items():
            if self.constants.get((j, i, k), 0) != -c:
                raise GroupDefinitionError(
                    f"antisymmetry violated for [E{i + 1}, E{j + 1}]"
                )

    def check_jacobi(self) -> None:
        n = self.dim
        basis = [tuple(Fraction(int(a == b)) for b in range(n)) for a in range(n)]
        for i, j, k in combinations(range(n), 3):
            ei, ej, ek = basis[i], basis[j], basis[k]
            total = [Fraction(0)] * n
            for a, b, c in ((ei, ej, ek), (ej, ek, ei), (ek, ei, ej)):
                term = self.bracket(a, self.bracket(b, c))
                total = [x + y for x, y in zip(total, term)]
            if any(total):
                raise JacobiViolation((i, j, k), tuple(total))


# -- Baker-Campbell-Hausdorff via Dynkin's formula ----------------------------

@lru_cache(maxsize=None)
def dynkin_words(order: int) -> Tuple[Tuple[str, Fraction], ...]:
    """Words in {X, Y} with coefficients so that
    ``log(e^X e^Y) = sum c * [w_1, [w_2, ..., [w_{N-1}, w_N]]]`` up to total degree ``order``.
    """
    acc: Dict[str, Fraction] = {}

    def blocks(remaining):
        # sequences of (r, s) with r + s >= 1 and total <= remaining
        if remaining == 0:
            yield ()
            return
        yield ()
        for total in range(1, remaining + 1):
            for r in range(total + 1):
                for rest in blocks(remaining - total):
                    yield ((r, total - r),) + rest

    for seq in set(blocks(order)):
        if not seq:
            continue
        n = len(seq)
        size = sum(r + s for r, s in seq)
        denom = size
        word = ""
        for r, s in seq:
            denom *= math.factorial(r) * math.factorial(s)
            word += "X" * r + "Y" * s
        if size > 1 and word[-1] == word[-2]:
            continue
        coeff = Fraction((-1) ** (n - 1), n * denom)
        acc[word] = acc.get(word, Fraction(0)) + coeff
    return tuple(sorted(((w, c) for w, c in acc.items() if c), key=lambda t: (len(t[0]), t[0])))


def bch(structure: StructureConstants, x: Sequence, y: Sequence, order: int) -> list:
    """``log(exp(x) exp(y))`` truncated at bracket length ``order``.

    Entries of ``x`` and ``y`` may be Fractions or :class:`Poly` objects.
    """
    n = structure.dim
    out = [x[i] + y[i] for i in range(n)]
    cache: Dict[str, list] = {"X": list(x), "Y": list(y)}

    def nested(word):
        if word in cache:
            return cache[word]
        val = structure.bracket(cache[word[0]], nested(word[1:]))
        cache[word] = val
        return val

    for word, c in dynkin_words(order):
        if len(word) == 1:
            continue
        val = nested(word)
        for k in range(n):
            if not _is_zero(val[k]):
                out[k] = out[k] + val[k] * c
    return out


def _is_zero(v) -> bool:
    if isinstance(v, Poly):
        return v.is_zero()
    return v == 0


# -- vector fields ----------------------------------------------------------

@dataclass(frozen=True)
class VectorFieldOp:
    """First-order operator ``sum_i a_i(x) d/dx_i`` with polynomial coefficients."""

    coefficients: Tuple[Poly, ...]
    kind: str = "general"
    index: Optional[int] = None

    @property
    def nvars(self) -> int:
        return len(self.coefficients)

    def apply(self, p: Poly) -> Poly:
        out = Poly.zero(p.nvars)
        for i, a in enumerate(self.coefficients):
            if a:
                d = p.diff(i)
                if d:
                    out = out + a * d
        return out

    def __call__(self, p: Poly) -> Poly:
        return self.apply(p)

    def commutator(self, other: "VectorFieldOp") -> "VectorFieldOp":
        coeffs = tuple(
            self.apply(b) - other.apply(a)
            for a, b in zip(self.coefficients, other.coefficients)
        )
        return VectorFieldOp(coeffs)

    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.coefficients) if a)

    def to_string(self, names: Sequence[str]) -> str:
        parts = []
        for name, a in zip(names, self.coefficients):
            if not a:
                continue
            if a == 1:
                parts.append(f"d_{name}")
            else:
                parts.append(f"({a.to_string(names)})*d_{name}")
        return " + ".join(parts) if parts else "0"


def field_combination(fields: Sequence[VectorFieldOp], weights: Sequence) -> VectorFieldOp:
    """The field ``sum_j weights[j] * fields[j]``."""
    n = fields[0].nvars
    coeffs = [Poly.zero(n) for _ in range(n)]
    for w, f in zip(weights, fields):
        w = as_fraction(w)
        if w:
            coeffs = [c + a * w for c, a in zip(coeffs, f.coefficients)]
    return VectorFieldOp(tuple(coeffs))


# -- the model --------------------------------------------------------------

class GroupModel:
    """Validated nilpotent Lie group with a horizontal frame.

    Use :func:`build_group` (or :func:`load_group`) rather than calling the
    constructor directly.
    """

    modular_trivial = True

    def __init__(self, structure, horizontal, step, weights, filtration_dims,
                 stratified, names, norm_kind, definition):
        self.structure = structure
        self.horizontal = tuple(horizontal)
        self.step = step
        self.weights = tuple(weights)
        self.filtration_dims = tuple(filtration_dims)
        self.stratified = stratified
        self.names = tuple(names)
        self.norm_kind = norm_kind
        self.definition = definition
        self._volume_cache: Dict[Tuple[int, int], Tuple[float, float]] = {}

    @property
    def dim(self) -> int:
        return self.structure.dim

    @property
    def rank(self) -> int:
        return len(self.horizontal)

    @property
    def homogeneous_dimension(self) -> int:
        dims = (0,) + self.filtration_dims
        return sum(k * (dims[k] - dims[k - 1]) for k in range(1, len(dims)))

    def content_hash(self) -> str:
        blob = json.dumps(self.definition, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __repr__(self) -> str:
        return (f"GroupModel(dim={self.dim}, rank={self.rank}, step={self.step}, "
                f"Q={self.homogeneous_dimension}, names={self.names})")

    # symbolic product map (x, y) -> x*y in 2n variables
    @cached_property
    def product_map(self) -> Tuple[Poly, ...]:
        n = self.dim
        xs = [Poly.var(2 * n, i) for i in range(n)]
        ys = [Poly.var(2 * n, n + i) for i in range(n)]
        return tuple(bch(self.structure, xs, ys, self.step))

    @cached_property
    def left_fields(self) -> Tuple[VectorFieldOp, ...]:
        return tuple(self._invariant_field(j, "left") for j in range(self.dim))

    @cached_property
    def right_fields(self) -> Tuple[VectorFieldOp, ...]:
        return tuple(self._invariant_field(j, "right") for j in range(self.dim))

    @property
    def horizontal_fields(self) -> Tuple[VectorFieldOp, ...]:
        return tuple(self.left_fields[j] for j in self.horizontal)

    def _invariant_field(self, j: int, kind: str) -> VectorFieldOp:
        n = self.dim
        coeffs = []
        for comp in self.product_map:
            if kind == "left":
                # d/ds x * exp(s E_j): differentiate in the second factor at 0
                d = comp.diff(n + j).subs({n + i: 0 for i in range(n)})
                coeffs.append(d.restrict(range(n)))
            else:
                d = comp.diff(j).subs({i: 0 for i in range(n)})
                coeffs.append(d.restrict(range(n, 2 * n)))
        return VectorFieldOp(tuple(coeffs), kind, j)

    def translate_left(self, g: Sequence) -> Tuple[Poly, ...]:
        """Coordinates of ``g * x`` as polynomials in x."""
        n = self.dim
        subs = {i: as_fraction(g[i]) for i in range(n)}
        return tuple(c.subs(subs).restrict(range(n, 2 * n)) for c in self.product_map)

    def translate_right(self, g: Sequence) -> Tuple[Poly, ...]:
        """Coordinates of ``x * g`` as polynomials in x."""
        n = self.dim
        subs = {n + i: as_fraction(g[i]) for i in range(n)}
        return tuple(c.subs(subs).restrict(range(n)) for c in self.product_map)

    def multiply_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Float products of broadcastable arrays of points (shape ``(..., n)``)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a, b = np.broadcast_arrays(a, b)
        flat = np.concatenate([a.reshape(-1, self.dim), b.reshape(-1, self.dim)], axis=1)
        out = np.stack([c.evaluate(flat) for c in self.product_map], axis=1)
        return out.reshape(a.shape)

    def dilate_array(self, pts: np.ndarray, lam: float) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        return np.asarray(pts, dtype=float) * lam ** w

    def norm_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.norm_kind == "kaplan":
            m = (self.dim - 1)
            horiz = np.sum(pts[..., :m] ** 2, axis=-1)
            return (horiz ** 2 + 16.0 * pts[..., m] ** 2) ** 0.25
        self._require_stratified()
        w = np.asarray(self.weights, dtype=float)
        return np.max(np.abs(pts) ** (1.0 / w), axis=-1)

    def norm_power_array(self, pts: np.ndarray) -> Tuple[np.ndarray, int]:
        """``(N(x)**k, k)`` with integer powers only, so dyadic inputs stay exact."""
        pts = np.asarray(pts, dtype=float)
        if self.norm_kind == "kaplan":
            horiz = np.sum(pts[..., :-1] ** 2, axis=-1)
            return horiz ** 2 + 16.0 * pts[..., -1] ** 2, 4
        self._require_stratified()
        k = math.lcm(*self.weights)
        powers = np.asarray([k // w for w in self.weights])
        return np.max(np.abs(pts) ** powers, axis=-1), k

    def in_ball(self, pts: np.ndarray, center: Sequence[float], radius: float) -> np.ndarray:
        """Mask of points with ``N(center^-1 * x) < radius``."""
        c = -np.asarray([float(v) for v in center])
        rel = self.multiply_array(c, np.asarray(pts, dtype=float))
        val, k = self.norm_power_array(rel)
        return val < float(radius) ** k

    def ball_bounding_box(self, center: Sequence, radius: float) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate box enclosing ``B(center, radius)`` (interval arithmetic)."""
        lo, hi = self.unit_ball_box()
        w = np.asarray(self.weights, dtype=float)
        lo, hi = lo * radius ** w, hi * radius ** w
        maps = self.translate_left([as_fraction(v) for v in center])
        bounds = [p.interval(lo, hi) for p in maps]
        return np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])

    def unit_ball_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinate bounding box of the homogeneous unit ball."""
        hi = np.ones(self.dim)
        if self.norm_kind == "kaplan":
            hi[-1] = 0.25
        return -hi, hi

    def _require_stratified(self):
        if not self.stratified:
            raise NotStratified(
                "homogeneous norms need a basis adapted to a stratification"
            )


def _lower_central_series(sc: StructureConstants) -> List[List[Tuple[Fraction, ...]]]:
    """Spanning sets for g, [g, g], [g, [g, g]], ... until zero."""
    n = sc.dim
    basis = [tuple(Fraction(int(a == b)) for b in range(n)) for a in range(n)]
    series = [basis]
    current = basis
    for _ in range(n + 1):
        spans = [tuple(sc.bracket(e, v)) for e in basis for v in current]
        spans = _independent(spans, n)
        if not spans:
            series.append([])
            return series
        if len(spans) == len(current):
            raise NotNilpotent(
                f"lower central series stabilises at dimension {len(spans)} > 0"
            )
        series.append(spans)
        current = spans
    raise NotNilpotent("lower central series does not terminate")


def _independent(vectors, n) -> List[Tuple[Fraction, ...]]:
    chosen: List[Tuple[Fraction, ...]] = []
    for v in vectors:
        if not any(v):
            continue
        if rank(chosen + [v], n) > len(chosen):
            chosen.append(tuple(v))
    return chosen


def _in_span(v, vectors, n) -> bool:
    return rank(list(vectors) + [v], n) == rank(list(vectors), n)


def build_group(structure: StructureConstants, horizontal: Sequence[int], *,
                names: Optional[Sequence[str]] = None, norm: Optional[str] = None,
                step_hint: Optional[int] = None,
                definition: Optional[dict] = None) -> GroupModel:
    """Validate the structure constants and horizontal frame and build a model.

    ``horizontal`` uses 0-based basis indices.
    """
    structure.check_antisymmetry()
    structure.check_jacobi()
    n = structure.dim
    series = _lower_central_series(structure)
    step = len(series) - 1
    if step_hint is not None and step_hint != step:
        raise GroupDefinitionError(f"step_hint {step_hint} but computed step is {step}")

    horizontal = tuple(sorted(set(horizontal)))
    if not horizontal or any(not 0 <= h < n for h in horizontal):
        raise GroupDefinitionError("horizontal indices must be a nonempty subset of the basis")
    basis = [tuple(Fraction(int(a == b)) for b in range(n)) for a in range(n)]
    layer1 = [basis[h] for h in horizontal]
    filtration = [layer1]
    brackets_k = layer1
    for _ in range(n):
        new = [tuple(structure.bracket(e, v)) for e in layer1 for v in brackets_k]
        span = _independent(filtration[-1] + new, n)
        if len(span) == len(filtration[-1]):
            break
        filtration.append(span)
        brackets_k = new
    if len(filtration[-1]) < n:
        raise NotBracketGenerating(horizontal, len(filtration[-1]), n)
    dims = [len(f) for f in filtration]

    weights = []
    for i in range(n):
        weights.append(next(k + 1 for k, f in enumerate(filtration) if _in_span(basis[i], f, n)))
    # dilations diag(lam**w) are automorphisms iff brackets respect the grading
    stratified = all(weights[k] == weights[i] + weights[j] for (i, j, k) in structure.constants)

    if names is None:
        names = [f"x{i + 1}" for i in range(n)]
    if len(names) != n:
        raise GroupDefinitionError("need one variable name per coordinate")
    norm_kind = norm or "max"
    if norm_kind not in ("max", "kaplan"):
        raise GroupDefinitionError(f"unknown norm {norm_kind!r}")
    if definition is None:
        definition = {
            "dim": n,
            "brackets": [[i + 1, j + 1, k + 1, str(c)]
                         for (i, j, k), c in sorted(structure.constants.items()) if i < j],
            "horizontal": [h + 1 for h in horizontal],
            "variables": list(names),
            "norm": norm_kind,
        }
    return GroupModel(structure, horizontal, step, weights, dims, stratified,
                      names, norm_kind, definition)


# -- presets and file loading -------------------------------------------------

def heisenberg(n: int = 1) -> GroupModel:
    """Heisenberg group H^n with basis X_1..X_n, Y_1..Y_n, T and [X_j, Y_j] = T."""
    dim = 2 * n + 1
    brackets = [(j, n + j, dim - 1, 1) for j in range(n)]
    if n == 1:
        names = ["x", "y", "t"]
    else:
        names = [f"x{j + 1}" for j in range(n)] + [f"y{j + 1}" for j in range(n)] + ["t"]
    sc = StructureConstants.from_brackets(dim, brackets)
    return build_group(sc, range(2 * n), names=names, norm="kaplan")


def euclidean(d: int) -> GroupModel:
    names = [f"x{i + 1}" for i in range(d)]
    return build_group(StructureConstants(d, {}), range(d), names=names)


def engel() -> GroupModel:
    """Engel group: [E1, E2] = E3, [E1, E3] = E4, horizontal {E1, E2}."""
    sc = StructureConstants.from_brackets(4, [(0, 1, 2, 1), (0, 2, 3, 1)])
    return build_group(sc, (0, 1), names=["x1", "x2", "x3", "x4"])


_EUCLIDEAN_ALIASES = ("x", "y", "z")


def variable_aliases(model: GroupModel) -> Dict[str, int]:
    """Names accepted in expressions: coordinate names plus x/y/z shorthands in R^1..R^3."""
    out = {name: i for i, name in enumerate(model.names)}
    if not model.structure.constants and model.dim <= 3:
        for i in range(model.dim):
            out.setdefault(_EUCLIDEAN_ALIASES[i], i)
    return out


def group_from_definition(data: dict) -> GroupModel:
    try:
        dim = int(data["dim"])
        raw = data.get("brackets", [])
        horizontal = [int(h) - 1 for h in data["horizontal"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GroupDefinitionError(f"malformed group definition: {exc}") from exc
    entries = []
    for entry in raw:
        if len(entry) != 4:
            raise GroupDefinitionError(f"bracket entry {entry!r} must be [i, j, k, rational]")
        i, j, k, c = entry
        entries.append((int(i) - 1, int(j) - 1, int(k) - 1, Fraction(str(c))))
    sc = StructureConstants.from_brackets(dim, entries)
    return build_group(sc, horizontal, names=data.get("variables"), norm=data.get("norm"),
                       step_hint=data.get("step_hint"), definition=dict(data))


def load_group(spec: str) -> GroupModel:
    """Resolve ``heisenberg:<n>``, ``euclidean:<d>``, ``engel`` or a JSON file path."""
    name, _, arg = spec.partition(":")
    if name == "heisenberg":
        return heisenberg(int(arg or 1))
    if name == "euclidean":
        return euclidean(int(arg or 1))
    if name == "engel" and not arg:
        return engel()
    path = Path(spec)
    if not path.exists():
        raise GroupDefinitionError(f"unknown group preset or missing file: {spec!r}")
    return group_from_definition(json.loads(path.read_text()))


# -- operations -------------------------------------------------------------

def multiply(m: GroupModel, a: Sequence, b: Sequence) -> Point:
    """Exact group product of two points with rational coordinates."""
    pt = [as_fraction(v) for v in a] + [as_fraction(v) for v in b]
    return tuple(c(pt) for c in m.product_map)


def inverse(a: Sequence) -> Point:
    return tuple(-as_fraction(v) for v in a)


def left_invariant_field(m: GroupModel, j: int) -> VectorFieldOp:
    return m.left_fields[j]


def right_invariant_field(m: GroupModel, j: int) -> VectorFieldOp:
    return m.right_fields[j]


def dilate(m: GroupModel, a: Sequence, lam) -> Point:
    lam = as_fraction(lam)
    return tuple(as_fraction(v) * lam ** w for v, w in zip(a, m.weights))


def norm_power(m: GroupModel, a: Sequence) -> Tuple[Fraction, int]:
    """Exact ``(N(a)**k, k)`` for the homogeneous norm N; k is 4 for Kaplan norms."""
    a = [as_fraction(v) for v in a]
    if m.norm_kind == "kaplan":
        horiz = sum(v * v for v in a[:-1])
        return horiz ** 2 + 16 * a[-1] ** 2, 4
    m._require_stratified()
    k = math.lcm(*m.weights)
    return max(abs(v) ** (k // w) for v, w in zip(a, m.weights)), k


def homogeneous_norm(m: GroupModel, a: Sequence) -> float:
    value, k = norm_power(m, a)
    return float(value) ** (1.0 / k)


def unit_ball_volume(m: GroupModel, samples: int = 2 ** 20, seed: int = 0,
                     replicates: int = 8) -> Tuple[float, float]:
    """Volume of the homogeneous unit ball and its standard error.

    Max-type norms have a box as unit ball, so the value is exact. Otherwise
    ``replicates`` independently scrambled Sobol' sets share ``samples``
    points and the spread across replicates gives the error.
    """
    key = (samples, seed)
    if key in m._volume_cache:
        return m._volume_cache[key]
    lo, hi = m.unit_ball_box()
    box = float(np.prod(hi - lo))
    if m.norm_kind == "max":
        result = (box, 0.0)
    else:
        per = max(1, samples // replicates)
        log2 = int(math.ceil(math.log2(per)))
        rng = np.random.default_rng(seed)
        est = []
        for _ in range(replicates):
            sob = qmc.Sobol(m.dim, scramble=True, seed=rng)
            u = lo + (hi - lo) * sob.random_base2(log2)
            est.append(box * np.mean(m.norm_array(u) < 1.0))
        est = np.asarray(est)
        result = (float(est.mean()), float(est.std(ddof=1) / math.sqrt(replicates)))
    m._volume_cache[key] = result
    return result


def ball_volume(m: GroupModel, r: float, **kwargs) -> Tuple[float, float]:
    """Haar measure of ``B(x, r)`` (any centre) as ``(value, standard error)``."""
    if r <= 0:
        raise ValueError("radius must be positive")
    v1, err = unit_ball_volume(m, **kwargs)
    scale = float(r) ** m.homogeneous_dimension
    return v1 * scale, err * scale


def center_net(m: GroupModel, R_max, spacing, ray: Optional[Sequence] = None) -> List[Point]:
    """Centres for scans: points ``k*spacing*ray`` for k = 1..floor(R_max/spacing),
    or, without a ray, all points of the lattice ``spacing * Z^n`` with norm <= R_max.
    """
    R_max = as_fraction(R_max)
    spacing = as_fraction(spacing)
    if not 0 < spacing <= R_max:
        raise ValueError("need 0 < spacing <= R_max")
    count = int(R_max / spacing)
    if ray is not None:
        ray = [as_fraction(v) for v in ray]
        if len(ray) != m.dim or not any(ray):
            raise ValueError("ray must be a nonzero vector with one entry per coordinate")
        return [tuple(k * spacing * v for v in ray) for k in range(1, count + 1)]
    lo, hi = m.unit_ball_box()
    ranges = []
    for i in range(m.dim):
        ext = float(R_max) ** m.weights[i] * hi[i]
        kmax = int(math.floor(ext / float(spacing) + 1e-9))
        ranges.append(range(-kmax, kmax + 1))
    out = []
    for idx in product(*ranges):
        pt = tuple(i * spacing for i in idx)
        val, k = norm_power(m, pt)
        if val <= R_max ** k:
            out.append(pt)
    return out
