"""Scrambled Sobol' sampling of homogeneous balls.

``B(c, r) = c * dilate_r(B(e, 1))``, and both left translation and the
dilation have constant Jacobian, so uniform points in the unit ball map to
uniform points in any ball.
"""

from __future__ import annotations

import hashlib
import math
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .group_model import GroupModel, unit_ball_volume


def derive_seed(base: int, *parts) -> int:
    """Deterministic 63-bit seed from a base seed and e.g. centre coordinates."""
    text = repr((int(base),) + tuple(repr(float(p)) if not isinstance(p, str) else p
                                     for p in _flatten(parts)))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little") >> 1


def _flatten(parts):
    for p in parts:
        if isinstance(p, (list, tuple, np.ndarray)):
            yield from _flatten(p)
        else:
            yield p


def unit_ball_points(m: GroupModel, count: int, seed: int) -> np.ndarray:
    """At least ``count`` scrambled Sobol' points inside the unit ball."""
    lo, hi = m.unit_ball_box()
    box = np.prod(hi - lo)
    v1 = _unit_ball_fraction(m) * box
    need = int(math.ceil(count * box / v1 * 1.05))
    m_log2 = max(1, int(math.ceil(math.log2(max(need, 2)))))
    sob = qmc.Sobol(m.dim, scramble=True, seed=np.random.default_rng(seed))
    u = lo + (hi - lo) * sob.random_base2(m_log2)
    u = u[m.norm_array(u) < 1.0]
    while len(u) < count:  # rare: acceptance below the estimate
        m_log2 += 1
        sob = qmc.Sobol(m.dim, scramble=True, seed=np.random.default_rng(seed))
        u = lo + (hi - lo) * sob.random_base2(m_log2)
        u = u[m.norm_array(u) < 1.0]
    return u


def _unit_ball_fraction(m: GroupModel) -> float:
    if m.norm_kind == "max":
        return 1.0
    lo, hi = m.unit_ball_box()
    v, _ = unit_ball_volume(m, samples=2 ** 16, seed=12345)
    return v / float(np.prod(hi - lo))


def ball_points(m: GroupModel, center: Sequence[float], radius: float, count: int,
                seed: int) -> np.ndarray:
    u = unit_ball_points(m, count, seed)
    c = np.asarray([float(v) for v in center])
    return m.multiply_array(c, m.dilate_array(u, radius))
