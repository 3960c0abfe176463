"""Envelope heuristic shared by eigenvalue scans and integral-growth scans."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

GROWTH = "Growth"
BOUNDED = "Bounded"
INCONCLUSIVE = "Inconclusive"

_FLOOR = 1e-12


@dataclass(frozen=True)
class VerdictConfig:
    """Thresholds for classifying a finite sequence sampled along x -> infinity.

    Growth: ``last > growth_factor * first`` and a positive least-squares
    slope of ``log(values)`` against the index. Bounded: the maximum over the
    tail half is less than ``bounded_ratio`` times the maximum over the head
    half. Anything else is Inconclusive.
    """

    growth_factor: float = 4.0
    bounded_ratio: float = 1.25

    def to_dict(self) -> dict:
        return asdict(self)


def envelope_verdict(values: Sequence[float], config: VerdictConfig = VerdictConfig()) -> str:
    v = np.asarray(values, dtype=float)
    if v.size < 2 or not np.all(np.isfinite(v)):
        return INCONCLUSIVE
    logs = np.log(np.maximum(v, _FLOOR))
    slope = np.polyfit(np.arange(v.size, dtype=float), logs, 1)[0]
    if v[-1] > config.growth_factor * max(v[0], _FLOOR) and slope > 0:
        return GROWTH
    half = v.size // 2
    head = max(v[:half].max(), _FLOOR)
    tail = max(v[half:].max(), _FLOOR)
    if tail / head < config.bounded_ratio:
        return BOUNDED
    return INCONCLUSIVE
