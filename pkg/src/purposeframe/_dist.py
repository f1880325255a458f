"""Small helpers for finite probability tables stored as ``{outcome: p}``."""

from __future__ import annotations

import math
import random
from typing import Hashable, Mapping, TypeVar, Union

K = TypeVar("K", bound=Hashable)

ROW_TOLERANCE = 1e-9

# A table cell is either a single outcome (deterministic) or a distribution.
Row = Union[str, Mapping[str, float]]


def row_problem(row: Mapping[K, float]) -> str | None:
    """Return a description of what is wrong with ``row``, or None."""
    if not row:
        return "empty distribution"
    for key, p in row.items():
        if not isinstance(p, (int, float)) or isinstance(p, bool) or math.isnan(p):
            return f"non-numeric probability for {key!r}"
        if p < 0.0 or p > 1.0:
            return f"probability {p} for {key!r} outside [0, 1]"
    total = math.fsum(row.values())
    if abs(total - 1.0) > ROW_TOLERANCE:
        return f"probabilities sum to {total!r}, not 1"
    return None


def support(row: Row) -> frozenset[str]:
    if isinstance(row, str):
        return frozenset((row,))
    return frozenset(k for k, p in row.items() if p != 0.0)


def as_distribution(row: Row) -> dict[str, float]:
    if isinstance(row, str):
        return {row: 1.0}
    return {k: float(p) for k, p in row.items() if p != 0.0}


def sample(row: Row, rng: random.Random) -> str:
    """Draw one outcome; iteration order is sorted so draws are reproducible."""
    if isinstance(row, str):
        return row
    keys = sorted(k for k, p in row.items() if p != 0.0)
    if len(keys) == 1:
        return keys[0]
    u = rng.random()
    acc = 0.0
    for key in keys:
        acc += row[key]
        if u < acc:
            return key
    return keys[-1]


def is_deterministic(row: Row) -> bool:
    return isinstance(row, str) or len(support(row)) == 1
