"""Choosing which intended purpose (or goal) the robot pursues next."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import EmptyIntentionSet, ModelError, UnpredictableCandidate, UtilityOutOfRange
from .grounding import Goal
from .purposes import MotivationalSpace, Purpose, composite_utility

RULES = ("hierarchical", "urgency", "softmax", "motivational")


@dataclass(frozen=True)
class ArbitrationConfig:
    rule: str = "hierarchical"
    temperature: float = 1.0
    seed: int = 0
    dominance_factor: float = 10.0

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ModelError(f"unknown arbitration rule {self.rule!r}")
        if not self.temperature > 0:
            raise ModelError("temperature must be positive")


@dataclass(frozen=True)
class MotivationReadout:
    """Per intended purpose: its currently active point and that point's utility."""

    active_points: Mapping[str, str] = field(default_factory=dict)
    utilities: Mapping[str, float] = field(default_factory=dict)


def _argmax(scores: Mapping[str, float]) -> str:
    # ascending id breaks ties
    best = None
    for key in sorted(scores):
        if best is None or scores[key] > scores[best]:
            best = key
    assert best is not None
    return best


def _positive(intended: Iterable[Purpose]) -> list[Purpose]:
    chosen = [p for p in intended if not p.proscriptive]
    if not chosen:
        raise EmptyIntentionSet("no prescriptive purpose to select")
    return chosen


def select_hierarchical(intended: Sequence[Purpose], cfg: ArbitrationConfig | None = None) -> str:
    """Highest priority wins. Proscriptive purposes act as constraints and are skipped."""
    return _argmax({p.id: p.priority for p in _positive(intended)})


def urgency_scores(intended: Sequence[Purpose], readout: MotivationReadout) -> dict[str, float]:
    scores = {}
    for p in _positive(intended):
        try:
            u = readout.utilities[p.id]
        except KeyError:
            raise ModelError(f"no utility readout for purpose {p.id}") from None
        if not 0.0 < u < 1.0:
            raise UtilityOutOfRange(f"utility {u} of purpose {p.id} is outside (0, 1)")
        scores[p.id] = p.priority * (1.0 - u)
    return scores


def select_urgency(
    intended: Sequence[Purpose], readout: MotivationReadout, cfg: ArbitrationConfig | None = None
) -> str:
    return _argmax(urgency_scores(intended, readout))


def softmax(scores: Mapping[str, float], temperature: float) -> dict[str, float]:
    if not temperature > 0:
        raise ModelError("temperature must be positive")
    keys = sorted(scores)
    top = max(scores[k] for k in keys)
    weights = [math.exp((scores[k] - top) / temperature) for k in keys]
    total = math.fsum(weights)
    return {k: w / total for k, w in zip(keys, weights)}


def softmax_distribution(
    intended: Sequence[Purpose], readout: MotivationReadout, cfg: ArbitrationConfig
) -> dict[str, float]:
    return softmax(urgency_scores(intended, readout), cfg.temperature)


def sample_choice(distribution: Mapping[str, float], rng: random.Random) -> str:
    keys = sorted(distribution)
    u = rng.random()
    acc = 0.0
    for k in keys:
        acc += distribution[k]
        if u < acc:
            return k
    return keys[-1]


# A predictor returns the motivational point (component id -> encoding point)
# the robot expects to be in after achieving the goal, or None if it cannot tell.
Predictor = Callable[[Goal], Mapping[str, str] | None]


def motivational_scores(mspace: MotivationalSpace, candidates: Iterable[Goal], predict: Predictor) -> dict[str, float]:
    scores = {}
    for g in candidates:
        point = predict(g)
        if point is None:
            raise UnpredictableCandidate(f"no predicted motivational point for goal {g.id}")
        scores[g.id] = composite_utility(mspace, point)
    return scores


def select_motivational(
    mspace: MotivationalSpace,
    candidates: Sequence[Goal],
    predict: Predictor,
    cfg: ArbitrationConfig | None = None,
) -> str:
    """One-step greedy: the goal whose predicted outcome has the best composite utility."""
    if not candidates:
        raise EmptyIntentionSet("no candidate goals")
    return _argmax(motivational_scores(mspace, candidates, predict))


def priority_warnings(purposes: Iterable[Purpose], factor: float = 10.0) -> list[str]:
    """Warn about proscriptive purposes whose priority does not dominate the rest."""
    purposes = list(purposes)
    positive = [abs(p.priority) for p in purposes if not p.proscriptive]
    if not positive:
        return []
    bound = factor * max(positive)
    return [
        f"proscriptive purpose {p.id}: |priority| {abs(p.priority):g} < {bound:g}"
        for p in purposes
        if p.proscriptive and abs(p.priority) < bound
    ]


__all__ = [
    "ArbitrationConfig",
    "MotivationReadout",
    "select_hierarchical",
    "select_urgency",
    "urgency_scores",
    "softmax",
    "softmax_distribution",
    "sample_choice",
    "motivational_scores",
    "select_motivational",
    "priority_warnings",
]
