"""Grounding purpose points into observation goals and state goals."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DuplicateGoalKey, ModelError, PointOutsideSupport
from .perception import SensorModel, preimage
from .purposes import ObservationEncoder, Purpose, decode

WHOLE_PURPOSE = "whole-purpose"


@dataclass(frozen=True)
class Goal:
    owner: str
    purpose: str
    domain: str
    points: frozenset[str]
    source_point: str
    utility_per_point: Mapping[str, float]
    intention_flag: bool = True
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", frozenset(self.points))
        if not self.id:
            object.__setattr__(self, "id", f"{self.purpose}:{self.source_point}@{self.domain}")

    @property
    def ungroundable(self) -> bool:
        return not self.points

    def __contains__(self, observation: str) -> bool:
        return observation in self.points


@dataclass(frozen=True)
class StateGoal:
    owner: str
    purpose: str
    domain: str
    states: frozenset[str]


def _check_encoder(purpose: Purpose, encoder: ObservationEncoder) -> None:
    if encoder.owner != purpose.owner or encoder.space != purpose.space:
        raise ModelError(
            f"encoder ({encoder.owner}, {encoder.space}) does not belong to purpose {purpose.id}"
        )


def ground_point(purpose: Purpose, point: str, encoder: ObservationEncoder, goal_id: str = "") -> Goal:
    """Goal made of the observations that encode to ``point``."""
    _check_encoder(purpose, encoder)
    if point not in purpose.support:
        raise PointOutsideSupport(f"{point!r} is not in the support of purpose {purpose.id}")
    obs = decode(encoder, point)
    u = purpose.utility(point)
    return Goal(
        purpose.owner, purpose.id, encoder.domain, obs, point,
        {o: u for o in obs}, purpose.intention_flag, goal_id,
    )


def ground_purpose(purpose: Purpose, encoder: ObservationEncoder, goal_id: str = "") -> Goal:
    """Goal made of every observation that encodes into the purpose support."""
    _check_encoder(purpose, encoder)
    obs = frozenset(o for o, e in encoder.table.items() if e in purpose.support)
    return Goal(
        purpose.owner, purpose.id, encoder.domain, obs, WHOLE_PURPOSE,
        {o: purpose.utility(encoder.table[o]) for o in obs}, purpose.intention_flag, goal_id,
    )


def state_goal(goal: Goal, sensor: SensorModel) -> StateGoal:
    if sensor.owner != goal.owner:
        raise ModelError(f"sensor of {sensor.owner} cannot ground a goal of {goal.owner}")
    states: set[str] = set()
    for o in goal.points:
        states |= preimage(sensor, o, [goal.domain] if sensor.state_domain is not None else None)
    return StateGoal(goal.owner, goal.purpose, goal.domain, frozenset(states))


@dataclass(frozen=True)
class GoalIndex:
    by_purpose: Mapping[str, tuple[Goal, ...]]
    by_domain: Mapping[str, tuple[Goal, ...]]
    all: tuple[Goal, ...]


def goal_index(goals: Iterable[Goal]) -> GoalIndex:
    """Group goals by purpose and by domain; one goal per (purpose, domain) cell."""
    cells: dict[tuple[str, str], Goal] = {}
    for g in goals:
        key = (g.purpose, g.domain)
        if key in cells:
            raise DuplicateGoalKey(f"two goals for purpose {g.purpose} in domain {g.domain}")
        cells[key] = g
    by_p: dict[str, list[Goal]] = defaultdict(list)
    by_d: dict[str, list[Goal]] = defaultdict(list)
    for (p, d), g in sorted(cells.items()):
        by_p[p].append(g)
        by_d[d].append(g)
    return GoalIndex(
        {k: tuple(v) for k, v in by_p.items()},
        {k: tuple(v) for k, v in by_d.items()},
        tuple(g for _, g in sorted(cells.items())),
    )


__all__ = ["Goal", "StateGoal", "GoalIndex", "WHOLE_PURPOSE", "ground_point", "ground_purpose", "state_goal", "goal_index"]
