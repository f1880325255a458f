"""Finite domains: states, the robot's shared action set, transitions, histories."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import _dist
from .errors import MalformedRow, ModelError, UnknownAction, UnknownState

HISTORY_KINDS = (
    "state-action",
    "observation-action",
    "state-only",
    "observation-only",
    "action-only",
)


@dataclass(frozen=True)
class Domain:
    """A finite environment ``d`` with a total transition table.

    ``transition[(state, action)]`` is either the successor state id or a
    ``{state: probability}`` table. Rows are validated, never repaired.
    """

    id: str
    states: frozenset[str]
    actions: frozenset[str]
    transition: Mapping[tuple[str, str], _dist.Row]
    initial_states: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "actions", frozenset(self.actions))
        object.__setattr__(self, "initial_states", frozenset(self.initial_states))
        if not self.states:
            raise ModelError(f"domain {self.id}: no states")
        if not self.initial_states:
            raise ModelError(f"domain {self.id}: initial_states is empty")
        stray = self.initial_states - self.states
        if stray:
            raise UnknownState(f"domain {self.id}: initial states {sorted(stray)} not in states")
        for s in self.states:
            for a in self.actions:
                if (s, a) not in self.transition:
                    raise ModelError(f"domain {self.id}: transition missing for ({s}, {a})")
        for (s, a), row in self.transition.items():
            if s not in self.states:
                raise UnknownState(f"domain {self.id}: transition source {s!r}")
            if a not in self.actions:
                raise UnknownAction(f"domain {self.id}: transition action {a!r}")
            if not isinstance(row, str):
                problem = _dist.row_problem(row)
                if problem:
                    raise MalformedRow(f"domain {self.id}: row ({s}, {a}): {problem}")
            for target in _dist.support(row) if not isinstance(row, str) else (row,):
                if target not in self.states:
                    raise UnknownState(f"domain {self.id}: ({s}, {a}) leads to unknown state {target!r}")

    @property
    def deterministic(self) -> bool:
        return all(_dist.is_deterministic(row) for row in self.transition.values())

    def successors(self, state: str, action: str) -> frozenset[str]:
        return _dist.support(self.transition[(state, action)])

    def distribution(self, state: str, action: str) -> dict[str, float]:
        return _dist.as_distribution(self.transition[(state, action)])


def _check_query(domain: Domain, state: str, action: str | None = None) -> None:
    if state not in domain.states:
        raise UnknownState(f"{state!r} is not a state of domain {domain.id}")
    if action is not None and action not in domain.actions:
        raise UnknownAction(f"{action!r} is not an action of domain {domain.id}")


def step(domain: Domain, state: str, action: str, rng: random.Random) -> str:
    """Apply one transition; stochastic rows draw from ``rng``."""
    _check_query(domain, state, action)
    row = domain.transition[(state, action)]
    if not isinstance(row, str):
        problem = _dist.row_problem(row)
        if problem:
            raise MalformedRow(f"row ({state}, {action}): {problem}")
    return _dist.sample(row, rng)


def reachable(domain: Domain, sources: Iterable[str], horizon: int) -> frozenset[str]:
    """States reachable from ``sources`` by at most ``horizon`` actions."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    frontier = set(sources)
    for s in frontier:
        _check_query(domain, s)
    seen = set(frontier)
    for _ in range(horizon):
        nxt = set()
        for s in frontier:
            for a in domain.actions:
                nxt |= domain.successors(s, a)
        frontier = nxt - seen
        if not frontier:
            break
        seen |= frontier
    return frozenset(seen)


def distances(domain: Domain, sources: Iterable[str], actions: Iterable[str] | None = None) -> dict[str, int]:
    """Breadth-first action counts from ``sources`` over nonzero-probability edges."""
    acts = sorted(domain.actions if actions is None else actions)
    dist = {s: 0 for s in sources}
    queue = list(dist)
    i = 0
    while i < len(queue):
        s = queue[i]
        i += 1
        for a in acts:
            for t in sorted(domain.successors(s, a)):
                if t not in dist:
                    dist[t] = dist[s] + 1
                    queue.append(t)
    return dist


@dataclass(frozen=True)
class History:
    """A finite trace. Alternating kinds start and end with the non-action symbol."""

    kind: str
    entries: tuple[str, ...]
    window: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.kind not in HISTORY_KINDS:
            raise ModelError(f"unknown history kind {self.kind!r}")
        if self.kind in ("state-action", "observation-action") and self.entries:
            if len(self.entries) % 2 == 0:
                raise ModelError("alternating history must end with a state/observation")
        if self.window is not None:
            t, tau = self.window
            if t < 0 or tau < 1:
                raise ModelError(f"window {self.window} needs t >= 0 and tau >= 1")

    @property
    def symbols(self) -> tuple[str, ...]:
        """States (or observations) of an alternating history."""
        if self.kind in ("state-action", "observation-action"):
            return self.entries[0::2]
        if self.kind == "action-only":
            return ()
        return self.entries

    @property
    def actions(self) -> tuple[str, ...]:
        if self.kind in ("state-action", "observation-action"):
            return self.entries[1::2]
        if self.kind == "action-only":
            return self.entries
        return ()

    def validate(self, domain: Domain) -> None:
        """Check membership of every entry against ``domain`` (state kinds only)."""
        if self.kind in ("state-action", "state-only"):
            for s in self.symbols:
                _check_query(domain, s)
        for a in self.actions:
            if a not in domain.actions:
                raise UnknownAction(a)
        if self.kind == "state-action":
            for i, a in enumerate(self.actions):
                s, t = self.entries[2 * i], self.entries[2 * i + 2]
                if t not in domain.successors(s, a):
                    raise ModelError(f"history step {s} --{a}--> {t} has zero probability")

    def slice(self, start: int, length: int) -> "History":
        """Sub-history covering steps ``start .. start+length`` (alternating kinds)."""
        if self.kind not in ("state-action", "observation-action"):
            raise ModelError("slice needs an alternating history")
        entries = self.entries[2 * start : 2 * (start + length) + 1]
        return History(self.kind, entries, (start, length) if length >= 1 else None)


def deterministic_domain(
    id: str,
    edges: Mapping[tuple[str, str], str],
    initial: Iterable[str],
    states: Iterable[str] | None = None,
    actions: Iterable[str] | None = None,
    default: str = "self",
) -> Domain:
    """Build a domain from partial deterministic edges; missing pairs self-loop."""
    states = set(states or ()) | {s for s, _ in edges} | set(edges.values()) | set(initial)
    actions = set(actions or ()) | {a for _, a in edges}
    table: dict[tuple[str, str], _dist.Row] = {}
    for s in states:
        for a in actions:
            table[(s, a)] = edges.get((s, a), s if default == "self" else default)
    return Domain(id, frozenset(states), frozenset(actions), table, frozenset(initial))


__all__ = [
    "Domain",
    "History",
    "HISTORY_KINDS",
    "step",
    "reachable",
    "distances",
    "deterministic_domain",
]
