"""Sensor models mapping world states to an agent's observations, and their inverses."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import _dist
from .errors import MalformedRow, ModelError, UncoveredState, UnknownObservation
from .world import Domain


@dataclass(frozen=True)
class SensorModel:
    """``map[state]`` is an observation id or a ``{observation: p}`` table.

    Human and robot sensors are separate objects; observation ids are never
    compared across owners.
    """

    owner: str
    observations: frozenset[str]
    map: Mapping[str, _dist.Row]
    covered_domains: frozenset[str] = frozenset()
    # state id -> domain id, filled by ``for_domains`` and used by domain filters
    state_domain: Mapping[str, str] | None = None
    _inverse: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", frozenset(self.observations))
        object.__setattr__(self, "covered_domains", frozenset(self.covered_domains))
        for state, row in self.map.items():
            if not isinstance(row, str):
                problem = _dist.row_problem(row)
                if problem:
                    raise MalformedRow(f"sensor {self.owner}: row for {state}: {problem}")
            for o in _dist.support(row):
                if o not in self.observations:
                    raise UnknownObservation(f"sensor {self.owner}: {state} emits unknown observation {o!r}")

    @classmethod
    def for_domains(
        cls,
        owner: str,
        domains: Iterable[Domain],
        map: Mapping[str, _dist.Row],
        observations: Iterable[str] | None = None,
    ) -> "SensorModel":
        """Build a sensor and check that it covers every state of ``domains``."""
        domains = list(domains)
        state_domain = {s: d.id for d in domains for s in d.states}
        missing = sorted(set(state_domain) - set(map))
        if missing:
            raise UncoveredState(f"sensor {owner}: no reading for states {missing[:5]}")
        if observations is None:
            observations = set()
            for row in map.values():
                observations |= _dist.support(row)
        return cls(owner, frozenset(observations), dict(map), frozenset(d.id for d in domains), state_domain)

    @property
    def deterministic(self) -> bool:
        return all(_dist.is_deterministic(r) for r in self.map.values())

    def support(self, state: str) -> frozenset[str]:
        if state not in self.map:
            raise UncoveredState(f"sensor {self.owner} does not cover {state!r}")
        return _dist.support(self.map[state])

    def states_of(self, domains: Iterable[str]) -> frozenset[str]:
        wanted = set(domains)
        if self.state_domain is None:
            raise ModelError(f"sensor {self.owner} has no state/domain assignment")
        return frozenset(s for s, d in self.state_domain.items() if d in wanted)

    def emitters(self, observation: str) -> frozenset[str]:
        """States that can emit ``observation``; the inverse table is built on first use."""
        if not self._inverse:
            inv: dict[str, set[str]] = {}
            for s, row in self.map.items():
                for o in _dist.support(row):
                    inv.setdefault(o, set()).add(s)
            self._inverse.update({o: frozenset(ss) for o, ss in inv.items()})
        return self._inverse.get(observation, frozenset())


def observe(sensor: SensorModel, state: str, rng: random.Random) -> str:
    if state not in sensor.map:
        raise UncoveredState(f"sensor {sensor.owner} does not cover {state!r}")
    return _dist.sample(sensor.map[state], rng)


def preimage(sensor: SensorModel, observation: str, domain_filter: Iterable[str] | None = None) -> frozenset[str]:
    """States that emit ``observation`` with nonzero probability."""
    if observation not in sensor.observations:
        raise UnknownObservation(f"{observation!r} is not an observation of sensor {sensor.owner}")
    hits = sensor.emitters(observation)
    if domain_filter is not None:
        hits &= sensor.states_of(domain_filter)
    return hits


def observe_set(sensor: SensorModel, states: Iterable[str]) -> frozenset[str]:
    out: set[str] = set()
    for s in states:
        out |= sensor.support(s)
    return frozenset(out)


def identity_sensor(owner: str, domains: Iterable[Domain], prefix: str = "") -> SensorModel:
    """A sensor that reports the state itself (optionally prefixed)."""
    domains = list(domains)
    table = {s: prefix + s for d in domains for s in d.states}
    return SensorModel.for_domains(owner, domains, table)


__all__ = ["SensorModel", "observe", "preimage", "observe_set", "identity_sensor"]
