"""Encoding spaces, utilities, purposes, encoders, alignment maps and the motivational space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Iterable, Mapping, Sequence

from .errors import (
    DimensionMismatch,
    EmptyMission,
    EmptySupport,
    MixedSignSupport,
    ModelError,
    UnknownEncodingPoint,
    UnknownObservation,
)

KINDS = ("need", "mission", "human")
POLARITIES = ("prescriptive", "proscriptive")
AXIS_SEP = "/"


@dataclass(frozen=True)
class EncodingSpace:
    """A finite set of encoding points.

    ``dims`` optionally declares the space as a product of named axes, in which
    case every point is the axis values joined with ``/`` in axis order.
    """

    id: str
    owner: str
    points: frozenset[str]
    dims: tuple[tuple[str, tuple[str, ...]], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", frozenset(self.points))
        if not self.points:
            raise ModelError(f"encoding space {self.id}: no points")
        if self.dims is not None:
            dims = tuple((name, tuple(values)) for name, values in self.dims)
            object.__setattr__(self, "dims", dims)
            expected = {AXIS_SEP.join(combo) for combo in product(*(v for _, v in dims))}
            if expected != set(self.points) or len(expected) != math.prod(len(v) for _, v in dims):
                raise ModelError(f"encoding space {self.id}: points do not match the declared axes")

    @classmethod
    def product_space(cls, id: str, owner: str, dims: Sequence[tuple[str, Sequence[str]]]) -> "EncodingSpace":
        dims = tuple((n, tuple(v)) for n, v in dims)
        points = frozenset(AXIS_SEP.join(c) for c in product(*(v for _, v in dims)))
        return cls(id, owner, points, dims)

    def coordinates(self, point: str) -> tuple[int, ...]:
        """Axis indices of ``point``; only meaningful for product spaces."""
        if self.dims is None:
            raise ModelError(f"encoding space {self.id} has no axes")
        parts = point.split(AXIS_SEP)
        return tuple(values.index(p) for (_, values), p in zip(self.dims, parts))


@dataclass(frozen=True)
class UtilityFunction:
    space: str
    table: Mapping[str, float]

    def __call__(self, point: str) -> float:
        try:
            return self.table[point]
        except KeyError:
            raise UnknownEncodingPoint(f"{point!r} has no utility in space {self.space}") from None

    def check_total(self, space: EncodingSpace) -> None:
        missing = space.points - set(self.table)
        if missing:
            raise ModelError(f"utility over {space.id} missing points {sorted(missing)[:5]}")
        extra = set(self.table) - space.points
        if extra:
            raise UnknownEncodingPoint(f"utility over {space.id} names unknown points {sorted(extra)[:5]}")
        for p, u in self.table.items():
            if not math.isfinite(u):
                raise ModelError(f"utility of {p} in {space.id} is not finite")


@dataclass(frozen=True)
class Purpose:
    id: str
    owner: str
    space: str
    kind: str
    polarity: str
    support: frozenset[str]
    utility: UtilityFunction
    priority: float = 1.0
    intention_flag: bool = True
    intended_domains: frozenset[str] = frozenset()
    ground_truth: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", frozenset(self.support))
        object.__setattr__(self, "intended_domains", frozenset(self.intended_domains))
        if self.kind not in KINDS:
            raise ModelError(f"purpose {self.id}: unknown kind {self.kind!r}")
        if self.polarity not in POLARITIES:
            raise ModelError(f"purpose {self.id}: unknown polarity {self.polarity!r}")
        nonzero = frozenset(p for p, u in self.utility.table.items() if u != 0)
        if nonzero != self.support:
            raise ModelError(f"purpose {self.id}: support differs from the nonzero-utility set")
        if not self.support:
            raise EmptySupport(f"purpose {self.id}: utility is zero everywhere")
        _check_polarity(self.id, self.polarity, [self.utility.table[p] for p in self.support])
        if self.intention_flag and not self.intended_domains:
            raise ModelError(f"purpose {self.id}: intended but no intended domains")

    @property
    def proscriptive(self) -> bool:
        return self.polarity == "proscriptive"

    def max_utility(self) -> float:
        return max(self.utility.table[p] for p in self.support)

    def argmax_points(self) -> frozenset[str]:
        best = self.max_utility()
        return frozenset(p for p in self.support if self.utility.table[p] == best)

    def with_priority(self, priority: float) -> "Purpose":
        return replace(self, priority=priority)


def _check_polarity(pid: str, polarity: str, values: Iterable[float]) -> None:
    values = list(values)
    if any(v > 0 for v in values) and any(v < 0 for v in values):
        raise MixedSignSupport(f"purpose {pid}: support mixes positive and negative utilities")
    sign_ok = all(v > 0 for v in values) if polarity == "prescriptive" else all(v < 0 for v in values)
    if not sign_ok:
        raise MixedSignSupport(f"purpose {pid}: utilities do not match polarity {polarity}")


def purpose_from_utility(
    id: str,
    space: EncodingSpace,
    utility: UtilityFunction | Mapping[str, float],
    kind: str = "human",
    polarity: str | None = None,
    priority: float = 1.0,
    intention_flag: bool = True,
    intended_domains: Iterable[str] = (),
    ground_truth: bool = False,
) -> Purpose:
    """Build a purpose whose support is the nonzero set of ``utility``.

    Polarity is inferred from the sign pattern when not given.
    """
    if not isinstance(utility, UtilityFunction):
        utility = UtilityFunction(space.id, dict(utility))
    utility.check_total(space)
    support = frozenset(p for p, u in utility.table.items() if u != 0)
    if not support:
        raise EmptySupport(f"purpose {id}: utility is zero everywhere")
    values = [utility.table[p] for p in support]
    if polarity is None:
        if any(v > 0 for v in values) and any(v < 0 for v in values):
            raise MixedSignSupport(f"purpose {id}: support mixes positive and negative utilities")
        polarity = "prescriptive" if values[0] > 0 else "proscriptive"
    return Purpose(
        id, space.owner, space.id, kind, polarity, support, utility,
        priority, intention_flag, frozenset(intended_domains), ground_truth,
    )


@dataclass(frozen=True)
class ObservationEncoder:
    """Maps one agent's observations in domain ``domain`` to points of ``space``.

    ``context`` separates encoders that apply under different conditions
    (for example day and night) for the same space and domain.
    """

    owner: str
    space: str
    domain: str
    table: Mapping[str, str]
    context: str | None = None
    inverse: Mapping[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        inv: dict[str, set[str]] = {}
        for o, e in self.table.items():
            inv.setdefault(e, set()).add(o)
        object.__setattr__(self, "inverse", {e: frozenset(os) for e, os in inv.items()})

    def check_against(self, space: EncodingSpace, observations: Iterable[str] | None = None) -> None:
        stray = set(self.table.values()) - space.points
        if stray:
            raise UnknownEncodingPoint(f"encoder {self.space}/{self.domain} emits unknown points {sorted(stray)[:5]}")
        if observations is not None:
            missing = set(observations) - set(self.table)
            if missing:
                raise UnknownObservation(
                    f"encoder {self.space}/{self.domain} does not encode {sorted(missing)[:5]}"
                )


def encode(encoder: ObservationEncoder, observation: str) -> str:
    try:
        return encoder.table[observation]
    except KeyError:
        raise UnknownObservation(
            f"{observation!r} not encoded by {encoder.owner} encoder {encoder.space}/{encoder.domain}"
        ) from None


def decode(encoder: ObservationEncoder, point: str, space: EncodingSpace | None = None) -> frozenset[str]:
    """Exact preimage of ``point``; empty when the point is never produced."""
    if space is not None and point not in space.points:
        raise UnknownEncodingPoint(f"{point!r} is not a point of {space.id}")
    return encoder.inverse.get(point, frozenset())


def encode_set(encoder: ObservationEncoder, observations: Iterable[str]) -> frozenset[str]:
    return frozenset(encode(encoder, o) for o in observations)


@dataclass(frozen=True)
class AlignmentMap:
    """Robot encoding point -> human encoding point."""

    human_space: str
    robot_space: str
    table: Mapping[str, str]

    def inverse(self, human_point: str) -> frozenset[str]:
        return frozenset(m for m, e in self.table.items() if e == human_point)


def derive_mission(
    human_purpose: Purpose,
    amap: AlignmentMap,
    robot_space: EncodingSpace,
    id: str | None = None,
    priority: float = 1.0,
    intention_flag: bool = True,
    intended_domains: Iterable[str] = (),
) -> Purpose:
    """Robot mission whose points map into the human support, inheriting utilities.

    Intended domains default to the human purpose's.
    """
    if amap.human_space != human_purpose.space or amap.robot_space != robot_space.id:
        raise ModelError("alignment map does not connect these spaces")
    missing = robot_space.points - set(amap.table)
    if missing:
        raise ModelError(f"alignment map misses robot points {sorted(missing)[:5]}")
    table = {
        m: (human_purpose.utility(amap.table[m]) if amap.table[m] in human_purpose.support else 0.0)
        for m in robot_space.points
    }
    support = frozenset(m for m, u in table.items() if u != 0)
    if not support:
        raise EmptyMission(f"no robot point of {robot_space.id} maps into purpose {human_purpose.id}")
    return Purpose(
        id or f"{human_purpose.id}@{robot_space.id}",
        robot_space.owner,
        robot_space.id,
        "mission",
        human_purpose.polarity,
        support,
        UtilityFunction(robot_space.id, table),
        priority,
        intention_flag,
        frozenset(intended_domains) or human_purpose.intended_domains,
    )


@dataclass(frozen=True)
class MotivationalSpace:
    """Product of a robot's purpose spaces with a priority-weighted utility."""

    robot: str
    components: tuple[str, ...]
    priorities: Mapping[str, float]
    utilities: Mapping[str, UtilityFunction]

    @classmethod
    def from_purposes(cls, robot: str, purposes: Sequence[Purpose]) -> "MotivationalSpace":
        return cls(
            robot,
            tuple(p.id for p in purposes),
            {p.id: p.priority for p in purposes},
            {p.id: p.utility for p in purposes},
        )


def composite_utility(mspace: MotivationalSpace, point: Sequence[str] | Mapping[str, str]) -> float:
    """Sum over components of priority times component utility."""
    if isinstance(point, Mapping):
        if set(point) != set(mspace.components):
            raise DimensionMismatch(f"point components {sorted(point)} != {list(mspace.components)}")
        coords = [point[c] for c in mspace.components]
    else:
        coords = list(point)
        if len(coords) != len(mspace.components):
            raise DimensionMismatch(f"point has {len(coords)} components, space has {len(mspace.components)}")
    return math.fsum(
        mspace.priorities[c] * mspace.utilities[c](e) for c, e in zip(mspace.components, coords)
    )


def intention_set(purposes: Iterable[Purpose]) -> list[Purpose]:
    return [p for p in purposes if p.intention_flag]


__all__ = [
    "EncodingSpace",
    "UtilityFunction",
    "Purpose",
    "ObservationEncoder",
    "AlignmentMap",
    "MotivationalSpace",
    "purpose_from_utility",
    "derive_mission",
    "encode",
    "decode",
    "encode_set",
    "composite_utility",
    "intention_set",
]
