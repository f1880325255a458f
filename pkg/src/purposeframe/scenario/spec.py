"""In-memory scenario description: the world, the agents' purposes, and the trial script."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..alignment import CASE_KINDS
from ..arbitration import RULES, ArbitrationConfig
from ..competence import LearnerConfig
from ..errors import ValidationError
from ..grounding import Goal, ground_point, ground_purpose
from ..perception import SensorModel
from ..purposes import AlignmentMap, EncodingSpace, ObservationEncoder, Purpose
from ..world import Domain

PLANNERS = ("value-iteration", "q-learning")


@dataclass(frozen=True)
class Candidate:
    """A goal the robot may choose during a trial.

    ``points`` empty means the whole support of the purpose. ``context`` pins
    the encoder used for grounding; when None the trial's context is used.
    """

    id: str
    purpose: str
    domain: str
    points: tuple[str, ...] = ()
    context: str | None = None


@dataclass(frozen=True)
class PlannerSpec:
    kind: str = "value-iteration"
    gamma: float = 0.95
    timeout: int = 25
    learner: LearnerConfig | None = None


@dataclass(frozen=True)
class Phase:
    first: int
    last: int
    alpha: Mapping[str, float] = field(default_factory=dict)
    add: tuple[str, ...] = ()
    remove: tuple[str, ...] = ()


@dataclass(frozen=True)
class TrialSpec:
    """``start`` lists options drawn uniformly: a relocation name or a state id."""

    index: int
    context: str | None = None
    start: tuple[str, ...] = ()


@dataclass(frozen=True)
class CheckSpec:
    """An alignment (and optionally causal) check run at the end of each phase."""

    id: str
    case: str
    human_purpose: str
    robot_purpose: str
    point: str
    domain: str
    context: str | None = None
    timeout: int = 25
    theta: float | None = None
    causal_baseline: str | None = None
    horizon: int | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    robot: str
    human: str
    domains: Mapping[str, Domain]
    sensors: Mapping[str, SensorModel]
    spaces: Mapping[str, EncodingSpace]
    encoders: tuple[ObservationEncoder, ...]
    alignment_maps: tuple[AlignmentMap, ...]
    purposes: Mapping[str, Purpose]
    inactive: frozenset[str] = frozenset()
    derived: Mapping[str, tuple[str, int]] = field(default_factory=dict)
    candidates: tuple[Candidate, ...] = ()
    arbitration: ArbitrationConfig = ArbitrationConfig(rule="motivational")
    planner: PlannerSpec = PlannerSpec()
    on_success: Mapping[str, str] = field(default_factory=dict)
    relocations: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    phases: tuple[Phase, ...] = ()
    schedule: tuple[TrialSpec, ...] = ()
    checks: tuple[CheckSpec, ...] = ()
    seed: int = 0
    description: str = ""

    # lookups ------------------------------------------------------------

    def encoder(self, owner: str, space: str, domain: str, context: str | None = None) -> ObservationEncoder:
        fallback = None
        for enc in self.encoders:
            if (enc.owner, enc.space, enc.domain) != (owner, space, domain):
                continue
            if enc.context == context:
                return enc
            if enc.context is None:
                fallback = enc
        if fallback is None:
            raise ValidationError(f"no {owner} encoder for {space} in {domain} (context {context})", space)
        return fallback

    def phase_of(self, trial: int) -> int:
        for i, ph in enumerate(self.phases):
            if ph.first <= trial <= ph.last:
                return i
        raise ValidationError(f"trial {trial} is in no phase", str(trial))

    def configuration(self, phase: int | None) -> dict[str, Purpose]:
        """Active purposes with priorities after applying phases up to ``phase``.

        Phases only touch priorities and the active set, never utilities.
        """
        active = {pid for pid in self.purposes if pid not in self.inactive}
        alpha: dict[str, float] = {}
        if phase is not None:
            for ph in self.phases[: phase + 1]:
                active |= set(ph.add)
                active -= set(ph.remove)
                alpha.update(ph.alpha)
        out = {}
        for pid in sorted(active):
            p = self.purposes[pid]
            out[pid] = p.with_priority(alpha[pid]) if pid in alpha else p
        return out

    def ground_candidate(self, cand: Candidate, context: str | None) -> Goal:
        purpose = self.purposes[cand.purpose]
        enc = self.encoder(purpose.owner, purpose.space, cand.domain, cand.context or context)
        if not cand.points:
            return ground_purpose(purpose, enc, cand.id)
        goals = [ground_point(purpose, pt, enc) for pt in cand.points]
        obs = frozenset().union(*(g.points for g in goals))
        upp = {o: u for g in goals for o, u in g.utility_per_point.items()}
        return Goal(purpose.owner, purpose.id, cand.domain, obs, "+".join(cand.points), upp,
                    purpose.intention_flag, cand.id)

    # validation -----------------------------------------------------------

    def validate(self) -> None:
        """Check every cross-reference eagerly; raise ValidationError naming the element."""
        for sid, sp in self.spaces.items():
            if sp.id != sid:
                raise ValidationError("space key differs from its id", sid)
        for owner, sensor in self.sensors.items():
            if sensor.owner != owner:
                raise ValidationError("sensor key differs from its owner", owner)
            for d in sensor.covered_domains:
                if d not in self.domains:
                    raise ValidationError(f"sensor covers unknown domain {d}", owner)
        for enc in self.encoders:
            label = f"encoder {enc.owner}/{enc.space}/{enc.domain}"
            if enc.space not in self.spaces:
                raise ValidationError(f"unknown space {enc.space}", label)
            if enc.domain not in self.domains:
                raise ValidationError(f"unknown domain {enc.domain}", label)
            if enc.owner not in self.sensors:
                raise ValidationError(f"no sensor for owner {enc.owner}", label)
            try:
                enc.check_against(self.spaces[enc.space], _observations_in(self.sensors[enc.owner], self.domains[enc.domain]))
            except Exception as err:
                raise ValidationError(str(err), label) from None
        for m in self.alignment_maps:
            for sp in (m.human_space, m.robot_space):
                if sp not in self.spaces:
                    raise ValidationError(f"alignment map names unknown space {sp}", f"{m.human_space}<-{m.robot_space}")
        for pid, p in self.purposes.items():
            if p.id != pid:
                raise ValidationError("purpose key differs from its id", pid)
            if p.space not in self.spaces:
                raise ValidationError(f"unknown space {p.space}", pid)
            try:
                p.utility.check_total(self.spaces[p.space])
            except Exception as err:
                raise ValidationError(str(err), pid) from None
            for d in p.intended_domains:
                if d not in self.domains:
                    raise ValidationError(f"intends unknown domain {d}", pid)
            if p.owner not in (self.robot, self.human):
                raise ValidationError(f"owner {p.owner} is neither the robot nor the human", pid)
        for pid in self.inactive:
            if pid not in self.purposes:
                raise ValidationError("inactive purpose is not declared", pid)
        for pid, (src, idx) in self.derived.items():
            if src not in self.purposes or not 0 <= idx < len(self.alignment_maps):
                raise ValidationError("derivation names an unknown purpose or map", pid)
        if self.arbitration.rule not in RULES:
            raise ValidationError(f"unknown arbitration rule {self.arbitration.rule}", "arbitration")
        if self.planner.kind not in PLANNERS:
            raise ValidationError(f"unknown planner {self.planner.kind}", "planner")
        if self.planner.timeout < 1:
            raise ValidationError("timeout must be at least 1", "planner")
        ids = set()
        for c in self.candidates:
            if c.id in ids:
                raise ValidationError("duplicate candidate id", c.id)
            ids.add(c.id)
            if c.purpose not in self.purposes or self.purposes[c.purpose].owner != self.robot:
                raise ValidationError(f"candidate purpose {c.purpose} is not a robot purpose", c.id)
            if c.domain not in self.domains:
                raise ValidationError(f"unknown domain {c.domain}", c.id)
            for pt in c.points:
                if pt not in self.purposes[c.purpose].support:
                    raise ValidationError(f"point {pt} is outside the purpose support", c.id)
        if len({c.domain for c in self.candidates}) > 1:
            raise ValidationError("all candidates must share one domain", "candidates")
        for cid, action in self.on_success.items():
            if cid not in ids:
                raise ValidationError("on_success names an unknown candidate", cid)
            dom = self.domains[next(c.domain for c in self.candidates if c.id == cid)]
            if action not in dom.actions:
                raise ValidationError(f"unknown action {action}", cid)
        all_states = set().union(*(d.states for d in self.domains.values())) if self.domains else set()
        for name, table in self.relocations.items():
            for s, t in table.items():
                if s not in all_states or t not in all_states:
                    raise ValidationError(f"relocation maps unknown state {s if s not in all_states else t}", name)
        self._validate_schedule(all_states)
        for chk in self.checks:
            if chk.case not in CASE_KINDS:
                raise ValidationError(f"unknown case {chk.case}", chk.id)
            for pid, owner in ((chk.human_purpose, self.human), (chk.robot_purpose, self.robot)):
                if pid not in self.purposes or self.purposes[pid].owner != owner:
                    raise ValidationError(f"{pid} is not a purpose of {owner}", chk.id)
            if chk.point not in self.purposes[chk.robot_purpose].support:
                raise ValidationError(f"point {chk.point} is outside the robot purpose support", chk.id)
            if chk.domain not in self.domains:
                raise ValidationError(f"unknown domain {chk.domain}", chk.id)
            if chk.causal_baseline not in (None, "idle", "random"):
                raise ValidationError(f"unknown baseline {chk.causal_baseline}", chk.id)

    def _validate_schedule(self, all_states: set[str]) -> None:
        expected = 1
        for t in self.schedule:
            if t.index != expected:
                raise ValidationError(f"trials must be numbered 1.. in order, found {t.index}", str(t.index))
            expected += 1
            for opt in t.start:
                if opt not in self.relocations and opt not in all_states:
                    raise ValidationError(f"start option {opt} is neither a relocation nor a state", str(t.index))
                if t.index == 1 and opt in self.relocations:
                    raise ValidationError("the first trial cannot start by relocation", "1")
        n = len(self.schedule)
        cursor = 1
        for i, ph in enumerate(self.phases):
            if ph.first != cursor or ph.last < ph.first:
                raise ValidationError("phase trial ranges must partition the schedule", f"phase {i + 1}")
            cursor = ph.last + 1
            for pid in list(ph.alpha) + list(ph.add) + list(ph.remove):
                if pid not in self.purposes:
                    raise ValidationError(f"phase references unknown purpose {pid}", f"phase {i + 1}")
        if cursor != n + 1:
            raise ValidationError("phase trial ranges must partition the schedule", "phases")
        if n and not self.candidates:
            raise ValidationError("trials need at least one candidate goal", "candidates")


def _observations_in(sensor: SensorModel, domain: Domain) -> frozenset[str]:
    return frozenset(o for s in domain.states for o in sensor.support(s))


__all__ = ["Candidate", "PlannerSpec", "Phase", "TrialSpec", "CheckSpec", "ScenarioSpec", "PLANNERS"]
