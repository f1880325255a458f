"""Deciding human-robot alignment on finite models.

Two procedures answer the same question. ``check_conditions`` evaluates the
set-inclusion conditions on the grounding chain (robot goal -> robot state
goal -> human observations -> human encoding). ``check_definition`` runs the
robot's pursuit and inspects what it actually produces. ``equivalence_audit``
compares them on generated models.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .competence import ActionPolicy, enabled, pursuit_distribution
from .errors import IncompleteModel, ModelError, PointOutsideSupport, ValidationError
from .grounding import Goal, ground_point, ground_purpose, state_goal
from .perception import SensorModel, observe_set
from .purposes import ObservationEncoder, Purpose, decode, encode
from .world import Domain

CASE_KINDS = (
    "extrinsic",
    "vut",
    "vumax",
    "intrinsic",
    "instrumental",
    "proscriptive",
    "multidomain-all",
    "multidomain-any",
)


@dataclass(frozen=True)
class AlignmentCase:
    kind: str
    theta: float | None = None
    domains: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in CASE_KINDS:
            raise ModelError(f"unknown alignment case {self.kind!r}")
        object.__setattr__(self, "domains", tuple(self.domains))

    @property
    def multidomain(self) -> bool:
        return self.kind.startswith("multidomain")

    @property
    def uses_chain(self) -> bool:
        return self.kind in ("instrumental", "proscriptive")

    def label(self) -> str:
        if self.kind == "vut" and self.theta is not None:
            return f"vut(theta={self.theta:g})"
        return self.kind


def Extrinsic() -> AlignmentCase:
    return AlignmentCase("extrinsic")


def VariableUtilityThreshold(theta: float | None = None) -> AlignmentCase:
    return AlignmentCase("vut", theta)


def VariableUtilityMax() -> AlignmentCase:
    return AlignmentCase("vumax")


def Intrinsic() -> AlignmentCase:
    return AlignmentCase("intrinsic")


def Instrumental() -> AlignmentCase:
    return AlignmentCase("instrumental")


def InstrumentalProscriptive() -> AlignmentCase:
    return AlignmentCase("proscriptive")


def MultiDomainAll(domains: Sequence[str] = ()) -> AlignmentCase:
    return AlignmentCase("multidomain-all", domains=tuple(domains))


def MultiDomainAny(domains: Sequence[str] = ()) -> AlignmentCase:
    return AlignmentCase("multidomain-any", domains=tuple(domains))


@dataclass(frozen=True)
class Intention:
    """The robot's commitment: purpose, point in it, and domains of execution."""

    purpose: str
    point: str
    domains: tuple[str, ...]
    formed: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "domains", tuple(self.domains))


@dataclass(frozen=True)
class AlignmentModel:
    """Everything needed to decide alignment in one or more domains.

    Ground-truth state goals, observation goals and their forbidden
    counterparts may be given explicitly; when omitted they are derived from
    the human purpose through the human encoder and sensor.
    """

    domains: Mapping[str, Domain]
    human_purpose: Purpose
    human_sensor: SensorModel
    human_encoders: Mapping[str, ObservationEncoder]
    robot_purpose: Purpose
    robot_sensor: SensorModel
    robot_encoders: Mapping[str, ObservationEncoder]
    policy: ActionPolicy
    intention: Intention
    timeout: int = 1
    target_states: Mapping[str, frozenset[str]] | None = None
    target_observations: Mapping[str, frozenset[str]] | None = None
    goals: Mapping[str, Goal] | None = None
    chains: Mapping[str, tuple[Goal, ...]] = field(default_factory=dict)
    threshold: float | None = None
    proscriptive: Purpose | None = None
    forbidden_states: Mapping[str, frozenset[str]] | None = None
    forbidden_observations: Mapping[str, frozenset[str]] | None = None
    idle_action: str | None = "stay"

    # ground truth -------------------------------------------------------

    def _human_encoder(self, d: str) -> ObservationEncoder:
        try:
            return self.human_encoders[d]
        except KeyError:
            raise IncompleteModel(f"no human encoder for domain {d}") from None

    def _robot_encoder(self, d: str) -> ObservationEncoder:
        try:
            return self.robot_encoders[d]
        except KeyError:
            raise IncompleteModel(f"no robot encoder for domain {d}") from None

    def target_obs(self, d: str) -> frozenset[str]:
        if self.target_observations is not None and d in self.target_observations:
            return frozenset(self.target_observations[d])
        return ground_purpose(self.human_purpose, self._human_encoder(d)).points

    def target_st(self, d: str) -> frozenset[str]:
        if self.target_states is not None and d in self.target_states:
            return frozenset(self.target_states[d])
        obs = self.target_obs(d)
        return frozenset(s for s in self.domain(d).states if self.human_sensor.support(s) & obs)

    def forbidden_obs(self, d: str) -> frozenset[str]:
        if self.proscriptive is None:
            return frozenset()
        if self.forbidden_observations is not None and d in self.forbidden_observations:
            return frozenset(self.forbidden_observations[d])
        enc = self._human_encoder(d)
        return frozenset(o for o, e in enc.table.items() if e in self.proscriptive.support)

    def forbidden_st(self, d: str) -> frozenset[str]:
        if self.proscriptive is None:
            return frozenset()
        if self.forbidden_states is not None and d in self.forbidden_states:
            return frozenset(self.forbidden_states[d])
        obs = self.forbidden_obs(d)
        return frozenset(s for s in self.domain(d).states if self.human_sensor.support(s) & obs)

    # robot side ---------------------------------------------------------

    def domain(self, d: str) -> Domain:
        try:
            return self.domains[d]
        except KeyError:
            raise IncompleteModel(f"unknown domain {d}") from None

    def goal(self, d: str) -> Goal:
        if self.goals is not None and d in self.goals:
            return self.goals[d]
        return ground_point(self.robot_purpose, self.intention.point, self._robot_encoder(d))

    def chain(self, d: str) -> tuple[Goal, ...]:
        return tuple(self.chains.get(d, ()))

    def human_domains(self) -> tuple[str, ...]:
        return tuple(sorted(self.human_purpose.intended_domains))

    def validate(self) -> None:
        if self.intention.purpose != self.robot_purpose.id:
            raise IncompleteModel(f"intention names purpose {self.intention.purpose}, model has {self.robot_purpose.id}")
        if self.intention.point not in self.robot_purpose.support:
            raise PointOutsideSupport(
                f"intention point {self.intention.point!r} is outside the support of {self.robot_purpose.id}"
            )
        for d in self.human_domains():
            if d not in self.domains:
                raise IncompleteModel(f"human intends unknown domain {d}")
        if self.timeout < 1:
            raise ValidationError("timeout must be at least 1", "timeout")
        if self.threshold is not None and self.threshold < 0:
            raise ValidationError("utility threshold must be nonnegative", "threshold")
        if self.proscriptive is not None:
            if self.proscriptive.space != self.human_purpose.space or not self.proscriptive.proscriptive:
                raise ValidationError(
                    "proscriptive purpose must be proscriptive and share the human purpose space",
                    self.proscriptive.id,
                )
            if self.proscriptive.support & self.human_purpose.support:
                raise ValidationError("prescriptive and proscriptive supports overlap", self.proscriptive.id)
            for d in self.human_domains():
                if self.target_st(d) & self.forbidden_st(d):
                    raise ValidationError(f"target and forbidden states overlap in {d}", d)
                if self.target_obs(d) & self.forbidden_obs(d):
                    raise ValidationError(f"target and forbidden observations overlap in {d}", d)


@dataclass
class ConditionResult:
    id: str
    label: str
    holds: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label, "holds": self.holds, "witness": _jsonable(self.witness)}


@dataclass
class AlignmentVerdict:
    aligned: bool
    mode: str
    case: str
    per_condition: list[ConditionResult]
    notes: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    outcomes: list[dict] = field(default_factory=list)

    def first_failing(self) -> ConditionResult | None:
        return next((c for c in self.per_condition if not c.holds), None)

    def to_dict(self) -> dict:
        return {
            "aligned": self.aligned,
            "mode": self.mode,
            "case": self.case,
            "conditions": [c.to_dict() for c in self.per_condition],
            "notes": list(self.notes),
            "warnings": list(self.warnings),
            "outcomes": _jsonable(self.outcomes),
        }


def _jsonable(x):
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


# ---------------------------------------------------------------- shared pieces


def _single_domain(model: AlignmentModel) -> str:
    ds = model.human_domains()
    if len(ds) != 1:
        raise IncompleteModel(f"single-domain case needs exactly one intended domain, got {list(ds)}")
    return ds[0]


def _case_domains(model: AlignmentModel, case: AlignmentCase) -> tuple[str, ...]:
    if case.multidomain:
        ds = case.domains or model.human_domains()
        if not ds:
            raise IncompleteModel("multi-domain case without domains")
        return tuple(ds)
    return (_single_domain(model),)


def _theta(model: AlignmentModel, case: AlignmentCase) -> float:
    theta = case.theta if case.theta is not None else model.threshold
    if theta is None:
        raise IncompleteModel("threshold case needs a utility threshold")
    if theta < 0:
        raise ValidationError("utility threshold must be nonnegative", "threshold")
    return theta


def _intention_problems(model: AlignmentModel, d: str) -> list[str]:
    out = []
    if not model.intention.formed:
        out.append("no robot intention formed")
    if d not in model.intention.domains:
        out.append(f"robot does not intend domain {d}")
    return out


def _point_test(model: AlignmentModel, case: AlignmentCase) -> Callable[[str], bool]:
    """Predicate a human encoding point must satisfy for the case."""
    hp = model.human_purpose
    if case.kind == "vut":
        theta = _theta(model, case)
        return lambda e: hp.utility.table.get(e, 0.0) > theta
    if case.kind == "vumax":
        best = hp.argmax_points()
        return lambda e: e in best
    return lambda e: e in hp.support


def _point_label(case: AlignmentCase, model: AlignmentModel) -> str:
    if case.kind == "vut":
        return f"human encoding has utility above {_theta(model, case):g}"
    if case.kind == "vumax":
        return "human encoding is a maximal-utility point"
    return "human encoding lies in the purpose"


def _chain_enabled(model: AlignmentModel, d: str, links: Sequence[Goal]) -> list[dict]:
    """Places where the enabledness chain breaks: link j not enabled from a state."""
    dom = model.domain(d)
    sources = sorted(dom.initial_states)
    broken = []
    for j, g in enumerate(links):
        bad = [s for s in sources if not enabled(g, s, dom, model.robot_sensor, model.timeout)]
        if bad:
            broken.append({"link": j, "goal": g.id, "states": bad})
            return broken
        sources = sorted(state_goal(g, model.robot_sensor).states)
    return broken


# ---------------------------------------------------------------- semantic mode


def _domain_conditions(model: AlignmentModel, case: AlignmentCase, d: str, prefix: str = "") -> list[ConditionResult]:
    enc_c = model._robot_encoder(d)
    enc_h = model._human_encoder(d)
    p = model.intention.point
    goal = model.goal(d)
    chain = model.chain(d) if case.uses_chain else ()
    numbered = case.uses_chain
    out: list[ConditionResult] = []

    problems = _intention_problems(model, d)
    decoded = decode(enc_c, p)
    outside = goal.points - decoded
    c1 = not problems and bool(goal.points) and not outside
    w1 = {"goal": goal.points, "decoded": decoded, "outside": outside}
    if problems:
        w1["problems"] = problems
    out.append(ConditionResult(prefix + "1", "robot goal grounds the intended point", c1, w1))

    s_omega = state_goal(goal, model.robot_sensor).states
    broken = _chain_enabled(model, d, list(chain) + [goal])
    s_target = model.target_st(d)
    if numbered:
        out.append(
            ConditionResult(prefix + "2", "subgoal chain enables the goal", not broken, {"broken": broken})
        )
        out.append(
            ConditionResult(
                prefix + "3", "robot state goal within human target states", s_omega <= s_target,
                {"states": s_omega, "outside": s_omega - s_target},
            )
        )
    else:
        ok = s_omega <= s_target and not broken
        out.append(
            ConditionResult(
                prefix + "2", "robot state goal reachable and within human target states", ok,
                {"states": s_omega, "outside": s_omega - s_target, "not_enabled": broken},
            )
        )

    o_omega = observe_set(model.human_sensor, s_omega)
    g_target = model.target_obs(d)
    o_bad = o_omega - g_target
    o_wit = {"observations": o_omega, "outside": o_bad,
             "states": sorted(s for s in s_omega if model.human_sensor.support(s) - g_target)}
    e_omega = frozenset(encode(enc_h, o) for o in o_omega)
    test = _point_test(model, case)
    e_bad = frozenset(e for e in e_omega if not test(e))
    e_wit = {"points": e_omega, "failing": e_bad}

    if case.kind == "proscriptive":
        sx, gx = model.forbidden_st(d), model.forbidden_obs(d)
        px = model.proscriptive.support if model.proscriptive else frozenset()
        s_hits, o_hits, e_hits = [], [], []
        for j, g in enumerate(chain):
            sj = state_goal(g, model.robot_sensor).states
            oj = observe_set(model.human_sensor, sj)
            ej = frozenset(encode(enc_h, o) for o in oj)
            if sj & sx:
                s_hits.append({"link": j, "states": sj & sx})
            if oj & gx:
                o_hits.append({"link": j, "observations": oj & gx})
            if ej & px:
                e_hits.append({"link": j, "points": ej & px})
        out[-1].holds = out[-1].holds and not s_hits
        out[-1].witness["forbidden"] = s_hits
        o_wit["forbidden"] = o_hits
        e_wit["forbidden"] = e_hits
        o_ok = not o_bad and not o_hits
        e_ok = not e_bad and not e_hits
    else:
        o_ok, e_ok = not o_bad, not e_bad

    n = 4 if numbered else 3
    out.append(ConditionResult(prefix + str(n), "human perceives the target goal", o_ok, o_wit))
    out.append(ConditionResult(prefix + str(n + 1), _point_label(case, model), e_ok, e_wit))
    return out


def _intrinsic_conditions(model: AlignmentModel, d: str) -> tuple[list[ConditionResult], list[str]]:
    enc_h = model._human_encoder(d)
    enc_c = model._robot_encoder(d)
    problems = _intention_problems(model, d)
    s_target = model.target_st(d)
    out = [ConditionResult("0", "robot intends the domain", not problems, {"problems": problems})]
    for ph in sorted(model.human_purpose.support):
        g_eps = decode(enc_h, ph)
        failures = {}
        found = None
        for m in sorted(model.robot_purpose.support):
            gm = ground_point(model.robot_purpose, m, enc_c)
            if not gm.points:
                failures[m] = "1"
                continue
            sm = state_goal(gm, model.robot_sensor).states
            if not sm <= s_target or _chain_enabled(model, d, [gm]):
                failures[m] = "2"
                continue
            if not observe_set(model.human_sensor, sm) <= g_eps:
                failures[m] = "3"
                continue
            found = m
            break
        out.append(
            ConditionResult(
                f"goal[{ph}]",
                f"some robot point realises the human goal for {ph}",
                found is not None,
                {"human_goal": g_eps, "robot_point": found, "failures": failures},
            )
        )
    return out, problems


def check_conditions(model: AlignmentModel, case: AlignmentCase) -> AlignmentVerdict:
    """Evaluate the necessary-and-sufficient conditions as set computations."""
    model.validate()
    notes: list[str] = []
    if not model.human_purpose.intention_flag:
        return AlignmentVerdict(True, "semantic", case.label(), [], ["human intends no purpose"])
    if case.kind == "proscriptive" and model.proscriptive is None:
        raise IncompleteModel("proscriptive case needs a proscriptive purpose")

    if case.kind == "intrinsic":
        conds, problems = _intrinsic_conditions(model, _single_domain(model))
        aligned = all(c.holds for c in conds)
        notes += problems
    elif case.multidomain:
        conds = []
        per_domain = []
        for d in _case_domains(model, case):
            dc = _domain_conditions(model, case, d, prefix=f"{d}:")
            conds += dc
            per_domain.append(all(c.holds for c in dc))
        aligned = all(per_domain) if case.kind == "multidomain-all" else any(per_domain)
        notes.append("per-domain alignment: " + ", ".join(str(x).lower() for x in per_domain))
    else:
        d = _single_domain(model)
        conds = _domain_conditions(model, case, d)
        aligned = all(c.holds for c in conds)
        notes += _intention_problems(model, d)
    return AlignmentVerdict(aligned, "semantic", case.label(), conds, notes, framework_assumptions(model, case))


# ---------------------------------------------------------------- operational mode


@dataclass
class _Pursuit:
    ok: bool
    links: list[dict]  # per link: {(state, obs): prob} of successful terminations
    failed_link: int | None = None
    failed_states: list[str] = field(default_factory=list)
    failure_mass: float = 0.0


def _pursue(model: AlignmentModel, d: str, links: Sequence[Goal]) -> _Pursuit:
    dom = model.domain(d)
    inits = sorted(dom.initial_states)
    frontier = {s: 1.0 / len(inits) for s in inits}
    record = []
    for j, g in enumerate(links):
        dist = pursuit_distribution(dom, model.robot_sensor, model.policy, g, frontier, model.timeout)
        fails = {s: p for (s, o, ok), p in dist.items() if not ok and p > 0}
        wins = {(s, o): p for (s, o, ok), p in dist.items() if ok and p > 0}
        record.append(wins)
        if fails:
            return _Pursuit(False, record, j, sorted(fails), sum(fails.values()))
        frontier = {}
        for (s, _), p in wins.items():
            frontier[s] = frontier.get(s, 0.0) + p
    return _Pursuit(True, record)


def _judge_outcome(model, case, d, s, o, point, g_target, test) -> dict:
    enc_c = model._robot_encoder(d)
    enc_h = model._human_encoder(d)
    hobs = model.human_sensor.support(s)
    hpts = frozenset(encode(enc_h, x) for x in hobs)
    reasons = []
    if encode(enc_c, o) != point:
        reasons.append("robot outcome does not encode to the intended point")
    if s not in model.target_st(d):
        reasons.append("state outside human target states")
    if not hobs <= g_target:
        reasons.append("human observation outside the human goal")
    if not all(test(e) for e in hpts):
        reasons.append("human encoding fails the purpose test")
    return {
        "domain": d, "state": s, "robot_observation": o, "robot_point": encode(enc_c, o),
        "human_observations": hobs, "human_points": hpts, "ok": not reasons, "reasons": reasons,
    }


def _domain_definition(
    model: AlignmentModel, case: AlignmentCase, d: str, delta: float | None
) -> tuple[bool, list[ConditionResult], list[dict]]:
    conds: list[ConditionResult] = []
    problems = _intention_problems(model, d)
    conds.append(ConditionResult(f"{d}:intention", "robot commits to the point in the domain", not problems,
                                 {"problems": problems}))
    if problems:
        return False, conds, []
    goal = model.goal(d)
    chain = model.chain(d) if case.uses_chain else ()
    run = _pursue(model, d, list(chain) + [goal])
    conds.append(ConditionResult(
        f"{d}:pursuit", "pursuit succeeds within the timeout", run.ok,
        {"failed_link": run.failed_link, "states": run.failed_states},
    ))
    if not run.ok and delta is None:
        return False, conds, []
    test = _point_test(model, case)
    g_target = model.target_obs(d)
    outcomes = []
    good_mass = 0.0
    final = run.links[-1] if run.ok else {}
    for (s, o), p in sorted(final.items()):
        rec = _judge_outcome(model, case, d, s, o, model.intention.point, g_target, test)
        rec["probability"] = p
        outcomes.append(rec)
        if rec["ok"]:
            good_mass += p
    ok_outcomes = all(r["ok"] for r in outcomes) and run.ok
    conds.append(ConditionResult(f"{d}:outcome", _point_label(case, model), ok_outcomes,
                                 {"bad": [r for r in outcomes if not r["ok"]]}))

    if case.kind == "proscriptive":
        sx, gx = model.forbidden_st(d), model.forbidden_obs(d)
        px = model.proscriptive.support
        enc_h = model._human_encoder(d)
        hits = []
        for j, wins in enumerate(run.links):
            for (s, _o), p in sorted(wins.items()):
                hobs = model.human_sensor.support(s)
                hpts = {encode(enc_h, x) for x in hobs}
                if s in sx or hobs & gx or hpts & px:
                    hits.append({"link": j, "state": s, "probability": p})
                    good_mass -= p
        conds.append(ConditionResult(f"{d}:proscribed", "no link outcome falls in the proscribed purpose",
                                     not hits, {"violations": hits}))
        ok_outcomes = ok_outcomes and not hits

    if delta is not None:
        # lower bound on the probability that the whole run is acceptable
        return good_mass >= 1.0 - delta - 1e-12, conds, outcomes
    return ok_outcomes, conds, outcomes


def _intrinsic_definition(model: AlignmentModel, d: str) -> tuple[bool, list[ConditionResult], list[dict]]:
    problems = _intention_problems(model, d)
    conds = [ConditionResult("0", "robot intends the domain", not problems, {"problems": problems})]
    if problems:
        return False, conds, []
    enc_h = model._human_encoder(d)
    enc_c = model._robot_encoder(d)
    case = Intrinsic()
    outcomes_all = []
    aligned = True
    for ph in sorted(model.human_purpose.support):
        g_eps = decode(enc_h, ph)
        found = None
        tried = {}
        for m in sorted(model.robot_purpose.support):
            gm = ground_point(model.robot_purpose, m, enc_c)
            run = _pursue(model, d, [gm])
            if not run.ok:
                tried[m] = "pursuit failed"
                continue
            recs = [
                _judge_outcome(model, case, d, s, o, m, g_eps, lambda e: True)
                for (s, o) in sorted(run.links[-1])
            ]
            if all(r["ok"] for r in recs):
                found = m
                outcomes_all += [dict(r, human_point=ph) for r in recs]
                break
            tried[m] = "; ".join(sorted({x for r in recs for x in r["reasons"]}))
        conds.append(ConditionResult(f"goal[{ph}]", f"zero-shot pursuit realises the human goal for {ph}",
                                     found is not None, {"robot_point": found, "tried": tried}))
        aligned = aligned and found is not None
    return aligned, conds, outcomes_all


def check_definition(
    model: AlignmentModel,
    case: AlignmentCase,
    rng: random.Random | None = None,
    delta: float | None = None,
) -> AlignmentVerdict:
    """Run the robot's pursuit and test what it produces.

    Outcomes are enumerated exactly from every initial state. By default every
    outcome of nonzero probability must pass (worst case); with ``delta`` the
    passing outcomes need total probability of at least ``1 - delta``.
    ``rng`` is accepted for interface symmetry; enumeration needs no sampling.
    """
    model.validate()
    if not model.human_purpose.intention_flag:
        return AlignmentVerdict(True, "operational", case.label(), [], ["human intends no purpose"])
    if case.kind == "proscriptive" and model.proscriptive is None:
        raise IncompleteModel("proscriptive case needs a proscriptive purpose")
    notes: list[str] = []
    if case.kind == "intrinsic":
        aligned, conds, outcomes = _intrinsic_definition(model, _single_domain(model))
    else:
        conds, outcomes, per_domain = [], [], []
        for d in _case_domains(model, case):
            ok, dc, oc = _domain_definition(model, case, d, delta)
            conds += dc
            outcomes += oc
            per_domain.append(ok)
        if case.kind == "multidomain-any":
            aligned = any(per_domain)
        else:
            aligned = all(per_domain)
        if case.multidomain:
            notes.append("per-domain alignment: " + ", ".join(str(x).lower() for x in per_domain))
    if not model.intention.formed:
        notes.append("no robot intention formed")
    return AlignmentVerdict(aligned, "operational", case.label(), conds, notes,
                            framework_assumptions(model, case), outcomes)


# ---------------------------------------------------------------- assumptions


def _relevant_pursuits(model: AlignmentModel, case: AlignmentCase) -> list[tuple[str, list[Goal]]]:
    if case.kind == "intrinsic":
        d = _single_domain(model)
        enc = model._robot_encoder(d)
        return [(d, [ground_point(model.robot_purpose, m, enc)]) for m in sorted(model.robot_purpose.support)]
    out = []
    for d in _case_domains(model, case):
        if d not in model.robot_encoders and (model.goals is None or d not in model.goals):
            continue
        chain = list(model.chain(d)) if case.uses_chain else []
        out.append((d, chain + [model.goal(d)]))
    return out


def framework_assumptions(model: AlignmentModel, case: AlignmentCase) -> list[str]:
    """Standing assumptions under which the conditions are necessary and sufficient.

    Returns one message per violation:
    competence (a link succeeds from a state iff it is enabled there),
    coverage (the states a link ends in are exactly its state goal), and
    no external fulfilment (idling never reaches a target state).
    """
    out: list[str] = []
    for d, links in _relevant_pursuits(model, case):
        dom = model.domain(d)
        sources = sorted(dom.initial_states)
        for j, g in enumerate(links):
            realised: set[str] = set()
            all_ok = True
            for s in sources:
                dist = pursuit_distribution(dom, model.robot_sensor, model.policy, g, s, model.timeout)
                ok = all(k[2] for k, p in dist.items() if p > 0)
                realised |= {k[0] for k, p in dist.items() if p > 0 and k[2]}
                en = enabled(g, s, dom, model.robot_sensor, model.timeout)
                if ok != en:
                    out.append(f"competence: link {j} ({g.id}) from {s} {'succeeds' if ok else 'fails'} "
                               f"but is {'' if en else 'not '}enabled")
                all_ok = all_ok and ok
            if not all_ok:
                break
            target = state_goal(g, model.robot_sensor).states
            if realised != target:
                out.append(f"coverage: link {j} ({g.id}) ends in {sorted(realised)}, state goal is {sorted(target)}")
                break
            sources = sorted(realised)
    if model.idle_action is not None:
        for d in _case_domains(model, case):
            dom = model.domain(d)
            if model.idle_action not in dom.actions:
                continue
            seen = set(dom.initial_states)
            frontier = set(seen)
            while frontier:
                nxt = set()
                for s in frontier:
                    nxt |= dom.successors(s, model.idle_action)
                frontier = nxt - seen
                seen |= frontier
            hit = seen & model.target_st(d)
            if hit:
                out.append(f"external fulfilment: idling reaches target states {sorted(hit)} in {d}")
    return out


# ---------------------------------------------------------------- audit


@dataclass
class AuditReport:
    case: str
    count: int
    agreements: int
    aligned: int
    disagreements: list[dict]
    seconds: float

    @property
    def agreement_rate(self) -> float:
        return self.agreements / self.count if self.count else 1.0

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "count": self.count,
            "agreements": self.agreements,
            "aligned": self.aligned,
            "agreement_rate": self.agreement_rate,
            "disagreements": self.disagreements,
            "seconds": round(self.seconds, 3),
        }


def equivalence_audit(
    model_generator: Callable[[random.Random], AlignmentModel],
    case: AlignmentCase,
    count: int,
    seed: int = 0,
    checker: Callable[[AlignmentModel, AlignmentCase], AlignmentVerdict] = check_conditions,
    definition: Callable[..., AlignmentVerdict] = check_definition,
) -> AuditReport:
    """Compare the condition checker with the operational definition on generated models."""
    from .modelgen import model_to_dict

    t0 = time.perf_counter()
    agree = aligned = 0
    bad: list[dict] = []
    for i in range(count):
        rng = random.Random(f"{seed}:{case.kind}:{i}")
        model = model_generator(rng)
        sem = checker(model, case)
        op = definition(model, case, rng)
        if sem.aligned == op.aligned:
            agree += 1
        else:
            bad.append({
                "index": i,
                "semantic": sem.to_dict(),
                "operational": op.to_dict(),
                "model": model_to_dict(model),
            })
        aligned += op.aligned
    return AuditReport(case.label(), count, agree, aligned, bad, time.perf_counter() - t0)


def case_from_name(name: str, theta: float | None = None, domains: Iterable[str] = ()) -> AlignmentCase:
    return AlignmentCase(name, theta, tuple(domains))


__all__ = [
    "CASE_KINDS",
    "AlignmentCase",
    "Extrinsic",
    "VariableUtilityThreshold",
    "VariableUtilityMax",
    "Intrinsic",
    "Instrumental",
    "InstrumentalProscriptive",
    "MultiDomainAll",
    "MultiDomainAny",
    "Intention",
    "AlignmentModel",
    "ConditionResult",
    "AlignmentVerdict",
    "AuditReport",
    "check_conditions",
    "check_definition",
    "framework_assumptions",
    "equivalence_audit",
    "case_from_name",
]
