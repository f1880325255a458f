"""Scripted trial execution: phases, arbitration, planning, pursuit and phase-end checks."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .. import _dist
from ..alignment import AlignmentModel, Intention, case_from_name, check_conditions, check_definition
from ..arbitration import (
    MotivationReadout,
    motivational_scores,
    priority_warnings,
    sample_choice,
    select_hierarchical,
    select_urgency,
    softmax,
)
from ..causality import InterventionSpec, check_causality
from ..competence import (
    ActionPolicy,
    GoalConditionedTask,
    execute_chain,
    learn_policy,
    plan_policy,
)
from ..errors import ModelError, ValidationError
from ..grounding import Goal, ground_point
from ..perception import observe
from ..purposes import MotivationalSpace, Purpose, encode
from ..world import step
from .io import scenario_digest
from .spec import CheckSpec, ScenarioSpec

FORMAT_VERSION = 1


@dataclass
class ReportDocument:
    scenario: str
    digest: str
    seed: int | None
    trials: list[dict] = field(default_factory=list)
    checks: list[dict] = field(default_factory=list)
    learning_curves: dict[str, list[float]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "scenario": self.scenario,
            "digest": self.digest,
            "seed": self.seed,
            "trials": self.trials,
            "checks": self.checks,
            "learning_curves": self.learning_curves,
            "warnings": self.warnings,
        }


class _Runner:
    def __init__(self, spec: ScenarioSpec, rng: random.Random, seed: int | None):
        self.spec = spec
        self.rng = rng
        self.seed = seed
        self.plans: dict[tuple, ActionPolicy] = {}
        self.domain = spec.domains[spec.candidates[0].domain] if spec.candidates else None
        self.sensor = spec.sensors.get(spec.robot)

    # helpers -----------------------------------------------------------

    def encoder_for(self, purpose: Purpose, context):
        return self.spec.encoder(purpose.owner, purpose.space, self.domain.id, context)

    def penalty(self, purposes: dict[str, Purpose], context) -> dict[str, float]:
        """Per-state cost of proscribed outcomes, weighted by priority."""
        out: dict[str, float] = {}
        for p in purposes.values():
            if p.owner != self.spec.robot or not p.proscriptive:
                continue
            enc = self.encoder_for(p, context)
            for s in self.domain.states:
                row = _dist.as_distribution(self.sensor.map[s])
                cost = math.fsum(q * abs(p.utility(encode(enc, o))) for o, q in row.items())
                if cost:
                    out[s] = out.get(s, 0.0) + abs(p.priority) * cost
        return out

    def policy_for(self, goal: Goal, context, penalty: dict[str, float], key: tuple) -> ActionPolicy:
        full_key = (goal.id, tuple(sorted(goal.points)), context, key)
        if full_key not in self.plans:
            pl = self.spec.planner
            if pl.kind == "value-iteration":
                self.plans[full_key] = plan_policy(self.domain, self.sensor, goal, pl.gamma, penalty)
            else:
                task = GoalConditionedTask(self.domain, goal, pl.gamma, pl.timeout)
                self.plans[full_key] = learn_policy(task, self.domain, self.sensor, pl.learner)
        return self.plans[full_key]

    def start_state(self, trial, previous: str | None) -> str:
        options = list(trial.start)
        if not options:
            options = sorted(self.domain.initial_states) if previous is None else [previous]
        pick = options[0] if len(options) == 1 else self.rng.choice(options)
        if pick in self.spec.relocations:
            if previous is None:
                raise ValidationError("relocation needs a previous trial", str(trial.index))
            return self.spec.relocations[pick][previous]
        return pick

    # one trial -----------------------------------------------------------

    def run_trial(self, trial, previous: str | None) -> dict:
        spec = self.spec
        phase = spec.phase_of(trial.index)
        config = spec.configuration(phase)
        robot_purposes = [p for p in config.values() if p.owner == spec.robot]
        intended = [p for p in robot_purposes if p.intention_flag]
        context = trial.context
        start = self.start_state(trial, previous)
        penalty = self.penalty(config, context)
        pkey = tuple(sorted((p.id, p.priority) for p in robot_purposes if p.proscriptive))
        goals = {c.id: spec.ground_candidate(c, context) for c in spec.candidates}
        policies = {cid: self.policy_for(g, context, penalty, pkey) for cid, g in goals.items()}
        mspace = MotivationalSpace.from_purposes(spec.robot, sorted(intended, key=lambda p: p.id))

        def predict(goal: Goal):
            probe = random.Random(f"{self.seed}:{trial.index}:{goal.id}")
            run = execute_chain([], goal, None, policies[goal.id], self.domain, self.sensor, probe, start,
                                spec.planner.timeout, raise_on_timeout=False)
            obs = run.observations[-1]
            return {p.id: encode(self.encoder_for(p, context), obs) for p in intended}

        rule = spec.arbitration.rule
        scores: dict[str, float] = {}
        if rule in ("motivational", "softmax"):
            scores = motivational_scores(mspace, [goals[c.id] for c in spec.candidates], predict)
            if rule == "motivational":
                choice = max(sorted(scores), key=lambda k: scores[k])
            else:
                choice = sample_choice(softmax(scores, spec.arbitration.temperature), self.rng)
        else:
            if rule == "hierarchical":
                pid = select_hierarchical(intended, spec.arbitration)
            else:
                obs0 = observe(self.sensor, start, self.rng)
                points = {p.id: encode(self.encoder_for(p, context), obs0) for p in intended}
                readout = MotivationReadout(points, {k: mspace.utilities[k](v) for k, v in points.items()})
                pid = select_urgency(intended, readout, spec.arbitration)
            matching = [c.id for c in spec.candidates if c.purpose == pid]
            if not matching:
                raise ModelError(f"no candidate goal serves purpose {pid}")
            choice = matching[0]

        goal = goals[choice]
        run = execute_chain([], goal, None, policies[choice], self.domain, self.sensor, self.rng, start,
                            spec.planner.timeout, raise_on_timeout=False)
        states, actions = list(run.states), list(run.actions)
        if run.success and choice in spec.on_success:
            action = spec.on_success[choice]
            states.append(step(self.domain, states[-1], action, self.rng))
            actions.append(action)
        return {
            "trial": trial.index,
            "phase": phase + 1,
            "context": context,
            "priorities": {p.id: p.priority for p in sorted(robot_purposes, key=lambda p: p.id)},
            "scores": {k: scores[k] for k in sorted(scores)},
            "choice": choice,
            "purpose": goal.purpose,
            "success": run.success,
            "steps": run.steps,
            "states": states,
            "actions": actions,
        }

    # phase-end checks -------------------------------------------------------

    def alignment_model(self, chk: CheckSpec, phase: int) -> AlignmentModel:
        spec = self.spec
        config = spec.configuration(phase)
        human = spec.purposes[chk.human_purpose]
        robot = config.get(chk.robot_purpose, spec.purposes[chk.robot_purpose])
        d = chk.domain
        r_enc = spec.encoder(robot.owner, robot.space, d, chk.context)
        h_enc = spec.encoder(human.owner, human.space, d, chk.context)
        goal = ground_point(robot, chk.point, r_enc)
        saved = self.domain
        self.domain = spec.domains[d]
        try:
            penalty = self.penalty(config, chk.context)
            pkey = tuple(sorted((p.id, p.priority) for p in config.values() if p.proscriptive and p.owner == spec.robot))
            policy = self.policy_for(goal, chk.context, penalty, pkey)
        finally:
            self.domain = saved
        idle = "stay" if "stay" in spec.domains[d].actions else None
        return AlignmentModel(
            domains={d: spec.domains[d]},
            human_purpose=human,
            human_sensor=spec.sensors[spec.human],
            human_encoders={d: h_enc},
            robot_purpose=robot,
            robot_sensor=spec.sensors[spec.robot],
            robot_encoders={d: r_enc},
            policy=policy,
            intention=Intention(robot.id, chk.point, (d,)),
            timeout=chk.timeout,
            threshold=chk.theta,
            idle_action=idle,
        )

    def run_check(self, chk: CheckSpec, phase: int) -> dict:
        model = self.alignment_model(chk, phase)
        case = case_from_name(chk.case, chk.theta, (chk.domain,))
        semantic = check_conditions(model, case)
        operational = check_definition(model, case, random.Random(f"{self.seed}:{chk.id}:{phase}"))
        out = {
            "id": chk.id,
            "after_phase": phase + 1,
            "case": case.label(),
            "semantic": semantic.to_dict(),
            "operational": operational.to_dict(),
            "agree": semantic.aligned == operational.aligned,
        }
        if chk.causal_baseline is not None:
            horizon = chk.horizon or chk.timeout
            verdict = check_causality(model, InterventionSpec(horizon, chk.causal_baseline, domain=chk.domain),
                                      random.Random(f"{self.seed}:{chk.id}:cause:{phase}"))
            out["causal"] = verdict.to_dict()
        return out


def run_trials(
    spec: ScenarioSpec,
    rng: random.Random | None = None,
    *,
    seed: int | None = None,
    limit: int | None = None,
) -> ReportDocument:
    """Run the schedule in order; checks run after the last trial of each phase.

    Module errors raised during a trial carry a ``trial`` attribute.
    """
    if seed is None and rng is None:
        seed = spec.seed
    rng = rng or random.Random(seed)
    report = ReportDocument(spec.id, scenario_digest(spec), seed)
    schedule = spec.schedule if limit is None else spec.schedule[:limit]
    if not schedule:
        return report
    runner = _Runner(spec, rng, seed)
    previous = None
    seen_warnings: list[str] = []
    for trial in schedule:
        try:
            record = runner.run_trial(trial, previous)
        except Exception as err:
            err.trial = trial.index
            raise
        previous = record["states"][-1]
        report.trials.append(record)
        phase = spec.phase_of(trial.index)
        for w in priority_warnings(
            [p for p in spec.configuration(phase).values() if p.owner == spec.robot], spec.arbitration.dominance_factor
        ):
            if w not in seen_warnings:
                seen_warnings.append(w)
        if trial.index == spec.phases[phase].last:
            for chk in spec.checks:
                report.checks.append(runner.run_check(chk, phase))
    report.warnings = seen_warnings
    curves = {}
    for cid in sorted(c.id for c in spec.candidates):
        history = [t["success"] for t in report.trials if t["choice"] == cid]
        acc, curve = 0, []
        for i, ok in enumerate(history, 1):
            acc += ok
            curve.append(acc / i)
        curves[cid] = curve
    report.learning_curves = curves
    return report


def scenario_check(spec: ScenarioSpec, check_id: str | None = None) -> CheckSpec:
    if not spec.checks:
        raise ValidationError("the scenario configures no alignment check", "checks")
    if check_id is None:
        return spec.checks[0]
    for chk in spec.checks:
        if chk.id == check_id:
            return chk
    raise ValidationError("no such check", check_id)


def alignment_model_for(spec: ScenarioSpec, chk: CheckSpec, phase: int | None = None, seed: int | None = None) -> AlignmentModel:
    """The alignment model a phase-end check would use; defaults to the last phase."""
    if phase is None:
        phase = len(spec.phases) - 1 if spec.phases else None
    runner = _Runner(spec, random.Random(seed), seed)
    runner.domain = spec.domains[chk.domain]
    runner.sensor = spec.sensors[spec.robot]
    return runner.alignment_model(chk, phase)


__all__ = ["ReportDocument", "run_trials", "scenario_check", "alignment_model_for", "FORMAT_VERSION"]
