"""Actual-cause checks for a robot's pursuit: existence, counterfactual dependence, minimality."""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from . import _dist
from .alignment import AlignmentModel
from .competence import ActionPolicy, execute_chain, idle_policy, uniform_policy
from .errors import HorizonTooShort, ModelError, TraceDidNotSucceed
from .grounding import Goal, state_goal
from .perception import observe_set
from .purposes import encode
from .world import Domain, History

TREE_LIMIT = 10**6
MC_SAMPLES = 20_000


@dataclass(frozen=True)
class InterventionSpec:
    """``baseline`` is "idle", "random" or an explicit policy standing in for not pursuing the goal."""

    horizon: int
    baseline: str | ActionPolicy = "idle"
    do_goal: Goal | None = None
    domain: str | None = None

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ModelError("horizon must be at least 1")


@dataclass
class RegimeResult:
    p_end: float
    p_any: float
    method: str
    stderr: float = 0.0
    nodes: int = 0
    total_weight: float = 1.0

    def to_dict(self) -> dict:
        return {
            "p_end": self.p_end, "p_any": self.p_any, "method": self.method,
            "stderr": self.stderr, "nodes": self.nodes, "total_weight": self.total_weight,
        }


@dataclass
class AC2Result:
    holds: bool
    intervention: RegimeResult
    baseline: RegimeResult
    deterministic: bool
    baseline_name: str

    def to_dict(self) -> dict:
        return {
            "holds": self.holds, "deterministic": self.deterministic, "baseline": self.baseline_name,
            "do_goal": self.intervention.to_dict(), "do_not_goal": self.baseline.to_dict(),
        }


@dataclass
class AC3Result:
    holds: bool
    executed_cost: float
    minimal_cost: float

    def to_dict(self) -> dict:
        return {"holds": self.holds, "executed_cost": self.executed_cost, "minimal_cost": self.minimal_cost}


@dataclass
class CausalVerdict:
    ac1: bool
    ac2: AC2Result
    ac3: AC3Result | None
    notes: list[str] = field(default_factory=list)
    alternatives: dict[str, AC2Result] = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return self.ac1 and self.ac2.holds and self.ac3 is not None and self.ac3.holds

    def to_dict(self) -> dict:
        return {
            "ac1": self.ac1,
            "ac2": self.ac2.to_dict(),
            "ac3": self.ac3.to_dict() if self.ac3 else None,
            "overall": self.overall,
            "notes": list(self.notes),
            "alternative_baselines": {k: v.to_dict() for k, v in sorted(self.alternatives.items())},
        }


def _domain_of(model: AlignmentModel, d: str | None) -> str:
    if d is not None:
        return d
    ds = model.human_domains()
    if len(ds) != 1:
        raise ModelError("pick a domain: the human intends several")
    return ds[0]


def ac1_existence(model: AlignmentModel, domain: str | None = None, goal: Goal | None = None) -> bool:
    """Robot goal -> its states -> human observations -> human encodings lands inside the purpose."""
    d = _domain_of(model, domain)
    goal = goal or model.goal(d)
    states = state_goal(goal, model.robot_sensor).states
    if not states:
        return False
    enc = model._human_encoder(d)
    points = {encode(enc, o) for o in observe_set(model.human_sensor, states)}
    return bool(points) and points <= model.human_purpose.support


def outcome_probability(model: AlignmentModel, d: str) -> Callable[[str], float]:
    """P(Y | final state): the human sees and encodes the state as a purpose point."""
    enc = model._human_encoder(d)
    support = model.human_purpose.support
    cache: dict[str, float] = {}

    def y(s: str) -> float:
        if s not in cache:
            row = _dist.as_distribution(model.human_sensor.map[s])
            cache[s] = math.fsum(p for o, p in row.items() if encode(enc, o) in support)
        return cache[s]

    return y


# A regime maps (state, internal) to a list of (probability, action or None, new internal).
# ``None`` as the action ends the trace early.
Regime = Callable[[str, tuple], list[tuple[float, str | None, tuple]]]


def pursuit_regime(model: AlignmentModel, links: Sequence[Goal], idle: str | None) -> Regime:
    """Pursue ``links`` in order, each within the timeout, then hold with ``idle``."""
    n = len(links)
    timeout = model.timeout
    sensor = model.robot_sensor

    def regime(s: str, internal: tuple) -> list[tuple[float, str | None, tuple]]:
        j, used = internal
        out = []
        for o, po in _dist.as_distribution(sensor.map[s]).items():
            j2, u2 = j, used
            while 0 <= j2 < n and o in links[j2].points:
                j2, u2 = j2 + 1, 0
            if 0 <= j2 < n and u2 == timeout:
                j2 = -1  # the link timed out; the robot gives up
            if j2 == n or j2 == -1:
                if idle is None:
                    out.append((po, None, (j2, u2)))
                else:
                    out.append((po, idle, (j2, u2)))
                continue
            for a, pa in _dist.as_distribution(model.policy.row(o, links[j2].id)).items():
                out.append((po * pa, a, (j2, u2 + 1)))
        return out

    return regime


def policy_regime(model: AlignmentModel, policy: ActionPolicy, goal_id: str) -> Regime:
    sensor = model.robot_sensor
    if not policy.table:
        row = _dist.as_distribution(policy.default)
        return lambda s, internal: [(p, a, internal) for a, p in row.items()]

    def regime(s: str, internal: tuple) -> list[tuple[float, str | None, tuple]]:
        out = []
        for o, po in _dist.as_distribution(sensor.map[s]).items():
            for a, pa in _dist.as_distribution(policy.row(o, goal_id)).items():
                out.append((po * pa, a, internal))
        return out

    return regime


def enumerate_regime(
    domain: Domain,
    regime: Regime,
    start: Mapping[str, float],
    horizon: int,
    y: Callable[[str], float],
    internal: tuple = (0, 0),
    limit: int = TREE_LIMIT,
) -> RegimeResult | None:
    """Exact P(Y at the end) and P(Y at some step) by walking the trajectory tree.

    Returns None when the tree has more than ``limit`` nodes.
    """
    p_end = p_any = total = 0.0
    nodes = 0
    # stack entries: state, step, internal, path weight, probability Y never held so far
    stack = [(s, 0, internal, w, 1.0 - y(s)) for s, w in sorted(start.items(), reverse=True) if w > 0]
    while stack:
        s, t, inner, w, never = stack.pop()
        nodes += 1
        if nodes > limit:
            return None
        # a trace ends at the horizon, when the regime offers nothing, or on a None action
        ending = w if t == horizon else 0.0
        branches = regime(s, inner) if t < horizon else []
        if t < horizon and not branches:
            ending = w
        for pb, a, inner2 in branches:
            if a is None:
                ending += w * pb
                continue
            for s2, pt in domain.distribution(s, a).items():
                stack.append((s2, t + 1, inner2, w * pb * pt, never * (1.0 - y(s2))))
        if ending:
            p_end += ending * y(s)
            p_any += ending * (1.0 - never)
            total += ending
    return RegimeResult(p_end, p_any, "exact", 0.0, nodes, total)


def sample_regime(
    domain: Domain,
    regime: Regime,
    start: Mapping[str, float],
    horizon: int,
    y: Callable[[str], float],
    rng: random.Random,
    samples: int = MC_SAMPLES,
    internal: tuple = (0, 0),
) -> RegimeResult:
    starts = sorted(start)
    weights = [start[s] for s in starts]
    hits_end = hits_any = 0
    for _ in range(samples):
        s = rng.choices(starts, weights)[0]
        inner = internal
        seen = rng.random() < y(s)
        for _t in range(horizon):
            branches = regime(s, inner)
            if not branches:
                break
            pick = rng.random()
            acc = 0.0
            choice = branches[-1]
            for b in branches:
                acc += b[0]
                if pick < acc:
                    choice = b
                    break
            _, a, inner = choice
            if a is None:
                break
            s = _dist.sample(domain.transition[(s, a)], rng)
            seen = seen or rng.random() < y(s)
        if rng.random() < y(s):
            hits_end += 1
        hits_any += seen
    p = hits_end / samples
    return RegimeResult(p, hits_any / samples, "monte-carlo", math.sqrt(max(p * (1 - p), 0.0) / samples), 0, 1.0)


def _deterministic(model: AlignmentModel, d: str, policies: Sequence[ActionPolicy]) -> bool:
    if not model.domain(d).deterministic or not model.robot_sensor.deterministic or not model.human_sensor.deterministic:
        return False
    for pol in policies:
        rows = list(pol.table.values()) + ([pol.default] if pol.default is not None else [])
        if not all(_dist.is_deterministic(r) for r in rows):
            return False
    return True


def _baseline_policy(model: AlignmentModel, d: str, baseline) -> tuple[ActionPolicy, str]:
    if isinstance(baseline, ActionPolicy):
        return baseline, "custom"
    if baseline == "idle":
        if model.idle_action is None:
            raise ModelError("idle baseline needs an idle action")
        return idle_policy(model.idle_action), "idle"
    if baseline == "random":
        return uniform_policy(model.domain(d).actions), "random"
    raise ModelError(f"unknown baseline {baseline!r}")


def ac2_counterfactual(
    model: AlignmentModel,
    spec: InterventionSpec,
    rng: random.Random | None = None,
    chain: Sequence[Goal] | None = None,
) -> AC2Result:
    """Compare P(Y) under pursuit of the goal with P(Y) under the baseline policy."""
    rng = rng or random.Random(0)
    d = _domain_of(model, spec.domain)
    goal = spec.do_goal or model.goal(d)
    links = list(model.chain(d) if chain is None else chain) + [goal]
    need = len(links) * model.timeout
    if spec.horizon < need:
        raise HorizonTooShort(f"horizon {spec.horizon} < {need} steps needed for {len(links)} link(s)")
    dom = model.domain(d)
    y = outcome_probability(model, d)
    inits = sorted(dom.initial_states)
    start = {s: 1.0 / len(inits) for s in inits}
    base_pol, base_name = _baseline_policy(model, d, spec.baseline)
    do_regime = pursuit_regime(model, links, model.idle_action)
    base_regime = policy_regime(model, base_pol, goal.id)

    results = []
    for regime in (do_regime, base_regime):
        res = enumerate_regime(dom, regime, start, spec.horizon, y)
        if res is None:
            res = sample_regime(dom, regime, start, spec.horizon, y, rng)
        results.append(res)
    r_do, r_base = results
    det = _deterministic(model, d, [model.policy, base_pol])
    if det:
        holds = r_do.p_end == 1.0 and r_base.p_end == 0.0
    elif r_do.method == "exact" and r_base.method == "exact":
        holds = r_do.p_end > r_base.p_end
    else:
        gap = 3.0 * math.hypot(r_do.stderr, r_base.stderr)
        holds = r_do.p_end - r_base.p_end > gap
    return AC2Result(holds, r_do, r_base, det, base_name)


CostFn = Callable[[str, str], float]


def _cost_fn(cost: Mapping[str, float] | CostFn | None) -> tuple[CostFn, bool]:
    if cost is None:
        return (lambda s, a: 1), True
    if callable(cost):
        return cost, False
    table = dict(cost)
    integral = all(float(v).is_integer() for v in table.values())
    return (lambda s, a: table.get(a, 1)), integral


def minimal_cost(
    domain: Domain,
    start: str,
    targets: frozenset[str],
    cost: Mapping[str, float] | CostFn | None = None,
) -> float:
    """Cheapest way into ``targets``: Dijkstra on deterministic models, expected cost otherwise."""
    fn, _ = _cost_fn(cost)
    if start in targets:
        return 0
    if domain.deterministic:
        dist = {start: 0}
        heap = [(0, start)]
        while heap:
            c, s = heapq.heappop(heap)
            if s in targets:
                return c
            if c > dist.get(s, math.inf):
                continue
            for a in sorted(domain.actions):
                t = next(iter(domain.successors(s, a)))
                nc = c + fn(s, a)
                if nc < dist.get(t, math.inf):
                    dist[t] = nc
                    heapq.heappush(heap, (nc, t))
        return math.inf
    # stochastic shortest path by value iteration over proper policies
    v = {s: (0.0 if s in targets else math.inf) for s in domain.states}
    for _ in range(100_000):
        delta = 0.0
        for s in sorted(domain.states):
            if s in targets:
                continue
            best = math.inf
            for a in domain.actions:
                row = domain.distribution(s, a)
                if row.get(s, 0.0) == 1.0:
                    continue
                q = fn(s, a) + sum(p * v[t] for t, p in row.items())
                best = min(best, q)
            if best < v[s]:
                delta = max(delta, v[s] - best if v[s] < math.inf else math.inf)
                v[s] = best
        if delta <= 1e-13:
            break
    return v[start]


def ac3_minimality(
    model: AlignmentModel,
    executed: History,
    cost: Mapping[str, float] | CostFn | None = None,
    domain: str | None = None,
    goal: Goal | None = None,
) -> AC3Result:
    """Whether the executed trace is as cheap as the cheapest route into the goal's states."""
    d = _domain_of(model, domain)
    goal = goal or model.goal(d)
    if executed.kind != "state-action":
        raise ModelError("minimality needs a state-action history")
    states, actions = executed.symbols, executed.actions
    targets = state_goal(goal, model.robot_sensor).states
    if not states or states[-1] not in targets:
        raise TraceDidNotSucceed("the executed trace does not end in the goal's states")
    fn, integral = _cost_fn(cost)
    spent = sum(fn(s, a) for s, a in zip(states, actions))
    best = minimal_cost(model.domain(d), states[0], targets, cost)
    holds = spent == best if integral else abs(spent - best) <= 1e-9
    return AC3Result(holds, spent, best)


def check_causality(
    model: AlignmentModel,
    spec: InterventionSpec,
    rng: random.Random | None = None,
    cost: Mapping[str, float] | CostFn | None = None,
    alternatives: Sequence[str] = (),
) -> CausalVerdict:
    """Run all three checks; the robot's own trace for minimality starts at the first initial state.

    ``alternatives`` names extra baselines whose counterfactual results are
    reported next to the primary one without affecting the overall verdict.
    """
    rng = rng or random.Random(0)
    d = _domain_of(model, spec.domain)
    goal = spec.do_goal or model.goal(d)
    notes = []
    a1 = ac1_existence(model, d, goal)
    a2 = ac2_counterfactual(model, spec, rng)
    start = sorted(model.domain(d).initial_states)[0]
    run = execute_chain(list(model.chain(d)), goal, None, model.policy, model.domain(d), model.robot_sensor,
                        rng, start, model.timeout, raise_on_timeout=False)
    a3 = None
    if run.success:
        a3 = ac3_minimality(model, run.state_history(), cost, d, goal)
    else:
        notes.append("robot pursuit did not succeed; minimality not assessed")
    extra = {
        b: ac2_counterfactual(model, replace(spec, baseline=b), rng)
        for b in alternatives
        if b != spec.baseline
    }
    return CausalVerdict(a1, a2, a3, notes, extra)


__all__ = [
    "InterventionSpec",
    "RegimeResult",
    "AC2Result",
    "AC3Result",
    "CausalVerdict",
    "ac1_existence",
    "ac2_counterfactual",
    "ac3_minimality",
    "minimal_cost",
    "outcome_probability",
    "pursuit_regime",
    "policy_regime",
    "enumerate_regime",
    "sample_regime",
    "check_causality",
]
