"""Random small alignment models for audits, and single-condition mutations.

Models are "lanes": initial states, one layer per subgoal, and a final layer,
joined by a deterministic ``go`` action (``stay`` idles). Every layer has its
own robot observation, so the robot can always tell where it is. Random edits
are then applied so that roughly half of the models end up misaligned, and any
model that breaks the framework assumptions is thrown away and redrawn.
"""

from __future__ import annotations

import random
from dataclasses import replace
from .alignment import AlignmentCase, AlignmentModel, Intention, check_conditions, framework_assumptions
from .competence import ActionPolicy
from .errors import ModelError
from .grounding import Goal, state_goal
from .perception import SensorModel, observe_set
from .purposes import EncodingSpace, ObservationEncoder, purpose_from_utility
from .world import Domain

MAX_STATES = 12
MAX_OBSERVATIONS = 8
MAX_POINTS = 6

HUMAN_POINTS = ("e:g1", "e:g2", "e:g3", "e:0", "e:x")
ROBOT_POINTS = ("m0", "m1", "m2", "m3")
UTILITY_LEVELS = (0.25, 0.5, 0.75, 1.0)


class _Draft:
    """Mutable tables assembled before freezing into an AlignmentModel."""

    def __init__(self) -> None:
        self.states: dict[str, list[str]] = {}
        self.initial: dict[str, list[str]] = {}
        self.actions: list[str] = ["stay", "go"]
        self.trans: dict[str, dict[tuple[str, str], str]] = {}
        self.rsense: dict[str, str] = {}
        self.hsense: dict[str, str] = {}
        self.renc: dict[str, dict[str, str]] = {}
        self.henc: dict[str, dict[str, str]] = {}
        self.goal: dict[str, set[str]] = {}
        self.chain: dict[str, list[set[str]]] = {}
        self.s_star: dict[str, set[str]] = {}
        self.g_star: dict[str, set[str]] = {}
        self.s_xi: dict[str, set[str]] = {}
        self.g_xi: dict[str, set[str]] = {}
        self.hutil: dict[str, float] = {}
        self.rsupport: set[str] = {"m1"}
        self.point = "m1"
        self.idomains: list[str] = []
        self.idomains_robot: list[str] | None = None
        self.formed = True
        self.theta: float | None = None
        self.timeout = 1
        self.policy: dict[tuple[str, str], str] = {}
        self.final_layer: dict[str, list[str]] = {}
        self.layers: dict[str, list[list[str]]] = {}


def _lanes(dr: _Draft, rng: random.Random, d: str, n_links: int, budget: int) -> None:
    """Build one lane domain; ``budget`` caps its state count."""
    pre = f"{d}:"
    sizes = [rng.randint(1, 2)] + [rng.randint(1, 2) for _ in range(n_links)] + [rng.randint(1, 3)]
    while sum(sizes) > budget:
        i = max(range(len(sizes)), key=lambda k: sizes[k])
        sizes[i] -= 1
    filler = 1 if sum(sizes) < budget and rng.random() < 0.5 else 0
    k = 0
    layers = []
    for n in sizes:
        layers.append([f"{pre}s{k + i}" for i in range(n)])
        k += n
    fill = [f"{pre}s{k + i}" for i in range(filler)]
    states = [s for layer in layers for s in layer] + fill
    trans = {}
    for j, layer in enumerate(layers):
        nxt = layers[j + 1] if j + 1 < len(layers) else None
        targets = list(nxt) if nxt else []
        rng.shuffle(targets)
        for i, s in enumerate(layer):
            trans[(s, "stay")] = s
            if nxt is None:
                trans[(s, "go")] = s
            else:
                trans[(s, "go")] = targets[i] if i < len(targets) else rng.choice(nxt)
    for s in fill:
        trans[(s, "stay")] = s
        trans[(s, "go")] = s
    dr.states[d] = states
    dr.initial[d] = layers[0]
    dr.trans[d] = trans
    dr.layers[d] = layers
    dr.final_layer[d] = layers[-1]

    # robot perception: one observation per layer, the final layer may split in two
    for j, layer in enumerate(layers[:-1]):
        for s in layer:
            dr.rsense[s] = f"{pre}c{j}"
    finals = [f"{pre}cK1", f"{pre}cK2"][: 1 + (len(layers[-1]) > 1 and rng.random() < 0.5)]
    for i, s in enumerate(layers[-1]):
        dr.rsense[s] = finals[min(i, len(finals) - 1)]
    for s in fill:
        dr.rsense[s] = f"{pre}cX"
    renc = {o: "m0" for o in set(dr.rsense[s] for s in states)}
    for o in finals:
        renc[o] = dr.point
    dr.renc[d] = renc
    dr.goal[d] = set(finals)
    dr.chain[d] = [{f"{pre}c{j}"} for j in range(1, len(layers) - 1)]


def _human_side(dr: _Draft, rng: random.Random, d: str, good_obs: list[str], neutral: list[str]) -> None:
    layers = dr.layers[d]
    final = set(layers[-1])
    for s in dr.states[d]:
        dr.hsense[s] = rng.choice(good_obs) if s in final else rng.choice(neutral)
    others = [s for s in dr.states[d] if s not in final and s not in dr.initial[d]]
    dr.s_star[d] = set(final) | {s for s in others if rng.random() < 0.3 and s not in dr.s_xi.get(d, set())}
    dr.g_star[d] = set(good_obs)


def _draft(case: AlignmentCase, rng: random.Random) -> _Draft:
    dr = _Draft()
    kind = case.kind
    if kind == "intrinsic":
        return _draft_intrinsic(rng)
    domains = ["d1", "d2"] if case.multidomain else ["d1"]
    n_links = rng.randint(1, 3) if case.uses_chain else 0
    budget = MAX_STATES // len(domains)
    dr.idomains = list(domains)
    dr.timeout = rng.randint(1, 2)

    # human encoding space: positive points, a neutral point, a proscribed point
    if kind in ("vut", "vumax"):
        dr.hutil = {p: rng.choice(UTILITY_LEVELS) for p in ("e:g1", "e:g2", "e:g3")}
    else:
        dr.hutil = {p: 1.0 for p in ("e:g1", "e:g2") if p == "e:g1" or rng.random() < 0.5}
    if kind == "vut":
        below = sorted({u for u in dr.hutil.values()})
        dr.theta = rng.choice([0.0] + [u for u in below[:-1]])
    good_pts = sorted(dr.hutil)
    if kind == "vut":
        good_pts = [p for p in good_pts if dr.hutil[p] > dr.theta]
    if kind == "vumax":
        top = max(dr.hutil.values())
        good_pts = [p for p in good_pts if dr.hutil[p] == top]

    good_obs = ["h:g1", "h:g2"][: rng.randint(1, 2)]
    neutral = ["h:n1", "h:n2"][: rng.randint(1, 2)]
    dr.henc = {}
    for d in domains:
        _lanes(dr, rng, d, n_links, budget)
        if kind == "proscriptive":
            dr.s_xi[d] = {s for s in dr.states[d] if s not in dr.initial[d] and rng.random() < 0.1
                          and not any(s in layer for layer in dr.layers[d][1:])}
            dr.g_xi[d] = {"h:f1"}
        _human_side(dr, rng, d, good_obs, neutral)
        enc = {o: rng.choice(good_pts) for o in good_obs}
        enc.update({o: "e:0" for o in neutral})
        if kind == "proscriptive":
            enc["h:f1"] = "e:x"
        dr.henc[d] = enc
    dr.rsupport = {"m1"} | {m for m in ("m2", "m3") if rng.random() < 0.4}
    for d in domains:
        for o in set(dr.renc[d]):
            for gid in _goal_ids(dr, d):
                dr.policy[(o, gid)] = "go"
    return dr


def _goal_ids(dr: _Draft, d: str) -> list[str]:
    return [f"goal@{d}"] + [f"sub{j + 1}@{d}" for j in range(len(dr.chain.get(d, [])))]


def _draft_intrinsic(rng: random.Random) -> _Draft:
    dr = _Draft()
    d = "d1"
    pre = "d1:"
    dr.idomains = [d]
    dr.timeout = 1
    n_goals = rng.randint(1, 3)
    hpoints = [f"e:g{k + 1}" for k in range(n_goals)]
    dr.hutil = {p: 1.0 for p in hpoints}
    rpoints = [f"m{k + 1}" for k in range(n_goals)]
    dr.rsupport = set(rpoints) | ({"m3"} if rng.random() < 0.3 else set())
    dr.point = "m1"
    dr.actions = ["stay"] + [f"go_{m}" for m in ("m1", "m2", "m3")]
    init = [f"{pre}s{i}" for i in range(rng.randint(1, 2))]
    k = len(init)
    groups: dict[str, list[str]] = {}
    for m in rpoints:
        n = rng.randint(1, 2)
        groups[m] = [f"{pre}s{k + i}" for i in range(n)]
        k += n
    fill = [f"{pre}s{k}"] if rng.random() < 0.4 else []
    states = init + [s for g in groups.values() for s in g] + fill
    trans = {}
    for s in states:
        for a in dr.actions:
            trans[(s, a)] = s
    for m, grp in groups.items():
        targets = list(grp)
        rng.shuffle(targets)
        for i, s in enumerate(init):
            trans[(s, f"go_{m}")] = targets[i] if i < len(targets) else rng.choice(grp)
    dr.states[d] = states
    dr.initial[d] = init
    dr.trans[d] = trans
    dr.layers[d] = [init] + list(groups.values())
    dr.final_layer[d] = [s for g in groups.values() for s in g]
    for s in init:
        dr.rsense[s] = f"{pre}c0"
    for m, grp in groups.items():
        for s in grp:
            dr.rsense[s] = f"{pre}c{m}"
    for s in fill:
        dr.rsense[s] = f"{pre}cX"
    dr.renc[d] = {o: "m0" for o in set(dr.rsense.values())}
    for m in groups:
        dr.renc[d][f"{pre}c{m}"] = m
    # human: the group for robot point m_k is seen as h:g_k, which encodes to e:g_k
    for s in init + fill:
        dr.hsense[s] = "h:n1"
    for idx, (m, grp) in enumerate(groups.items()):
        for s in grp:
            dr.hsense[s] = f"h:g{idx + 1}"
    dr.henc[d] = {f"h:g{i + 1}": f"e:g{i + 1}" for i in range(n_goals)}
    dr.henc[d]["h:n1"] = "e:0"
    dr.s_star[d] = set(dr.final_layer[d])
    dr.g_star[d] = {f"h:g{i + 1}" for i in range(n_goals)}
    for m in ("m1", "m2", "m3"):
        for o in set(dr.rsense.values()):
            dr.policy[(o, f"r:{m}@{d}")] = f"go_{m}"
    return dr


# ---------------------------------------------------------------- random edits


def _edit(dr: _Draft, case: AlignmentCase, rng: random.Random) -> None:
    d = rng.choice(dr.idomains)
    states = dr.states[d]
    hobs = sorted(set(dr.hsense.values()) | set(dr.henc[d]))
    choice = rng.randrange(11)
    if choice == 0:
        s = rng.choice(states)
        dr.hsense[s] = rng.choice(hobs)
    elif choice == 1:
        o = rng.choice(sorted(dr.henc[d]))
        dr.henc[d][o] = rng.choice(HUMAN_POINTS[:4] + (("e:x",) if case.kind == "proscriptive" else ()))
    elif choice == 2 and dr.s_star[d]:
        dr.s_star[d].discard(rng.choice(sorted(dr.s_star[d])))
    elif choice == 3:
        cand = [s for s in states if s not in dr.initial[d] and s not in dr.s_xi.get(d, set())]
        if cand:
            dr.s_star[d].add(rng.choice(cand))
    elif choice == 4 and dr.g_star[d]:
        dr.g_star[d].discard(rng.choice(sorted(dr.g_star[d])))
    elif choice == 5:
        o = rng.choice(sorted(dr.renc[d]))
        dr.renc[d][o] = rng.choice(ROBOT_POINTS)
    elif choice == 6:
        live = [s for layer in dr.layers[d][:-1] for s in layer]
        s = rng.choice(live)
        for a in dr.actions:
            if a != "stay":
                dr.trans[d][(s, a)] = s
    elif choice == 7:
        if rng.random() < 0.5:
            dr.formed = False
        else:
            dr.idomains_robot = [x for x in dr.idomains if x != d]
    elif choice == 8 and case.kind == "proscriptive":
        cand = [s for s in states if s not in dr.s_star[d]]
        if cand:
            dr.s_xi[d].add(rng.choice(cand))
    elif choice == 9 and case.kind == "proscriptive":
        s = rng.choice([x for layer in dr.layers[d][1:-1] for x in layer] or states)
        dr.hsense[s] = "h:f1"
    elif choice == 10 and case.kind == "vut":
        dr.theta = rng.choice((0.0,) + UTILITY_LEVELS)
    elif choice == 10 and case.kind != "intrinsic":
        o = rng.choice(sorted(dr.renc[d]))
        dr.goal[d].add(o)


def _freeze(dr: _Draft, case: AlignmentCase) -> AlignmentModel:
    doms = {}
    for d in dr.idomains:
        doms[d] = Domain(d, frozenset(dr.states[d]), frozenset(dr.actions), dict(dr.trans[d]), frozenset(dr.initial[d]))
    dlist = [doms[d] for d in dr.idomains]
    rsensor = SensorModel.for_domains("robot", dlist, {s: dr.rsense[s] for d in dr.idomains for s in dr.states[d]})
    hobs = set(dr.hsense.values())
    for d in dr.idomains:
        hobs |= set(dr.henc[d])
    hsensor = SensorModel.for_domains(
        "human", dlist, {s: dr.hsense[s] for d in dr.idomains for s in dr.states[d]}, hobs
    )
    hpts = set(HUMAN_POINTS[:4]) | ({"e:x"} if case.kind == "proscriptive" else set())
    hspace = EncodingSpace("E_h", "human", frozenset(hpts))
    hutil = {p: dr.hutil.get(p, 0.0) for p in hpts}
    hp = purpose_from_utility("P_h", hspace, hutil, "human", intended_domains=dr.idomains, ground_truth=True)
    rspace = EncodingSpace("E_c", "robot", frozenset(ROBOT_POINTS))
    rp = purpose_from_utility(
        "P_c", rspace, {m: (1.0 if m in dr.rsupport else 0.0) for m in ROBOT_POINTS}, "mission",
        intended_domains=dr.idomains,
    )
    px = None
    if case.kind == "proscriptive":
        px = purpose_from_utility("P_xi", hspace, {p: (-1.0 if p == "e:x" else 0.0) for p in hpts}, "human",
                                  priority=100.0, intended_domains=dr.idomains, ground_truth=True)
    henc = {d: ObservationEncoder("human", "E_h", d, dict(dr.henc[d])) for d in dr.idomains}
    renc = {d: ObservationEncoder("robot", "E_c", d, dict(dr.renc[d])) for d in dr.idomains}
    robot_domains = dr.idomains if dr.idomains_robot is None else dr.idomains_robot
    intention = Intention("P_c", dr.point, tuple(robot_domains), dr.formed)
    goals = None
    chains = {}
    if case.kind != "intrinsic":
        goals = {}
        for d in dr.idomains:
            pts = frozenset(dr.goal[d])
            goals[d] = Goal("robot", "P_c", d, pts, dr.point, {o: 1.0 for o in pts}, True, f"goal@{d}")
            chains[d] = tuple(
                Goal("robot", "P_c", d, frozenset(g), f"sub{j + 1}", {o: 1.0 for o in g}, True, f"sub{j + 1}@{d}")
                for j, g in enumerate(dr.chain[d])
            )
    policy = ActionPolicy(dict(dr.policy), "stay")
    return AlignmentModel(
        doms, hp, hsensor, henc, rp, rsensor, renc, policy, intention, dr.timeout,
        {d: frozenset(dr.s_star[d]) for d in dr.idomains},
        {d: frozenset(dr.g_star[d]) for d in dr.idomains},
        goals, chains, dr.theta, px,
        {d: frozenset(dr.s_xi.get(d, set())) for d in dr.idomains} if px else None,
        {d: frozenset(dr.g_xi.get(d, set())) for d in dr.idomains} if px else None,
    )


def _fix_intrinsic_goal_ids(dr: _Draft) -> None:
    # intrinsic goals are grounded on the fly; their ids follow ground_point's format
    fixed = {}
    for (o, gid), a in dr.policy.items():
        if gid.startswith("r:"):
            m, d = gid[2:].split("@")
            gid = f"P_c:{m}@{d}"
        fixed[(o, gid)] = a
    dr.policy = fixed


def random_model(
    case: AlignmentCase,
    rng: random.Random,
    misalign_rate: float = 0.65,
    max_tries: int = 200,
) -> AlignmentModel:
    """Draw a model for ``case`` that satisfies the framework assumptions."""
    for _ in range(max_tries):
        dr = _draft(case, rng)
        if case.kind == "intrinsic":
            _fix_intrinsic_goal_ids(dr)
        if rng.random() < misalign_rate:
            for _ in range(rng.randint(1, 2)):
                _edit(dr, case, rng)
        try:
            model = _freeze(dr, case)
            model.validate()
        except ModelError:
            continue
        if _within_bounds(model) and not framework_assumptions(model, case):
            return model
    raise RuntimeError(f"could not draw a valid {case.kind} model in {max_tries} tries")


def _within_bounds(model: AlignmentModel) -> bool:
    n_states = sum(len(d.states) for d in model.domains.values())
    return (
        n_states <= MAX_STATES
        and len(model.robot_sensor.observations) <= MAX_OBSERVATIONS
        and len(model.human_sensor.observations) <= MAX_OBSERVATIONS
    )


def generator_for(case: AlignmentCase, misalign_rate: float = 0.65):
    return lambda rng: random_model(case, rng, misalign_rate)


# ---------------------------------------------------------------- mutations


def mutate(model: AlignmentModel, condition: int, rng: random.Random) -> AlignmentModel:
    """Break exactly one of the four single-domain extrinsic conditions.

    1: re-encode a goal observation to another robot point.
    2: drop a reached state from the human target states.
    3: make the human see a reached state as a decoy observation that is not
       in the human goal but still encodes into the purpose.
    4: re-encode an observation the human makes of a reached state to a
       point outside the purpose.
    """
    d = model.human_domains()[0]
    goal = model.goal(d)
    reached = sorted(state_goal(goal, model.robot_sensor).states)
    if condition == 1:
        o = rng.choice(sorted(goal.points))
        enc = model.robot_encoders[d]
        others = sorted((set(enc.table.values()) | set(model.robot_purpose.utility.table)) - {model.intention.point})
        table = dict(enc.table)
        table[o] = rng.choice(others)
        return replace(model, robot_encoders={**model.robot_encoders, d: replace(enc, table=table)})
    if condition == 2:
        s = rng.choice(reached)
        ts = dict(model.target_states or {d: model.target_st(d)})
        ts[d] = frozenset(ts[d]) - {s}
        return replace(model, target_states=ts, target_observations=model.target_observations or {d: model.target_obs(d)})
    if condition == 3:
        s = rng.choice(reached)
        g_target = model.target_obs(d)
        enc = model.human_encoders[d]
        decoy = "h:decoy"
        table = dict(enc.table)
        table[decoy] = rng.choice(sorted(model.human_purpose.support))
        smap = dict(model.human_sensor.map)
        smap[s] = decoy
        sensor = replace(model.human_sensor, map=smap, observations=model.human_sensor.observations | {decoy})
        assert decoy not in g_target
        return replace(
            model, human_sensor=sensor, human_encoders={**model.human_encoders, d: replace(enc, table=table)},
            target_observations=model.target_observations or {d: g_target},
            target_states=model.target_states or {d: model.target_st(d)},
        )
    if condition == 4:
        seen = sorted(observe_set(model.human_sensor, reached))
        o = rng.choice(seen)
        enc = model.human_encoders[d]
        outside = sorted(set(model.human_purpose.utility.table) - model.human_purpose.support)
        table = dict(enc.table)
        table[o] = rng.choice(outside)
        return replace(
            model, human_encoders={**model.human_encoders, d: replace(enc, table=table)},
            target_observations=model.target_observations or {d: model.target_obs(d)},
            target_states=model.target_states or {d: model.target_st(d)},
        )
    raise ValueError(f"condition must be 1..4, got {condition}")


def aligned_model(case: AlignmentCase, rng: random.Random) -> AlignmentModel:
    """A generated model on which the condition checker reports alignment."""
    while True:
        model = random_model(case, rng, misalign_rate=0.0)
        if check_conditions(model, case).aligned:
            return model


# ---------------------------------------------------------------- serialisation


def _row(r):
    return r if isinstance(r, str) else dict(sorted(r.items()))


def model_to_dict(model: AlignmentModel) -> dict:
    """Plain JSON-ready description of a model (used in audit reports)."""
    def purpose(p):
        if p is None:
            return None
        return {"id": p.id, "space": p.space, "polarity": p.polarity,
                "utility": dict(sorted(p.utility.table.items())), "intended_domains": sorted(p.intended_domains)}

    out = {
        "domains": {
            d: {
                "states": sorted(dom.states),
                "actions": sorted(dom.actions),
                "initial": sorted(dom.initial_states),
                "transition": {f"{s}|{a}": _row(r) for (s, a), r in sorted(dom.transition.items())},
            }
            for d, dom in sorted(model.domains.items())
        },
        "human_purpose": purpose(model.human_purpose),
        "robot_purpose": purpose(model.robot_purpose),
        "proscriptive": purpose(model.proscriptive),
        "human_sensor": {s: _row(r) for s, r in sorted(model.human_sensor.map.items())},
        "robot_sensor": {s: _row(r) for s, r in sorted(model.robot_sensor.map.items())},
        "human_encoders": {d: dict(sorted(e.table.items())) for d, e in sorted(model.human_encoders.items())},
        "robot_encoders": {d: dict(sorted(e.table.items())) for d, e in sorted(model.robot_encoders.items())},
        "intention": {"purpose": model.intention.purpose, "point": model.intention.point,
                      "domains": list(model.intention.domains), "formed": model.intention.formed},
        "timeout": model.timeout,
        "threshold": model.threshold,
        "policy": {f"{o}|{g}": _row(r) for (o, g), r in sorted(model.policy.table.items())},
        "policy_default": model.policy.default,
    }
    ds = model.human_domains()
    out["target_states"] = {d: sorted(model.target_st(d)) for d in ds}
    out["target_observations"] = {d: sorted(model.target_obs(d)) for d in ds}
    if model.goals is not None:
        out["goals"] = {d: sorted(g.points) for d, g in sorted(model.goals.items())}
    out["chains"] = {d: [sorted(g.points) for g in c] for d, c in sorted(model.chains.items())}
    if model.proscriptive is not None:
        out["forbidden_states"] = {d: sorted(model.forbidden_st(d)) for d in ds}
        out["forbidden_observations"] = {d: sorted(model.forbidden_obs(d)) for d in ds}
    return out


__all__ = ["random_model", "generator_for", "mutate", "aligned_model", "model_to_dict"]
