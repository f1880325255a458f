"""Scenario files: UTF-8 JSON with ``"schema": 1``."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from ..arbitration import ArbitrationConfig
from ..competence import LearnerConfig
from ..errors import ModelError, ParseError, ValidationError
from ..perception import SensorModel
from ..purposes import AlignmentMap, EncodingSpace, ObservationEncoder, derive_mission, purpose_from_utility
from ..world import Domain
from .spec import Candidate, CheckSpec, Phase, PlannerSpec, ScenarioSpec, TrialSpec

SCHEMA_VERSION = 1


def _need(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise ValidationError(f"expected an object, got {type(obj).__name__}", where)
    if key not in obj:
        raise ValidationError(f"missing field {key!r}", where)
    return obj[key]


def _row(row: Any, where: str):
    if isinstance(row, str):
        return row
    if isinstance(row, dict) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row.values()):
        return {str(k): float(v) for k, v in row.items()}
    raise ValidationError("a row is an id or an {id: probability} object", where)


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError:
        raise
    except ModelError as err:
        raise ValidationError(str(err), where) from None


def _domain(obj: dict) -> Domain:
    did = _need(obj, "id", "domain")
    trans_raw = _need(obj, "transition", did)
    if not isinstance(trans_raw, dict):
        raise ValidationError("transition must be an object", did)
    transition = {}
    for s, acts in trans_raw.items():
        if not isinstance(acts, dict):
            raise ValidationError(f"transition entry for {s} must be an object", did)
        for a, row in acts.items():
            transition[(s, a)] = _row(row, f"{did} ({s}, {a})")
    states = obj.get("states", sorted(trans_raw))
    actions = obj.get("actions", sorted({a for acts in trans_raw.values() for a in acts}))
    return _wrap(did, Domain, did, frozenset(states), frozenset(actions), transition,
                 frozenset(_need(obj, "initial_states", did)))


def _sensor(obj: dict, domains: dict[str, Domain]) -> SensorModel:
    owner = _need(obj, "owner", "sensor")
    names = _need(obj, "domains", owner)
    missing = [d for d in names if d not in domains]
    if missing:
        raise ValidationError(f"sensor covers unknown domains {missing}", owner)
    doms = [domains[d] for d in names]
    if obj.get("identity"):
        prefix = obj.get("prefix", "")
        table = {s: prefix + s for d in doms for s in d.states}
    else:
        table = {s: _row(r, f"{owner} {s}") for s, r in _need(obj, "map", owner).items()}
    return _wrap(owner, SensorModel.for_domains, owner, doms, table, obj.get("observations"))


def _space(obj: dict) -> EncodingSpace:
    sid = _need(obj, "id", "space")
    owner = _need(obj, "owner", sid)
    if "dims" in obj:
        return _wrap(sid, EncodingSpace.product_space, sid, owner, [(n, v) for n, v in obj["dims"]])
    return _wrap(sid, EncodingSpace, sid, owner, frozenset(_need(obj, "points", sid)))


def _purposes(raw: list, spaces: dict[str, EncodingSpace], maps: list[AlignmentMap]):
    out, derived, inactive = {}, {}, set()
    pending = []
    for obj in raw:
        pid = _need(obj, "id", "purpose")
        if pid in out or any(p[0] == pid for p in pending):
            raise ValidationError("duplicate purpose id", pid)
        if not obj.get("active", True):
            inactive.add(pid)
        if "derive" in obj:
            pending.append((pid, obj))
            continue
        space = spaces.get(_need(obj, "space", pid))
        if space is None:
            raise ValidationError(f"unknown space {obj['space']}", pid)
        if "owner" in obj and obj["owner"] != space.owner:
            raise ValidationError("purpose owner differs from its space owner", pid)
        util = _need(obj, "utility", pid)
        p = _wrap(pid, purpose_from_utility, pid, space, {k: float(v) for k, v in util.items()},
                  kind=obj.get("kind", "need"), polarity=obj.get("polarity"),
                  priority=float(obj.get("alpha", 1.0)), intention_flag=bool(obj.get("iota", True)),
                  intended_domains=obj.get("domains", ()), ground_truth=bool(obj.get("ground_truth", False)))
        _check_support(obj, p, pid)
        out[pid] = p
    for pid, obj in pending:
        spec = obj["derive"]
        src, idx = _need(spec, "from", pid), _need(spec, "map", pid)
        if src not in out:
            raise ValidationError(f"derivation source {src} is unknown or itself derived", pid)
        if not isinstance(idx, int) or not 0 <= idx < len(maps):
            raise ValidationError(f"alignment map index {idx} out of range", pid)
        amap = maps[idx]
        if amap.robot_space not in spaces:
            raise ValidationError(f"unknown space {amap.robot_space}", pid)
        p = _wrap(pid, derive_mission, out[src], amap, spaces[amap.robot_space], id=pid,
                  priority=float(obj.get("alpha", 1.0)), intention_flag=bool(obj.get("iota", True)),
                  intended_domains=obj.get("domains", ()))
        _check_support(obj, p, pid)
        out[pid] = p
        derived[pid] = (src, idx)
    return out, derived, frozenset(inactive)


def _check_support(obj: dict, p, pid: str) -> None:
    if "support" in obj and frozenset(obj["support"]) != p.support:
        raise ValidationError("declared support differs from the nonzero-utility set", pid)


def spec_from_dict(doc: dict) -> ScenarioSpec:
    if not isinstance(doc, dict):
        raise ValidationError("a scenario is a JSON object", "scenario")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA_VERSION}", "schema")
    sid = _need(doc, "id", "scenario")
    domains = {}
    for obj in _need(doc, "domains", sid):
        d = _domain(obj)
        if d.id in domains:
            raise ValidationError("duplicate domain id", d.id)
        domains[d.id] = d
    sensors = {}
    for obj in doc.get("sensors", []):
        s = _sensor(obj, domains)
        if s.owner in sensors:
            raise ValidationError("one sensor per owner", s.owner)
        sensors[s.owner] = s
    spaces = {}
    for obj in doc.get("spaces", []):
        sp = _space(obj)
        if sp.id in spaces:
            raise ValidationError("duplicate space id", sp.id)
        spaces[sp.id] = sp
    encoders = tuple(
        ObservationEncoder(_need(o, "owner", "encoder"), _need(o, "space", "encoder"), _need(o, "domain", "encoder"),
                           dict(_need(o, "table", "encoder")), o.get("context"))
        for o in doc.get("encoders", [])
    )
    maps = [
        AlignmentMap(_need(o, "human_space", "alignment map"), _need(o, "robot_space", "alignment map"),
                     dict(_need(o, "table", "alignment map")))
        for o in doc.get("alignment_maps", [])
    ]
    purposes, derived, inactive = _purposes(_need(doc, "purposes", sid), spaces, maps)
    candidates = tuple(
        Candidate(_need(o, "id", "candidate"), _need(o, "purpose", o["id"]), _need(o, "domain", o["id"]),
                  tuple(o.get("points", ())), o.get("context"))
        for o in doc.get("candidates", [])
    )
    arb = doc.get("arbitration", {})
    arbitration = _wrap("arbitration", ArbitrationConfig, rule=arb.get("rule", "motivational"),
                        temperature=float(arb.get("temperature", 1.0)),
                        dominance_factor=float(arb.get("dominance_factor", 10.0)))
    pl = doc.get("planner", {})
    learner = None
    if "learner" in pl:
        lc = pl["learner"]
        learner = LearnerConfig(budget=int(lc.get("budget", 50_000)), alpha=lc.get("alpha"),
                                epsilon=float(lc.get("epsilon", 0.2)), seed=int(lc.get("seed", 0)))
    planner = PlannerSpec(pl.get("kind", "value-iteration"), float(pl.get("gamma", 0.95)),
                          int(pl.get("timeout", 25)), learner)
    phases = []
    for i, o in enumerate(doc.get("phases", [])):
        rng_ = _need(o, "trials", f"phase {i + 1}")
        if not (isinstance(rng_, list) and len(rng_) == 2 and all(isinstance(x, int) for x in rng_)):
            raise ValidationError("trials is [first, last]", f"phase {i + 1}")
        phases.append(Phase(rng_[0], rng_[1], {k: float(v) for k, v in o.get("alpha", {}).items()},
                            tuple(o.get("add", ())), tuple(o.get("remove", ()))))
    schedule = tuple(
        TrialSpec(int(_need(o, "trial", "schedule")), o.get("context"), tuple(o.get("start", ())))
        for o in doc.get("schedule", [])
    )
    checks = []
    for o in doc.get("checks", []):
        cid = _need(o, "id", "check")
        causal = o.get("causal") or {}
        checks.append(CheckSpec(
            cid, _need(o, "case", cid), _need(o, "human_purpose", cid), _need(o, "robot_purpose", cid),
            _need(o, "point", cid), _need(o, "domain", cid), o.get("context"), int(o.get("timeout", 25)),
            o.get("theta"), causal.get("baseline"), causal.get("horizon"),
        ))
    spec = ScenarioSpec(
        id=sid,
        robot=doc.get("robot", "robot"),
        human=doc.get("human", "human"),
        domains=domains,
        sensors=sensors,
        spaces=spaces,
        encoders=encoders,
        alignment_maps=tuple(maps),
        purposes=purposes,
        inactive=inactive,
        derived=derived,
        candidates=candidates,
        arbitration=arbitration,
        planner=planner,
        on_success=dict(doc.get("on_success", {})),
        relocations={k: dict(v) for k, v in doc.get("relocations", {}).items()},
        phases=tuple(phases),
        schedule=schedule,
        checks=tuple(checks),
        seed=int(doc.get("seed", 0)),
        description=doc.get("description", ""),
    )
    spec.validate()
    return spec


def loads_scenario(text: str) -> ScenarioSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno, err.colno) from None
    return spec_from_dict(doc)


def load_scenario(path: str | Path) -> ScenarioSpec:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as err:
        raise ParseError(f"not UTF-8: {err.reason}") from None
    return loads_scenario(text)


# ---------------------------------------------------------------- emit


def _emit_row(row):
    return row if isinstance(row, str) else {k: row[k] for k in sorted(row)}


def _emit_sensor(s: SensorModel) -> dict:
    out = {"owner": s.owner, "domains": sorted(s.covered_domains)}
    rows = s.map
    first = next(iter(sorted(rows)), None)
    if first is not None and isinstance(rows[first], str) and rows[first].endswith(first):
        prefix = rows[first][: len(rows[first]) - len(first)]
        if all(isinstance(r, str) and r == prefix + st for st, r in rows.items()) and \
                s.observations == frozenset(rows.values()):
            out.update(identity=True, prefix=prefix)
            return out
    out["map"] = {st: _emit_row(rows[st]) for st in sorted(rows)}
    if s.observations != frozenset(o for r in rows.values() for o in ([r] if isinstance(r, str) else r)):
        out["observations"] = sorted(s.observations)
    return out


def spec_to_dict(spec: ScenarioSpec) -> dict:
    """Canonical JSON-ready form; ``spec_from_dict`` inverts it."""
    doc: dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "id": spec.id,
        "description": spec.description,
        "seed": spec.seed,
        "robot": spec.robot,
        "human": spec.human,
    }
    doc["domains"] = [
        {
            "id": d.id,
            "states": sorted(d.states),
            "actions": sorted(d.actions),
            "initial_states": sorted(d.initial_states),
            "transition": {
                s: {a: _emit_row(d.transition[(s, a)]) for a in sorted(d.actions)} for s in sorted(d.states)
            },
        }
        for d in (spec.domains[k] for k in sorted(spec.domains))
    ]
    doc["sensors"] = [_emit_sensor(spec.sensors[k]) for k in sorted(spec.sensors)]
    spaces = []
    for k in sorted(spec.spaces):
        sp = spec.spaces[k]
        entry: dict[str, Any] = {"id": sp.id, "owner": sp.owner}
        if sp.dims is not None:
            entry["dims"] = [[n, list(v)] for n, v in sp.dims]
        else:
            entry["points"] = sorted(sp.points)
        spaces.append(entry)
    doc["spaces"] = spaces
    doc["encoders"] = [
        {"owner": e.owner, "space": e.space, "domain": e.domain, "context": e.context,
         "table": {o: e.table[o] for o in sorted(e.table)}}
        for e in spec.encoders
    ]
    doc["alignment_maps"] = [
        {"human_space": m.human_space, "robot_space": m.robot_space, "table": {k: m.table[k] for k in sorted(m.table)}}
        for m in spec.alignment_maps
    ]
    purposes = []
    for pid in sorted(spec.purposes):
        p = spec.purposes[pid]
        entry = {"id": p.id, "owner": p.owner, "space": p.space, "kind": p.kind, "polarity": p.polarity,
                 "support": sorted(p.support), "alpha": p.priority, "iota": p.intention_flag,
                 "domains": sorted(p.intended_domains), "ground_truth": p.ground_truth,
                 "active": pid not in spec.inactive}
        if pid in spec.derived:
            src, idx = spec.derived[pid]
            entry["derive"] = {"from": src, "map": idx}
            del entry["ground_truth"], entry["polarity"]
        else:
            entry["utility"] = {k: p.utility.table[k] for k in sorted(p.utility.table)}
        purposes.append(entry)
    doc["purposes"] = purposes
    doc["candidates"] = [
        {"id": c.id, "purpose": c.purpose, "domain": c.domain, "points": list(c.points), "context": c.context}
        for c in spec.candidates
    ]
    a = spec.arbitration
    doc["arbitration"] = {"rule": a.rule, "temperature": a.temperature, "dominance_factor": a.dominance_factor}
    pl = spec.planner
    doc["planner"] = {"kind": pl.kind, "gamma": pl.gamma, "timeout": pl.timeout}
    if pl.learner is not None:
        lc = pl.learner
        doc["planner"]["learner"] = {"budget": lc.budget, "alpha": lc.alpha, "epsilon": lc.epsilon, "seed": lc.seed}
    doc["on_success"] = dict(sorted(spec.on_success.items()))
    doc["relocations"] = {k: dict(sorted(v.items())) for k, v in sorted(spec.relocations.items())}
    doc["phases"] = [
        {"trials": [ph.first, ph.last], "alpha": dict(sorted(ph.alpha.items())), "add": list(ph.add),
         "remove": list(ph.remove)}
        for ph in spec.phases
    ]
    doc["schedule"] = [{"trial": t.index, "context": t.context, "start": list(t.start)} for t in spec.schedule]
    doc["checks"] = []
    for c in spec.checks:
        entry = {"id": c.id, "case": c.case, "human_purpose": c.human_purpose, "robot_purpose": c.robot_purpose,
                 "point": c.point, "domain": c.domain, "context": c.context, "timeout": c.timeout, "theta": c.theta}
        if c.causal_baseline is not None:
            entry["causal"] = {"baseline": c.causal_baseline, "horizon": c.horizon}
        doc["checks"].append(entry)
    return doc


def dumps_scenario(spec: ScenarioSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dump_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(spec), encoding="utf-8")


def scenario_digest(spec: ScenarioSpec) -> str:
    return hashlib.sha256(dumps_scenario(spec).encode("utf-8")).hexdigest()


__all__ = [
    "SCHEMA_VERSION",
    "load_scenario",
    "loads_scenario",
    "spec_from_dict",
    "spec_to_dict",
    "dumps_scenario",
    "dump_scenario",
    "scenario_digest",
]
