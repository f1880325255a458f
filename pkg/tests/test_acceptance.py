"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest -m acceptance tests/test_acceptance.py`` or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import bfs_oracle, grid_domain, random_domain  # noqa: E402
from test_causality import forward_oracle, random_causal_model  # noqa: E402
from test_scenario import GOLDEN, adjacent_cells  # noqa: E402

from purposeframe.alignment import CASE_KINDS, Extrinsic, case_from_name, check_definition, equivalence_audit  # noqa: E402
from purposeframe.arbitration import (  # noqa: E402
    MotivationReadout,
    sample_choice,
    select_hierarchical,
    select_motivational,
    select_urgency,
    softmax,
)
from purposeframe.causality import InterventionSpec, ac2_counterfactual, minimal_cost  # noqa: E402
from purposeframe.competence import (  # noqa: E402
    ActionPolicy,
    BeliefState,
    GoalConditionedTask,
    LearnerConfig,
    competence_gain,
    evaluate_extrinsic,
    execute_chain,
    information_gain,
    learn_policy,
    state_values,
    uniform_policy,
)
from purposeframe.grounding import Goal, ground_point, ground_purpose, state_goal  # noqa: E402
from purposeframe.modelgen import aligned_model, generator_for, mutate  # noqa: E402
from purposeframe.perception import SensorModel, identity_sensor  # noqa: E402
from purposeframe.purposes import EncodingSpace, MotivationalSpace, ObservationEncoder, purpose_from_utility  # noqa: E402
from purposeframe.scenario.home import build_home_robot_scenario, trial_facts  # noqa: E402
from purposeframe.scenario.report import emit_report  # noqa: E402
from purposeframe.scenario.trials import run_trials  # noqa: E402

pytestmark = pytest.mark.acceptance

AUDIT_MODELS = 1000
AUDIT_SECONDS = 60.0
MUTANTS = 200
HOME_SEEDS = 100
SOFTMAX_VECTORS = 10_000
SOFTMAX_DRAWS = 10_000
RESCALE_INSTANCES = 1000
LEARN_BUDGET = 50_000
NEAR_OPTIMAL = 0.9
SIGNAL_PAIRS = 10_000
EXACT = 1e-12
ENUM_TOL = 1e-9
AC2_MODELS = 100
AC3_MODELS = 500
GROUNDING_MODELS = 1000


def announce(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    capture = getattr(announce, "capsys", None)
    if capture is None:
        print(line)
    else:
        with capture.disabled():
            print("\n" + line)
    return ok


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    announce.capsys = capsys
    yield
    announce.capsys = None


def criterion_1():
    start = time.perf_counter()
    failing = []
    for kind in CASE_KINDS:
        case = case_from_name(kind)
        rep = equivalence_audit(generator_for(case), case, AUDIT_MODELS, seed=0)
        if rep.agreements != rep.count:
            failing.append(f"{kind}: {rep.count - rep.agreements} disagreements")
    seconds = time.perf_counter() - start
    ok = not failing and seconds <= AUDIT_SECONDS
    detail = f"{len(CASE_KINDS)} cases x {AUDIT_MODELS} models in {seconds:.1f}s" + (f"; {failing}" if failing else "")
    return announce(1, "condition checker agrees with the definition", ok, detail)


def criterion_2():
    flipped = {}
    for condition in (1, 2, 3, 4):
        rng = random.Random(1000 + condition)
        hits = 0
        for _ in range(MUTANTS):
            model = aligned_model(Extrinsic(), rng)
            hits += not check_definition(mutate(model, condition, rng), Extrinsic()).aligned
        flipped[condition] = hits
    ok = all(v == MUTANTS for v in flipped.values())
    return announce(2, "breaking any one condition misaligns", ok,
                    ", ".join(f"c{c} {v}/{MUTANTS}" for c, v in flipped.items()))


def criterion_3():
    spec = build_home_robot_scenario()
    golden_ok = emit_report(run_trials(spec, seed=0), None) == GOLDEN.read_text(encoding="utf-8")
    near = adjacent_cells()
    phase_one_ok = True
    night_visits = 0
    unstable = []
    for seed in range(HOME_SEEDS):
        report = run_trials(spec, seed=seed)
        text = emit_report(report, None)
        if emit_report(run_trials(spec, seed=seed), None) != text:
            unstable.append(seed)
        trials = report.to_dict()["trials"]
        facts = [trial_facts(t) for t in trials]
        phase_one_ok &= facts[0]["ends_human_adjacent"] and facts[1]["ends_human_adjacent"]
        phase_one_ok &= trials[3]["context"] == "night" and facts[3]["visits_human_adjacent"]
        for t in trials[4:]:
            if t["context"] == "night":
                cells = {tuple(map(int, s.split("|")[0].split(","))) for s in t["states"]}
                night_visits += len(cells & near)
    ok = golden_ok and phase_one_ok and night_visits == 0 and not unstable
    detail = (f"golden {'match' if golden_ok else 'differs'}, phase-1 narrative {'holds' if phase_one_ok else 'broken'}, "
              f"{night_visits} phase-2 night visits over {HOME_SEEDS} seeds, {len(unstable)} unstable seeds")
    return announce(3, "home robot scenario narrative", ok, detail)


def _need(id, priority, table):
    space = EncodingSpace(f"E-{id}", "robot", frozenset(table))
    return purpose_from_utility(id, space, table, kind="need", priority=priority, intended_domains=["d"])


def criterion_4():
    rng = random.Random(4)
    worst = 0.0
    for _ in range(SOFTMAX_VECTORS):
        scores = {f"k{i}": rng.uniform(-50, 50) for i in range(rng.randint(1, 12))}
        worst = max(worst, abs(math.fsum(softmax(scores, rng.uniform(0.01, 100)).values()) - 1))
    sums_ok = worst <= 1e-9

    scores = {f"g{i}": s for i, s in enumerate((0.2, 0.9, 0.4, 0.75, 0.1))}
    dist = softmax(scores, 0.01)
    draws = random.Random(5)
    freq = sum(sample_choice(dist, draws) == "g1" for _ in range(SOFTMAX_DRAWS)) / SOFTMAX_DRAWS
    freq_ok = freq >= 0.99

    changed = 0
    for _ in range(RESCALE_INSTANCES):
        n = rng.randint(2, 6)
        tables = [{"x": rng.uniform(0.1, 1), "y": rng.uniform(0.1, 1), "z": 0} for _ in range(n)]
        priorities = [rng.choice([1, 2, 3, 5, 8]) * rng.uniform(0.5, 2) for _ in range(n)]
        factor = rng.uniform(0.01, 100)
        utils = {f"p{i}": rng.uniform(0.01, 0.99) for i in range(n)}
        preds = {f"g{k}": {f"p{i}": rng.choice("xyz") for i in range(n)} for k in range(5)}
        goals = [Goal("robot", "p", "d", frozenset({"o"}), g, {"o": 1.0}, id=g) for g in preds]
        picks = []
        for scale in (1.0, factor):
            ps = [_need(f"p{i}", priorities[i] * scale, tables[i]) for i in range(n)]
            ms = MotivationalSpace.from_purposes("robot", ps)
            picks.append((select_hierarchical(ps), select_urgency(ps, MotivationReadout(utilities=utils)),
                          select_motivational(ms, goals, lambda g: preds[g.id])))
        changed += picks[0] != picks[1]
    ok = sums_ok and freq_ok and changed == 0
    detail = (f"worst row-sum error {worst:.1e}, top frequency {freq:.4f} at tau 0.01, "
              f"{changed}/{RESCALE_INSTANCES} selections changed by rescaling")
    return announce(4, "arbitration numerics", ok, detail)


def criterion_5():
    grid = grid_domain()
    sensor = identity_sensor("robot", [grid])
    corner = Goal("robot", "reach", "grid", frozenset({"4,4"}), "e", {"4,4": 1.0}, id="4,4")
    pol = learn_policy(GoalConditionedTask("grid", corner, timeout=25), grid, sensor,
                       LearnerConfig(budget=LEARN_BUDGET, seed=1))
    wrong = 0
    for start in sorted(grid.states):
        res = execute_chain([], corner, None, pol, grid, sensor, random.Random(0), start, 25, raise_on_timeout=False)
        wrong += not (res.success and res.steps == bfs_oracle(grid, start, {"4,4"}))

    gamma = 0.95
    cells = ("0,0", "4,0", "0,4", "4,4", "2,2")
    goals = {c: Goal("robot", "reach", "grid", frozenset({c}), "e", {c: 1.0}, id=c) for c in cells}
    table = {}
    for c, g in goals.items():
        table.update(learn_policy(GoalConditionedTask("grid", g), grid, sensor, LearnerConfig(seed=2)).table)
    sampler = {c: 1 / len(cells) for c in cells}
    trained = evaluate_extrinsic(ActionPolicy(table), sampler, goals, grid, sensor, 2000, random.Random(1), gamma=gamma)
    untrained = evaluate_extrinsic(uniform_policy(grid.actions), sampler, goals, grid, sensor, 2000,
                                   random.Random(1), gamma=gamma)
    # value iteration credits the step that enters the goal, so a k-step success is worth gamma * V
    vi = []
    for c in cells:
        values, _ = state_values(grid, {c}, gamma=gamma)
        vi += [1.0 if s == c else gamma * values[s] for s in sorted(grid.states)]
    optimum = sum(vi) / len(vi)
    bfs_optimum = sum(gamma ** bfs_oracle(grid, s, {c}) for c in cells for s in grid.states) / len(vi)
    ok = wrong == 0 and abs(optimum - bfs_optimum) <= 1e-9 and trained >= NEAR_OPTIMAL * optimum and trained > untrained
    detail = (f"{25 - wrong}/25 starts on shortest paths, trained {trained:.4f} vs optimum {optimum:.4f} "
              f"(untrained {untrained:.4f})")
    return announce(5, "learned gridworld competence", ok, detail)


def _simplex(rng, k):
    raw = [rng.random() + 1e-3 for _ in range(k)]
    total = sum(raw)
    return {f"m{i}": x / total for i, x in enumerate(raw)}


def criterion_6():
    rng = random.Random(6)
    negative = wrong_zero = 0
    for i in range(SIGNAL_PAIRS):
        k = rng.randint(2, 6)
        prior = _simplex(rng, k)
        post = dict(prior) if i % 10 == 0 else _simplex(rng, k)
        gain = information_gain(BeliefState(prior, post))
        negative += gain < 0
        wrong_zero += (abs(gain) <= EXACT) != (post == prior)
    off = 0
    for _ in range(SIGNAL_PAIRS):
        dist = _simplex(rng, rng.randint(1, 8))
        deltas = {g: rng.uniform(-1, 1) for g in dist}
        expected = math.fsum(dist[g] * deltas[g] for g in dist)
        off += abs(competence_gain(deltas, dist) - expected) > EXACT
    ok = negative == wrong_zero == off == 0
    detail = f"{negative} negative gains, {wrong_zero} zero/equality mismatches, {off} competence sums off"
    return announce(6, "intrinsic learning signals", ok, detail)


def criterion_7():
    rng = random.Random(7)
    ac2_off = 0
    for i in range(AC2_MODELS):
        model = random_causal_model(rng, rng.randint(2, 6))
        horizon = model.timeout + rng.randint(0, 2)
        baseline = "random" if i % 2 else "idle"
        res = ac2_counterfactual(model, InterventionSpec(horizon, baseline))
        base_policy = (uniform_policy(model.domains["lab"].actions) if baseline == "random"
                       else ActionPolicy({}, model.idle_action))
        do_end, do_any = forward_oracle(model, horizon)
        base_end, base_any = forward_oracle(model, horizon, base_policy)
        pairs = ((res.intervention.p_end, do_end), (res.intervention.p_any, do_any),
                 (res.baseline.p_end, base_end), (res.baseline.p_any, base_any))
        exact = res.intervention.method == res.baseline.method == "exact"
        ac2_off += not exact or any(abs(a - b) > ENUM_TOL for a, b in pairs)
    ac3_off = solved = 0
    while solved < AC3_MODELS:
        dom = random_domain(rng, rng.randint(2, 12), rng.randint(1, 3))
        target = frozenset(rng.sample(sorted(dom.states), rng.randint(1, 2)))
        expected = bfs_oracle(dom, "s0", target)
        if expected is None:
            continue
        solved += 1
        ac3_off += minimal_cost(dom, "s0", target) != expected
    ok = ac2_off == ac3_off == 0
    detail = f"{AC2_MODELS - ac2_off}/{AC2_MODELS} counterfactual models exact, {AC3_MODELS - ac3_off}/{AC3_MODELS} minimal costs"
    return announce(7, "actual-cause probabilities and minimality", ok, detail)


def _grounding_instance(rng):
    points = [f"e{i}" for i in range(rng.randint(1, 6))]
    table = {e: rng.choice([0, 0.25, 0.5, 1.0, 2.0]) for e in points}
    table[points[0]] = rng.choice([0.5, 1.0, 3.0])
    space = EncodingSpace("E", "robot", frozenset(points))
    purpose = purpose_from_utility("p", space, table, kind="need", intended_domains=["d"])
    obs = [f"o{i}" for i in range(rng.randint(1, 8))]
    enc = ObservationEncoder("robot", "E", "d", {o: rng.choice(points) for o in obs})
    smap = {}
    for i in range(rng.randint(1, 12)):
        if rng.random() < 0.5 or len(obs) == 1:
            smap[f"s{i}"] = rng.choice(obs)
        else:
            a, b = rng.sample(obs, 2)
            p = rng.uniform(0.1, 0.9)
            smap[f"s{i}"] = {a: p, b: 1 - p}
    return purpose, enc, SensorModel("robot", frozenset(obs), smap), table


def criterion_8():
    rng = random.Random(8)
    bad = 0
    for _ in range(GROUNDING_MODELS):
        purpose, enc, sensor, table = _grounding_instance(rng)
        whole = ground_purpose(purpose, enc)
        goals = [ground_point(purpose, e, enc) for e in sorted(purpose.support)] + [whole]
        for g in goals:
            if g is not whole and any(enc.table[o] != g.source_point for o in g.points):
                bad += 1
            if any(g.utility_per_point[o] != table[enc.table[o]] for o in g.points):
                bad += 1
            fused = {s for s, row in sensor.map.items()
                     if any(o in g.points for o in ([row] if isinstance(row, str) else [o for o, p in row.items() if p > 0]))}
            bad += state_goal(g, sensor).states != fused
        bad += whole.points != {o for o, e in enc.table.items() if table[e] != 0}
    ok = bad == 0
    return announce(8, "grounding round trips", ok, f"{GROUNDING_MODELS} models, {bad} mismatches")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
