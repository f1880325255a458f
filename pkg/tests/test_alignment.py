import random
from dataclasses import replace

import pytest

from purposeframe.alignment import (
    CASE_KINDS,
    AlignmentModel,
    Extrinsic,
    Instrumental,
    InstrumentalProscriptive,
    Intention,
    MultiDomainAll,
    MultiDomainAny,
    VariableUtilityMax,
    VariableUtilityThreshold,
    case_from_name,
    check_conditions,
    check_definition,
    equivalence_audit,
)
from purposeframe.competence import ActionPolicy
from purposeframe.errors import PointOutsideSupport
from purposeframe.modelgen import aligned_model, generator_for, mutate
from purposeframe.perception import SensorModel
from purposeframe.purposes import EncodingSpace, ObservationEncoder, purpose_from_utility
from purposeframe.world import deterministic_domain


def three_state_model(**overrides):
    """s0 --go--> s1 is the only way to the goal; s2 is a distractor."""
    dom = deterministic_domain(
        "room", {("s0", "go"): "s1", ("s0", "stay"): "s0", ("s1", "go"): "s1", ("s1", "stay"): "s1",
                 ("s2", "go"): "s2", ("s2", "stay"): "s2"}, ["s0"])
    human_space = EncodingSpace("E", "human", frozenset({"e:g", "e:0"}))
    robot_space = EncodingSpace("M", "robot", frozenset({"m1", "m0"}))
    human = purpose_from_utility("want", human_space, {"e:g": 1.0, "e:0": 0}, intended_domains=["room"])
    robot = purpose_from_utility("do", robot_space, {"m1": 1.0, "m0": 0}, kind="mission", intended_domains=["room"])
    hsense = SensorModel.for_domains("human", [dom], {s: f"h:{s}" for s in ("s0", "s1", "s2")})
    rsense = SensorModel.for_domains("robot", [dom], {s: f"c:{s}" for s in ("s0", "s1", "s2")})
    henc = ObservationEncoder("human", "E", "room", {"h:s0": "e:0", "h:s1": "e:g", "h:s2": "e:0"})
    renc = ObservationEncoder("robot", "M", "room", {"c:s0": "m0", "c:s1": "m1", "c:s2": "m0"})
    fields = dict(
        domains={"room": dom}, human_purpose=human, human_sensor=hsense, human_encoders={"room": henc},
        robot_purpose=robot, robot_sensor=rsense, robot_encoders={"room": renc},
        policy=ActionPolicy({("c:s0", "do:m1@room"): "go"}, "stay"),
        intention=Intention("do", "m1", ("room",)),
        target_states={"room": frozenset({"s1"})}, target_observations={"room": frozenset({"h:s1"})},
    )
    fields.update(overrides)
    return AlignmentModel(**fields)


def scan_conditions(model):
    """Each set inclusion checked by enumerating states, observations and points."""
    goal = model.goal("room")
    renc, henc = model.robot_encoders["room"], model.human_encoders["room"]
    c1 = all(renc.table[o] == model.intention.point for o in goal.points) and bool(goal.points)
    s_omega = {s for s in model.domains["room"].states if model.robot_sensor.map[s] in goal.points}
    c2 = all(s in model.target_states["room"] for s in s_omega)
    o_omega = {model.human_sensor.map[s] for s in s_omega}
    c3 = all(o in model.target_observations["room"] for o in o_omega)
    c4 = all(henc.table[o] in model.human_purpose.support for o in o_omega)
    return [c1, c2, c3, c4]


def test_constructed_model_is_aligned():
    model = three_state_model()
    verdict = check_conditions(model, Extrinsic())
    assert verdict.aligned
    assert [c.holds for c in verdict.per_condition] == scan_conditions(model) == [True] * 4
    op = check_definition(model, Extrinsic(), random.Random(0))
    assert op.aligned
    assert [set(o["human_points"]) for o in op.outcomes] == [{"e:g"}]


def test_misperceived_state_fails_condition_three():
    model = three_state_model()
    sensor = replace(model.human_sensor, map={**model.human_sensor.map, "s1": "h:s2"})
    broken = replace(model, human_sensor=sensor)
    verdict = check_conditions(broken, Extrinsic())
    assert not verdict.aligned
    first = verdict.first_failing()
    assert first.id == "3"
    assert first.witness["states"] == ["s1"]
    assert [c.holds for c in verdict.per_condition] == scan_conditions(broken)


def test_intention_point_outside_support():
    with pytest.raises(PointOutsideSupport):
        check_conditions(three_state_model(intention=Intention("do", "m0", ("room",))), Extrinsic())


def test_no_intention_formed():
    model = three_state_model(intention=Intention("do", "m1", ("room",), formed=False))
    verdict = check_definition(model, Extrinsic(), random.Random(0))
    assert not verdict.aligned
    assert "no robot intention formed" in verdict.notes
    assert not check_conditions(model, Extrinsic()).aligned


def test_unreached_goal_is_misaligned_in_both_modes():
    model = three_state_model(policy=ActionPolicy({}, "stay"))
    assert not check_definition(model, Extrinsic()).aligned
    assert check_conditions(model, Extrinsic()).per_condition[1].holds  # the goal is still enabled
    # idle policy never reaches s1, so the competence assumption is flagged
    assert any(w.startswith("competence") for w in check_conditions(model, Extrinsic()).warnings)


def test_proscriptive_violation_records_link():
    rng = random.Random(5)
    found = 0
    for _ in range(300):
        model = generator_for(InstrumentalProscriptive())(rng)
        verdict = check_definition(model, InstrumentalProscriptive())
        cond = next((c for c in verdict.per_condition if c.id.endswith(":proscribed")), None)
        if cond is None or cond.holds:
            continue
        found += 1
        assert not verdict.aligned
        d = model.human_domains()[0]
        forbidden = model.forbidden_st(d)
        for hit in cond.witness["violations"]:
            assert 0 <= hit["link"] <= len(model.chain(d))  # the final goal is the last link
            # trace scan: the reported state is forbidden or looks/encodes forbidden to the human
            hobs = model.human_sensor.support(hit["state"])
            assert hit["state"] in forbidden or hobs & model.forbidden_obs(d) or any(
                model.human_encoders[d].table[o] in model.proscriptive.support for o in hobs)
    assert found > 5


@pytest.mark.parametrize("kind", CASE_KINDS)
def test_small_audit_agrees(kind):
    case = case_from_name(kind)
    rep = equivalence_audit(generator_for(case), case, 150, seed=3)
    assert rep.agreements == rep.count, rep.disagreements[:1]
    assert 0 < rep.aligned < rep.count


def test_skipping_condition_four_is_detected():
    def lenient(model, case):
        verdict = check_conditions(model, case)
        kept = [c for c in verdict.per_condition if c.id != "4"]
        verdict.per_condition = kept
        verdict.aligned = all(c.holds for c in kept)
        return verdict

    rep = equivalence_audit(generator_for(Extrinsic()), Extrinsic(), 1000, seed=0, checker=lenient)
    assert rep.agreements < rep.count


@pytest.mark.parametrize("condition", [1, 2, 3, 4])
def test_mutants_flip_operational_verdict(condition):
    rng = random.Random(condition)
    for _ in range(30):
        model = aligned_model(Extrinsic(), rng)
        assert check_definition(model, Extrinsic()).aligned
        bad = mutate(model, condition, rng)
        assert not check_definition(bad, Extrinsic()).aligned
        assert not check_conditions(bad, Extrinsic()).per_condition[condition - 1].holds


def test_enlarging_ground_truth_keeps_alignment():
    rng = random.Random(8)
    checked = 0
    for _ in range(150):
        model = generator_for(Extrinsic())(rng)
        d = model.human_domains()[0]
        if not check_conditions(model, Extrinsic()).aligned:
            continue
        extra = set(rng.sample(sorted(model.domains[d].states), 2))
        bigger = replace(model, target_states={d: model.target_st(d) | extra},
                         target_observations={d: model.target_obs(d)})
        assert check_conditions(bigger, Extrinsic()).aligned
        checked += 1
    assert checked > 20


def test_all_domains_implies_any_domain():
    rng = random.Random(9)
    gen = generator_for(MultiDomainAll())
    seen_all = 0
    for _ in range(300):
        model = gen(rng)
        if check_conditions(model, MultiDomainAll()).aligned:
            seen_all += 1
            assert check_conditions(model, MultiDomainAny()).aligned
            assert check_definition(model, MultiDomainAny()).aligned
    assert seen_all > 10


def test_max_implies_every_lower_threshold():
    rng = random.Random(10)
    gen = generator_for(VariableUtilityMax())
    seen = 0
    for _ in range(300):
        model = gen(rng)
        if not check_conditions(model, VariableUtilityMax()).aligned:
            continue
        seen += 1
        top = model.human_purpose.max_utility()
        for theta in (0.0, top / 2, top - 1e-9):
            assert check_conditions(model, VariableUtilityThreshold(theta)).aligned
            assert check_definition(model, VariableUtilityThreshold(theta)).aligned
    assert seen > 10


def test_dropping_proscriptive_purpose_keeps_alignment():
    rng = random.Random(12)
    gen = generator_for(InstrumentalProscriptive())
    seen = 0
    for _ in range(300):
        model = gen(rng)
        if not check_conditions(model, InstrumentalProscriptive()).aligned:
            continue
        seen += 1
        plain = replace(model, proscriptive=None, forbidden_states=None, forbidden_observations=None)
        assert check_conditions(plain, Instrumental()).aligned
    assert seen > 10


def test_verdict_serialises_witness():
    model = three_state_model()
    sensor = replace(model.human_sensor, map={**model.human_sensor.map, "s1": "h:s2"})
    doc = check_conditions(replace(model, human_sensor=sensor), Extrinsic()).to_dict()
    third = doc["conditions"][2]
    assert third["holds"] is False and third["witness"]["outside"] == ["h:s2"]
