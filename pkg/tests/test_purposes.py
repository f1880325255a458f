import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from purposeframe.errors import DimensionMismatch, EmptyMission, MixedSignSupport, UnknownObservation
from purposeframe.purposes import (
    AlignmentMap,
    EncodingSpace,
    MotivationalSpace,
    ObservationEncoder,
    composite_utility,
    decode,
    derive_mission,
    encode,
    intention_set,
    purpose_from_utility,
)


def space(points, owner="human", id="E"):
    return EncodingSpace(id, owner, frozenset(points))


def purpose(id, table, owner="human", sp="E", **kw):
    kw.setdefault("intended_domains", ["d"])
    return purpose_from_utility(id, space(table, owner, sp), table, **kw)


def test_support_is_nonzero_set():
    p = purpose("p", {"e1": 0, "e2": 0.5, "e3": 1})
    assert p.support == {"e2", "e3"} and p.polarity == "prescriptive"


def test_negative_support_is_proscriptive():
    p = purpose("p", {"e1": -1, "e2": 0})
    assert p.support == {"e1"} and p.proscriptive


def test_mixed_signs_rejected():
    with pytest.raises(MixedSignSupport):
        purpose("p", {"e1": 1, "e2": -1})


def test_product_space_points_and_coordinates():
    sp = EncodingSpace.product_space("E", "robot", [("place", ["dock", "away"]), ("level", ["lo", "hi"])])
    assert sp.points == {"dock/lo", "dock/hi", "away/lo", "away/hi"}
    assert sp.coordinates("away/hi") == (1, 1)


def test_derive_mission_examples():
    human = purpose("h", {"e1": 0, "e2": 0.7})
    robot_space = space({"m1", "m2"}, "robot", "M")
    mission = derive_mission(human, AlignmentMap("E", "M", {"m1": "e2", "m2": "e1"}), robot_space)
    assert mission.support == {"m1"}
    assert mission.utility("m1") == human.utility("e2")
    assert mission.kind == "mission" and mission.owner == "robot"


def test_derive_mission_identity_map():
    human = purpose("h", {"e1": 0.4, "e2": 0, "e3": 0.9})
    robot_space = space({"e1", "e2", "e3"}, "robot", "M")
    mission = derive_mission(human, AlignmentMap("E", "M", {e: e for e in robot_space.points}), robot_space)
    assert mission.support == {"e1", "e3"}
    assert all(mission.utility(e) == human.utility(e) for e in robot_space.points)


def test_derive_mission_empty_preimage():
    human = purpose("h", {"e1": 0, "e2": 1})
    with pytest.raises(EmptyMission):
        derive_mission(human, AlignmentMap("E", "M", {"m1": "e1"}), space({"m1"}, "robot", "M"))


def test_derive_mission_matches_scan():
    rng = random.Random(4)
    for _ in range(200):
        hpts = [f"e{i}" for i in range(6)]
        table = {e: (rng.choice([0, 0, 0.3, 1.0])) for e in hpts}
        table["e0"] = 0.5
        human = purpose("h", table)
        mpts = [f"m{i}" for i in range(6)]
        amap = {m: rng.choice(hpts) for m in mpts}
        amap["m0"] = "e0"
        mission = derive_mission(human, AlignmentMap("E", "M", amap), space(mpts, "robot", "M"))
        assert mission.support == {m for m in mpts if amap[m] in human.support}


def test_encode_decode_examples():
    enc = ObservationEncoder("robot", "E", "d", {"o1": "e1", "o2": "e1"})
    assert encode(enc, "o1") == "e1"
    assert decode(enc, "e1") == {"o1", "o2"}
    assert decode(enc, "e7") == frozenset()
    with pytest.raises(UnknownObservation):
        encode(enc, "o3")
    ident = ObservationEncoder("robot", "E", "d", {o: o for o in ("a", "b")})
    assert encode(ident, "b") == "b"


def test_decode_matches_scan():
    rng = random.Random(12)
    for _ in range(100):
        table = {f"o{i}": f"e{rng.randrange(4)}" for i in range(10)}
        enc = ObservationEncoder("robot", "E", "d", table)
        for e in ("e0", "e1", "e2", "e3"):
            assert decode(enc, e) == {o for o, v in table.items() if v == e}


def mspace(alphas, tables):
    ps = [purpose(f"p{i}", t, owner="robot", sp=f"E{i}", priority=a) for i, (a, t) in enumerate(zip(alphas, tables))]
    return MotivationalSpace.from_purposes("robot", ps)


def test_composite_examples():
    ms = mspace((10, 2), [{"a": 0.3, "z": 0}, {"b": 1.0, "z": 0}])
    assert math.isclose(composite_utility(ms, ("a", "b")), 5.0)
    assert composite_utility(ms, {"p0": "z", "p1": "z"}) == 0
    with pytest.raises(DimensionMismatch):
        composite_utility(ms, ("a",))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=3),
    st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
    st.floats(-5, 5, allow_nan=False),
)
def test_composite_is_weighted_sum_and_linear(alphas, utils, scale):
    ms = mspace(alphas, [{"x": u, "z": 0} for u in utils])
    total = 0.0
    for a, u in zip(alphas, utils):
        total += a * u
    assert math.isclose(composite_utility(ms, ("x", "x", "x")), total, abs_tol=1e-9)
    scaled = mspace([a * scale for a in alphas], [{"x": u, "z": 0} for u in utils])
    assert math.isclose(composite_utility(scaled, ("x",) * 3), scale * total, abs_tol=1e-8)


def test_intention_set():
    ps = [purpose(f"P{i}", {"e": 1}, intention_flag=f, intended_domains=["d"] if f else [])
          for i, f in enumerate((True, False, True))]
    assert [p.id for p in intention_set(ps)] == ["P0", "P2"]
    assert intention_set([ps[1]]) == []
    rng = random.Random(0)
    many = [purpose(f"Q{i}", {"e": 1}, intention_flag=(f := rng.random() < 0.5),
                    intended_domains=["d"] if f else []) for i in range(20)]
    assert intention_set(many) == [p for p in many if p.intention_flag]
