import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from purposeframe.arbitration import (
    ArbitrationConfig,
    MotivationReadout,
    priority_warnings,
    sample_choice,
    select_hierarchical,
    select_motivational,
    select_urgency,
    softmax,
    softmax_distribution,
    urgency_scores,
)
from purposeframe.errors import EmptyIntentionSet, UtilityOutOfRange
from purposeframe.grounding import Goal
from purposeframe.purposes import EncodingSpace, MotivationalSpace, purpose_from_utility


def purpose(id, priority, table=None):
    table = table or {"on": 1.0, "off": 0}
    return purpose_from_utility(id, EncodingSpace(f"E-{id}", "robot", frozenset(table)), table,
                                kind="need", priority=priority, intended_domains=["d"])


def test_hierarchical_examples():
    assert select_hierarchical([purpose("closeness", 10), purpose("energy", 2)]) == "closeness"
    assert select_hierarchical([purpose("b", 5), purpose("a", 5)]) == "a"


def test_hierarchical_skips_proscriptive():
    quiet = purpose("quiet", 50, {"bad": -1.0, "ok": 0})
    assert select_hierarchical([quiet, purpose("energy", 2)]) == "energy"
    with pytest.raises(EmptyIntentionSet):
        select_hierarchical([quiet])


def test_hierarchical_max_scan():
    rng = random.Random(3)
    for _ in range(200):
        ps = [purpose(f"p{i}", rng.choice([1, 2, 3, 5, 8])) for i in range(10)]
        best = max(p.priority for p in ps)
        assert select_hierarchical(ps) == min(p.id for p in ps if p.priority == best)


def test_urgency_examples():
    ps = [purpose("p1", 10), purpose("p2", 2)]
    readout = MotivationReadout(utilities={"p1": 0.99, "p2": 0.1})
    scores = urgency_scores(ps, readout)
    assert math.isclose(scores["p1"], 0.1) and math.isclose(scores["p2"], 1.8)
    assert select_urgency(ps, readout) == "p2"
    assert select_urgency(ps, MotivationReadout(utilities={"p1": 0.5, "p2": 0.5})) == "p1"
    with pytest.raises(UtilityOutOfRange):
        select_urgency(ps, MotivationReadout(utilities={"p1": 1.0, "p2": 0.5}))


def test_urgency_scan():
    rng = random.Random(5)
    for _ in range(200):
        ps = [purpose(f"p{i}", rng.uniform(0.1, 10)) for i in range(6)]
        utils = {p.id: rng.uniform(0.01, 0.99) for p in ps}
        scores = {p.id: p.priority * (1 - utils[p.id]) for p in ps}
        assert select_urgency(ps, MotivationReadout(utilities=utils)) == max(scores, key=scores.get)


def test_softmax_examples():
    assert softmax({"a": 3.0, "b": 3.0}, 1.0) == {"a": 0.5, "b": 0.5}
    dist = softmax({"a": 1.0, "b": 0.0}, 1.0)
    assert math.isclose(dist["a"], math.e / (math.e + 1), abs_tol=1e-12)
    assert round(dist["a"], 4) == 0.7311 and round(dist["b"], 4) == 0.2689


def test_softmax_distribution_uses_urgency():
    ps = [purpose("p1", 10), purpose("p2", 2)]
    readout = MotivationReadout(utilities={"p1": 0.9, "p2": 0.5})
    dist = softmax_distribution(ps, readout, ArbitrationConfig("softmax", temperature=1.0))
    assert math.isclose(dist["p1"], math.exp(1.0) / (math.exp(1.0) + math.exp(1.0)))


def test_low_temperature_concentrates():
    rng = random.Random(17)
    scores = {f"g{i}": rng.uniform(0, 1) for i in range(5)}
    ranked = sorted(scores.values())
    assert ranked[-1] - ranked[-2] > 0.1  # this seed has a clear winner
    dist = softmax(scores, 0.01)
    top = max(scores, key=scores.get)
    draws = random.Random(2)
    freq = sum(sample_choice(dist, draws) == top for _ in range(10_000)) / 10_000
    assert freq >= 0.99
    se = math.sqrt(dist[top] * (1 - dist[top]) / 10_000) or 1e-4
    assert abs(freq - dist[top]) <= 3 * se


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=8),
       st.floats(0.05, 100))
def test_softmax_is_a_distribution(values, tau):
    dist = softmax({f"k{i}": v for i, v in enumerate(values)}, tau)
    assert abs(math.fsum(dist.values()) - 1) <= 1e-9
    assert all(0 <= p <= 1 for p in dist.values())


def test_softmax_flattens_at_huge_temperature():
    dist = softmax({"a": 0.9, "b": 0.1, "c": 0.5}, 1e6)
    assert max(dist.values()) - min(dist.values()) < 1e-6


def goal(id):
    return Goal("robot", "p", "d", frozenset({"o"}), id, {"o": 1.0}, id=id)


def test_motivational_examples():
    ms = MotivationalSpace.from_purposes("robot", [purpose("c1", 10), purpose("c2", 2)])
    predictions = {"g1": {"c1": "on", "c2": "off"}, "g2": {"c1": "off", "c2": "on"}}
    assert select_motivational(ms, [goal("g2"), goal("g1")], lambda g: predictions[g.id]) == "g1"
    same = {"c1": "on", "c2": "on"}
    assert select_motivational(ms, [goal("gb"), goal("ga")], lambda g: same) == "ga"


def test_motivational_scan():
    rng = random.Random(44)
    for _ in range(100):
        comps = [purpose(f"c{i}", rng.uniform(-5, 10), {"x": rng.uniform(0.1, 1), "y": rng.uniform(0.1, 1), "z": 0})
                 for i in range(3)]
        ms = MotivationalSpace.from_purposes("robot", comps)
        preds = {f"g{k}": {c.id: rng.choice("xyz") for c in comps} for k in range(6)}
        scores = {g: sum(c.priority * c.utility(pt[c.id]) for c in comps) for g, pt in preds.items()}
        got = select_motivational(ms, [goal(g) for g in preds], lambda g: preds[g.id])
        assert math.isclose(scores[got], max(scores.values()), abs_tol=1e-12)


def test_priority_warning():
    quiet = purpose("quiet", 50, {"bad": -1.0, "ok": 0})
    assert priority_warnings([quiet, purpose("closeness", 10)])
    assert priority_warnings([quiet, purpose("closeness", 5)]) == []
