import random

import pytest

from purposeframe.errors import MalformedRow, UncoveredState, UnknownObservation
from purposeframe.perception import SensorModel, identity_sensor, observe, observe_set, preimage
from purposeframe.world import deterministic_domain

from conftest import random_domain


def table_sensor(table, observations=None):
    obs = set(observations or ())
    for row in table.values():
        obs |= {row} if isinstance(row, str) else set(row)
    return SensorModel("robot", frozenset(obs), table)


def random_sensor(rng, n_states, n_obs=4):
    obs = [f"o{i}" for i in range(n_obs)]
    table = {}
    for i in range(n_states):
        if rng.random() < 0.5:
            table[f"s{i}"] = rng.choice(obs)
        else:
            picks = rng.sample(obs, 2)
            p = rng.uniform(0.05, 0.95)
            table[f"s{i}"] = {picks[0]: p, picks[1]: 1.0 - p}
    return SensorModel("robot", frozenset(obs + ["o-silent"]), table)


def test_observe_lookup():
    assert observe(table_sensor({"s1": "o1"}), "s1", random.Random(0)) == "o1"


def test_identity_sensor():
    d = deterministic_domain("d", {("s1", "a"): "s2", ("s2", "a"): "s1"}, ["s1"])
    sensor = identity_sensor("robot", [d], prefix="o_")
    assert observe(sensor, "s2", random.Random(0)) == "o_s2"


def test_observe_frequency():
    sensor = table_sensor({"s1": {"o1": 0.5, "o2": 0.5}})
    rng = random.Random(5)
    freq = sum(observe(sensor, "s1", rng) == "o1" for _ in range(10_000)) / 10_000
    assert 0.48 <= freq <= 0.52


def test_preimage_examples():
    sensor = table_sensor({"s1": "o1", "s2": "o1", "s3": "o2"}, ["o9"])
    assert preimage(sensor, "o1") == {"s1", "s2"}
    assert preimage(sensor, "o9") == frozenset()
    with pytest.raises(UnknownObservation):
        preimage(sensor, "nope")


def test_preimage_matches_row_scan():
    rng = random.Random(21)
    for _ in range(50):
        sensor = random_sensor(rng, 10)
        for o in sensor.observations:
            scan = {s for s, row in sensor.map.items()
                    if (row == o if isinstance(row, str) else row.get(o, 0) > 0)}
            assert preimage(sensor, o) == scan


def test_preimages_partition_states_when_deterministic():
    rng = random.Random(2)
    obs = ["o0", "o1", "o2"]
    sensor = table_sensor({f"s{i}": rng.choice(obs) for i in range(12)}, obs)
    parts = [preimage(sensor, o) for o in obs]
    assert set().union(*parts) == set(sensor.map)
    assert sum(len(p) for p in parts) == len(sensor.map)


def test_domain_filter():
    d1 = deterministic_domain("d1", {("a1", "x"): "a1"}, ["a1"])
    d2 = deterministic_domain("d2", {("b1", "x"): "b1"}, ["b1"])
    sensor = SensorModel.for_domains("robot", [d1, d2], {"a1": "o", "b1": "o"})
    assert preimage(sensor, "o") == {"a1", "b1"}
    assert preimage(sensor, "o", ["d2"]) == {"b1"}


def test_observe_set_examples():
    sensor = table_sensor({"s1": "o1", "s3": "o2"})
    assert observe_set(sensor, set()) == frozenset()
    assert observe_set(sensor, {"s1", "s3"}) == {"o1", "o2"}


def test_observe_set_matches_elementwise_union():
    rng = random.Random(8)
    for _ in range(50):
        sensor = random_sensor(rng, 12)
        states = {s for s in sensor.map if rng.random() < 0.5}
        expected = set()
        for s in states:
            row = sensor.map[s]
            expected |= {row} if isinstance(row, str) else {o for o, p in row.items() if p > 0}
        assert observe_set(sensor, states) == expected


def test_sensor_must_cover_domain():
    d = random_domain(random.Random(0), 3)
    with pytest.raises(UncoveredState):
        SensorModel.for_domains("robot", [d], {"s0": "o", "s1": "o"})


def test_stochastic_row_checked():
    with pytest.raises(MalformedRow):
        table_sensor({"s1": {"o1": 0.5, "o2": 0.4}})
