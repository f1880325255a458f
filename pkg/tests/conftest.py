import random
from collections import deque

import pytest

from purposeframe.perception import identity_sensor
from purposeframe.world import Domain

GRID_MOVES = {"north": (0, -1), "south": (0, 1), "east": (1, 0), "west": (-1, 0)}


def grid_domain(size=5, walls=(), initial=None, id="grid"):
    cells = [(x, y) for y in range(size) for x in range(size) if (x, y) not in set(walls)]
    free = set(cells)
    table = {}
    for x, y in cells:
        for a, (dx, dy) in GRID_MOVES.items():
            nxt = (x + dx, y + dy)
            table[(f"{x},{y}", a)] = f"{nxt[0]},{nxt[1]}" if nxt in free else f"{x},{y}"
    states = frozenset(f"{x},{y}" for x, y in cells)
    return Domain(id, states, frozenset(GRID_MOVES), table, frozenset(initial or states))


def random_domain(rng, n_states=6, n_actions=2, stochastic=False, id="rand"):
    states = [f"s{i}" for i in range(n_states)]
    actions = [f"a{i}" for i in range(n_actions)]
    table = {}
    for s in states:
        for a in actions:
            if stochastic and rng.random() < 0.6:
                k = rng.randint(2, min(3, n_states))
                targets = rng.sample(states, k)
                cuts = sorted(rng.random() for _ in range(k - 1))
                probs = [b - a_ for a_, b in zip([0.0] + cuts, cuts + [1.0])]
                probs[-1] = 1.0 - sum(probs[:-1])
                table[(s, a)] = dict(zip(targets, probs))
            else:
                table[(s, a)] = rng.choice(states)
    return Domain(id, frozenset(states), frozenset(actions), table, frozenset({states[0]}))


def bfs_oracle(domain, start, targets):
    """Shortest number of actions, written independently of the library."""
    targets = set(targets)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s in targets:
            return dist[s]
        for a in domain.actions:
            row = domain.transition[(s, a)]
            nxt = [row] if isinstance(row, str) else [t for t, p in row.items() if p > 0]
            for t in nxt:
                if t not in dist:
                    dist[t] = dist[s] + 1
                    queue.append(t)
    return None


@pytest.fixture
def grid():
    return grid_domain()


@pytest.fixture
def grid_sensor(grid):
    return identity_sensor("robot", [grid])


@pytest.fixture
def rng():
    return random.Random(1234)


def small_model(domain, robot_map, human_map, human_good, robot_good, policy_rows, timeout=1, idle="stay",
                default_action=None):
    """Single-domain alignment model with a two-point purpose on each side.

    Human observations in ``human_good`` encode into the human purpose and
    robot observations in ``robot_good`` encode to the intended point ``m1``.
    ``policy_rows`` maps robot observations to actions for the goal.
    """
    from purposeframe.alignment import AlignmentModel, Intention
    from purposeframe.competence import ActionPolicy
    from purposeframe.perception import SensorModel
    from purposeframe.purposes import EncodingSpace, ObservationEncoder, purpose_from_utility

    d = domain.id
    hs = SensorModel.for_domains("human", [domain], human_map)
    rs = SensorModel.for_domains("robot", [domain], robot_map)
    human = purpose_from_utility("want", EncodingSpace("E", "human", frozenset({"e:g", "e:0"})),
                                 {"e:g": 1.0, "e:0": 0}, intended_domains=[d])
    robot = purpose_from_utility("do", EncodingSpace("M", "robot", frozenset({"m1", "m0"})),
                                 {"m1": 1.0, "m0": 0}, kind="mission", intended_domains=[d])
    henc = ObservationEncoder("human", "E", d, {o: ("e:g" if o in human_good else "e:0") for o in hs.observations})
    renc = ObservationEncoder("robot", "M", d, {o: ("m1" if o in robot_good else "m0") for o in rs.observations})
    goal_id = f"do:m1@{d}"
    policy = ActionPolicy({(o, goal_id): row for o, row in policy_rows.items()}, default_action or idle)
    return AlignmentModel({d: domain}, human, hs, {d: henc}, robot, rs, {d: renc}, policy,
                          Intention("do", "m1", (d,)), timeout=timeout, idle_action=idle)
