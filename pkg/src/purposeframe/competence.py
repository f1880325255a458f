"""Goal-conditioned pursuit: pseudo-rewards, tabular learning, planning, subgoal
chains, competence and information-gain signals, and the extrinsic evaluation harness."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _dist
from .errors import (
    MalformedRow,
    ModelError,
    SubgoalTimeout,
    SupportViolation,
    Unsolvable,
    UnnormalizedDistribution,
)
from .grounding import Goal, state_goal
from .perception import SensorModel, observe
from .purposes import EncodingSpace, Purpose
from .world import Domain, History, reachable, step

DEFAULT_GAMMA = 0.95
DEFAULT_SUCCESS_THRESHOLD = 0.5
# actions whose values differ by less than this count as tied (first in sorted order wins)
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GoalConditionedTask:
    domain: str
    goal: Goal
    gamma: float = DEFAULT_GAMMA
    timeout: int = 25
    success_threshold: float = DEFAULT_SUCCESS_THRESHOLD

    def __post_init__(self) -> None:
        if self.timeout < 1:
            raise ModelError("timeout must be at least 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ModelError("gamma must lie in (0, 1]")

    def reward(self, observation: str, action: str | None, next_observation: str) -> float:
        return float(pseudo_reward(next_observation, self.goal))

    def succeeded(self, observation: str) -> bool:
        return pseudo_reward(observation, self.goal) > self.success_threshold


def pseudo_reward(observation: str, goal: Goal) -> int:
    return 1 if observation in goal.points else 0


def _check_rows(table: Mapping, what: str) -> None:
    for key, row in table.items():
        if not isinstance(row, str):
            problem = _dist.row_problem(row)
            if problem:
                raise MalformedRow(f"{what} row {key}: {problem}")


@dataclass(frozen=True)
class ActionPolicy:
    """``table[(observation, goal_id)]`` gives an action or an action distribution.

    ``default`` is used for keys missing from the table (an idle policy is just
    an empty table with a default).
    """

    table: Mapping[tuple[str, str], _dist.Row] = field(default_factory=dict)
    default: _dist.Row | None = None

    def __post_init__(self) -> None:
        _check_rows(self.table, "action policy")

    def row(self, observation: str, goal_id: str) -> _dist.Row:
        row = self.table.get((observation, goal_id), self.default)
        if row is None:
            raise ModelError(f"policy has no action for ({observation}, {goal_id})")
        return row

    def act(self, observation: str, goal_id: str, rng: random.Random) -> str:
        return _dist.sample(self.row(observation, goal_id), rng)


@dataclass(frozen=True)
class GoalSelectorPolicy:
    """``table[(observation, goal_id)]`` gives the next subgoal id (or a distribution)."""

    table: Mapping[tuple[str, str], _dist.Row] = field(default_factory=dict)
    default: _dist.Row | None = None

    def __post_init__(self) -> None:
        _check_rows(self.table, "goal selector")

    def select(self, observation: str, goal_id: str, rng: random.Random) -> str:
        row = self.table.get((observation, goal_id), self.default)
        if row is None:
            return goal_id
        return _dist.sample(row, rng)


def idle_policy(action: str) -> ActionPolicy:
    return ActionPolicy({}, action)


def uniform_policy(actions: Iterable[str]) -> ActionPolicy:
    acts = sorted(actions)
    return ActionPolicy({}, {a: 1.0 / len(acts) for a in acts})


def enabled(subgoal: Goal, state: str, domain: Domain, sensor: SensorModel, timeout: int) -> bool:
    """Whether some action sequence of at most ``timeout`` steps can reach the subgoal."""
    target = state_goal(subgoal, sensor).states
    if not target:
        return False
    return bool(reachable(domain, {state}, timeout) & target)


# ---------------------------------------------------------------- learning


@dataclass(frozen=True)
class LearnerConfig:
    budget: int = 50_000
    alpha: float | None = None  # None: 1.0 on deterministic models, 0.1 otherwise
    epsilon: float = 0.2
    seed: int = 0
    explore_all_states: bool = True
    eval_episodes: int = 200
    target_success: float = 0.9


def _observation_index(sensor: SensorModel, states: Iterable[str]) -> list[str]:
    obs: set[str] = set()
    for s in states:
        obs |= sensor.support(s)
    return sorted(obs)


def _greedy(q_row: np.ndarray) -> int:
    return int(np.flatnonzero(q_row >= q_row.max() - 1e-12)[0])


def _learn(
    domain: Domain,
    sensor: SensorModel,
    goals: Sequence[Goal],
    gamma: float,
    timeout: int,
    cfg: LearnerConfig,
) -> ActionPolicy:
    rng = random.Random(cfg.seed)
    states = sorted(domain.states)
    actions = sorted(domain.actions)
    obs_list = _observation_index(sensor, states)
    oi = {o: i for i, o in enumerate(obs_list)}
    member = np.array([[o in g.points for o in obs_list] for g in goals], dtype=bool)
    q = np.zeros((len(goals), len(obs_list), len(actions)))
    alpha = cfg.alpha
    if alpha is None:
        alpha = 1.0 if domain.deterministic and sensor.deterministic else 0.1
    starts = states if cfg.explore_all_states else sorted(domain.initial_states)

    steps = episodes = 0
    while steps < cfg.budget and episodes < cfg.budget:
        episodes += 1
        gi = rng.randrange(len(goals))
        s = starts[rng.randrange(len(starts))]
        o = oi[observe(sensor, s, rng)]
        for _ in range(timeout):
            if member[gi, o] or steps >= cfg.budget:
                break
            if rng.random() < cfg.epsilon:
                a = rng.randrange(len(actions))
            else:
                row = q[gi, o]
                best = np.flatnonzero(row >= row.max() - 1e-12)
                a = int(best[rng.randrange(len(best))])
            s = step(domain, s, actions[a], rng)
            o2 = oi[observe(sensor, s, rng)]
            steps += 1
            # relabel: the same transition updates every goal not already achieved at o
            live = ~member[:, o]
            reached = member[:, o2]
            target = np.where(reached, 1.0, gamma * q[:, o2].max(axis=1))
            q[live, o, a] += alpha * (target[live] - q[live, o, a])
            o = o2

    table = {}
    for g_i, g in enumerate(goals):
        for o, o_i in oi.items():
            table[(o, g.id)] = actions[_greedy(q[g_i, o_i])]
    return ActionPolicy(table)


def learn_policy(
    task: GoalConditionedTask,
    domain: Domain,
    sensor: SensorModel,
    config: LearnerConfig | None = None,
) -> ActionPolicy:
    """Tabular one-step Q-learning on the pseudo-reward with seeded epsilon-greedy exploration."""
    cfg = config or LearnerConfig()
    target = state_goal(task.goal, sensor).states
    if not (reachable(domain, domain.initial_states, task.timeout) & target):
        raise Unsolvable(f"goal {task.goal.id} is not reachable within {task.timeout} steps")
    return _learn(domain, sensor, [task.goal], task.gamma, task.timeout, cfg)


def learn_goal_conditioned(
    goals: Sequence[Goal],
    domain: Domain,
    sensor: SensorModel,
    gamma: float = DEFAULT_GAMMA,
    timeout: int = 25,
    config: LearnerConfig | None = None,
) -> ActionPolicy:
    """One policy for several goals; every transition is relabelled against all goals."""
    if not goals:
        raise ModelError("no goals to learn")
    return _learn(domain, sensor, list(goals), gamma, timeout, config or LearnerConfig())


# ---------------------------------------------------------------- planning


def state_values(
    domain: Domain,
    goal_states: Iterable[str],
    gamma: float = DEFAULT_GAMMA,
    penalty: Mapping[str, float] | None = None,
    actions: Iterable[str] | None = None,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> tuple[dict[str, float], dict[tuple[str, str], float]]:
    """Value iteration: +1 on entering a goal state (absorbing), minus ``penalty`` on every entered state."""
    goal_states = frozenset(goal_states)
    penalty = penalty or {}
    acts = sorted(domain.actions if actions is None else actions)
    states = sorted(domain.states)
    index = {s: i for i, s in enumerate(states)}
    rows = {(s, a): sorted(domain.distribution(s, a).items()) for s in states for a in acts}
    width = max(len(r) for r in rows.values())
    # padded successor table: slots beyond a row's length carry probability 0
    succ = np.zeros((len(acts), len(states), width), dtype=np.intp)
    prob = np.zeros((len(acts), len(states), width))
    for ai, a in enumerate(acts):
        for si, s in enumerate(states):
            for k, (t, p) in enumerate(rows[(s, a)]):
                succ[ai, si, k] = index[t]
                prob[ai, si, k] = p
    is_goal = np.array([s in goal_states for s in states])
    cost = np.array([penalty.get(s, 0.0) for s in states])
    v = np.zeros(len(states))
    q = np.zeros((len(acts), len(states)))
    for _ in range(max_iter):
        gain = np.where(is_goal, 1.0, gamma * v) - cost
        q = (prob * gain[succ]).sum(axis=2)
        best = np.where(is_goal, 0.0, q.max(axis=0))
        delta = float(np.abs(best - v).max())
        v = best
        if delta <= tol:
            break
    values = {s: float(v[i]) for i, s in enumerate(states)}
    qs = {
        (s, a): float(q[ai, si])
        for si, s in enumerate(states)
        if s not in goal_states
        for ai, a in enumerate(acts)
    }
    return values, qs


def plan_policy(
    domain: Domain,
    sensor: SensorModel,
    goal: Goal,
    gamma: float = DEFAULT_GAMMA,
    penalty: Mapping[str, float] | None = None,
    actions: Iterable[str] | None = None,
) -> ActionPolicy:
    """Greedy policy from value iteration over states, read out per observation.

    When several states share an observation the action with the best mean
    value over those states is taken.
    """
    target = state_goal(goal, sensor).states
    acts = sorted(domain.actions if actions is None else actions)
    _, q = state_values(domain, target, gamma, penalty, acts)
    by_obs: dict[str, list[str]] = {}
    for s in sorted(domain.states):
        for o in sensor.support(s):
            by_obs.setdefault(o, []).append(s)
    table = {}
    for o, sts in by_obs.items():
        live = [s for s in sts if s not in target]
        if not live:
            table[(o, goal.id)] = acts[0]
            continue
        scores = [sum(q[(s, a)] for s in live) / len(live) for a in acts]
        top = max(scores)
        table[(o, goal.id)] = next(a for a, sc in zip(acts, scores) if sc >= top - TIE_TOLERANCE)
    return ActionPolicy(table)


# ---------------------------------------------------------------- pursuit


@dataclass
class PursuitResult:
    success: bool
    states: list[str]
    observations: list[str]
    actions: list[str]
    windows: list[tuple[int, int]]
    goals: list[str]

    @property
    def steps(self) -> int:
        return len(self.actions)

    @property
    def final_state(self) -> str:
        return self.states[-1]

    def state_history(self) -> History:
        return History("state-action", _interleave(self.states, self.actions))

    def observation_history(self) -> History:
        return History("observation-action", _interleave(self.observations, self.actions))


def _interleave(symbols: Sequence[str], actions: Sequence[str]) -> tuple[str, ...]:
    out: list[str] = []
    for i, a in enumerate(actions):
        out += [symbols[i], a]
    out.append(symbols[len(actions)])
    return tuple(out)


def execute_chain(
    chain: Sequence[Goal] | None,
    final: Goal,
    selector: GoalSelectorPolicy | None,
    policy: ActionPolicy,
    domain: Domain,
    sensor: SensorModel,
    rng: random.Random,
    start: str,
    timeout: int,
    raise_on_timeout: bool = True,
    subgoals: Mapping[str, Goal] | None = None,
) -> PursuitResult:
    """Pursue each subgoal of ``chain`` and then ``final``, each within ``timeout`` steps.

    With ``chain=None`` the selector proposes subgoals (looked up in
    ``subgoals``) until it names the final goal. Windows record (first step, steps used); zero steps is allowed when a
    subgoal already holds.
    """
    state = start
    obs = observe(sensor, state, rng)
    res = PursuitResult(False, [state], [obs], [], [], [])
    if chain is not None:
        links = list(chain) + [final]
    else:
        links = None
    j = 0
    while True:
        if links is not None:
            if j == len(links):
                break
            goal = links[j]
        else:
            goal = _next_selected(selector, subgoals, final, obs, rng, j)
        t0 = len(res.actions)
        used = 0
        while obs not in goal.points:
            if used == timeout:
                res.windows.append((t0, used))
                res.goals.append(goal.id)
                if raise_on_timeout:
                    raise SubgoalTimeout(j, goal.id, res)
                return res
            action = policy.act(obs, goal.id, rng)
            state = step(domain, state, action, rng)
            obs = observe(sensor, state, rng)
            res.actions.append(action)
            res.states.append(state)
            res.observations.append(obs)
            used += 1
        res.windows.append((t0, used))
        res.goals.append(goal.id)
        j += 1
        if links is None and goal.id == final.id:
            break
    res.success = True
    return res


def _next_selected(selector, subgoals, final, obs, rng, j) -> Goal:
    if selector is None:
        return final
    subgoals = subgoals or {}
    if j > len(subgoals):
        return final
    choice = selector.select(obs, final.id, rng)
    if choice == final.id:
        return final
    try:
        return subgoals[choice]
    except KeyError:
        raise ModelError(f"selector chose unknown subgoal {choice!r}") from None


def pursuit_distribution(
    domain: Domain,
    sensor: SensorModel,
    policy: ActionPolicy,
    goal: Goal,
    start: Mapping[str, float] | str,
    timeout: int,
) -> dict[tuple[str, str, bool], float]:
    """Exact distribution of (terminal state, terminal observation, success).

    Pursuit stops as soon as the observation lies in the goal, or after
    ``timeout`` actions.
    """
    frontier: dict[str, float] = {start: 1.0} if isinstance(start, str) else dict(start)
    out: dict[tuple[str, str, bool], float] = {}
    for t in range(timeout + 1):
        nxt: dict[str, float] = {}
        for s, ps in frontier.items():
            for o, po in _dist.as_distribution(sensor.map[s]).items():
                w = ps * po
                if o in goal.points:
                    out[(s, o, True)] = out.get((s, o, True), 0.0) + w
                elif t == timeout:
                    out[(s, o, False)] = out.get((s, o, False), 0.0) + w
                else:
                    for a, pa in _dist.as_distribution(policy.row(o, goal.id)).items():
                        for s2, pt in domain.distribution(s, a).items():
                            nxt[s2] = nxt.get(s2, 0.0) + w * pa * pt
        frontier = nxt
    return out


def pursuit_outcomes(
    domain: Domain,
    sensor: SensorModel,
    policy: ActionPolicy,
    goal: Goal,
    starts: Iterable[str],
    timeout: int,
) -> frozenset[tuple[str, str, bool]]:
    """Support of ``pursuit_distribution`` over every start state."""
    out: set[tuple[str, str, bool]] = set()
    for s in starts:
        out |= {k for k, p in pursuit_distribution(domain, sensor, policy, goal, s, timeout).items() if p > 0}
    return frozenset(out)


# ---------------------------------------------------------------- intrinsic signals


class CompetenceTracker:
    """Success history per goal; competence is the success rate over the last window."""

    def __init__(self, window: int = 10):
        if window < 1:
            raise ValueError("window must be positive")
        self.window = window
        self._results: dict[str, list[bool]] = {}

    def record(self, goal_id: str, success: bool) -> None:
        self._results.setdefault(goal_id, []).append(bool(success))

    def competence(self, goal_id: str, lag: int = 0) -> float:
        hist = self._results.get(goal_id, [])
        end = len(hist) - lag
        chunk = hist[max(0, end - self.window) : max(0, end)]
        return sum(chunk) / len(chunk) if chunk else 0.0

    def delta(self, goal_id: str) -> float:
        return self.competence(goal_id) - self.competence(goal_id, lag=self.window)

    def goals(self) -> list[str]:
        return sorted(self._results)


def _check_distribution(dist: Mapping[str, float], what: str) -> None:
    problem = _dist.row_problem(dist)
    if problem:
        raise UnnormalizedDistribution(f"{what}: {problem}")


def competence_gain(
    tracker: CompetenceTracker | Mapping[str, float], goal_distribution: Mapping[str, float]
) -> float:
    """Expected competence improvement under ``goal_distribution``."""
    _check_distribution(goal_distribution, "goal distribution")
    if isinstance(tracker, CompetenceTracker):
        deltas = {g: tracker.delta(g) for g in goal_distribution}
    else:
        deltas = tracker
    return math.fsum(p * deltas.get(g, 0.0) for g, p in goal_distribution.items())


@dataclass(frozen=True)
class BeliefState:
    """Prior and posterior over a finite set of candidate world models."""

    prior: Mapping[str, float]
    posterior: Mapping[str, float]

    @classmethod
    def updated(cls, prior: Mapping[str, float], likelihood: Mapping[str, float]) -> "BeliefState":
        joint = {m: prior[m] * likelihood.get(m, 0.0) for m in prior}
        z = math.fsum(joint.values())
        if z <= 0:
            raise SupportViolation("data has zero probability under every model")
        return cls(dict(prior), {m: w / z for m, w in joint.items()})


def information_gain(belief: BeliefState) -> float:
    """KL divergence of posterior from prior, in nats."""
    _check_distribution(belief.prior, "prior")
    _check_distribution(belief.posterior, "posterior")
    total = 0.0
    for m, q in belief.posterior.items():
        if q == 0:
            continue
        p = belief.prior.get(m, 0.0)
        if p == 0:
            raise SupportViolation(f"posterior puts mass on {m!r}, which the prior excludes")
        total += q * math.log(q / p)
    return max(total, 0.0)


def encoding_discrepancy(space: EncodingSpace, purpose: Purpose, active_point: str) -> float:
    """Heuristic expected utility of the active point relative to a purpose.

    Product spaces: minus the normalised L1 axis distance to the nearest support
    point. Other spaces: 0 inside the support, -1 outside.
    """
    if active_point in purpose.support:
        return 0.0
    if space.dims is None:
        return -1.0
    here = space.coordinates(active_point)
    spans = [max(len(v) - 1, 1) for _, v in space.dims]
    best = min(
        sum(abs(a - b) / w for a, b, w in zip(here, space.coordinates(p), spans)) for p in purpose.support
    )
    return -best / len(spans)


# ---------------------------------------------------------------- extrinsic phase


def evaluate_extrinsic(
    policy: ActionPolicy,
    goal_sampler: Mapping[str, float],
    goals: Mapping[str, Goal],
    domain: Domain,
    sensor: SensorModel,
    episodes: int,
    rng: random.Random,
    timeout: int = 25,
    gamma: float = 1.0,
    starts: Sequence[str] | None = None,
) -> float:
    """Monte-Carlo mean return of ``policy`` on goals drawn from ``goal_sampler``.

    A successful episode of k steps returns gamma**k, a failed one 0. Start
    states are drawn uniformly from ``starts`` (default: the initial states).
    """
    _check_distribution(goal_sampler, "goal sampler")
    start_list = sorted(starts if starts is not None else domain.initial_states)
    keys = sorted(goal_sampler)
    weights = [goal_sampler[k] for k in keys]
    total = 0.0
    for _ in range(episodes):
        goal = goals[rng.choices(keys, weights)[0]]
        s = start_list[rng.randrange(len(start_list))]
        res = execute_chain([], goal, None, policy, domain, sensor, rng, s, timeout, raise_on_timeout=False)
        if res.success:
            total += gamma ** res.steps
    return total / episodes if episodes else 0.0


def bfs_distance(domain: Domain, start: str, targets: Iterable[str], actions: Iterable[str] | None = None) -> int | None:
    """Fewest actions from ``start`` into ``targets`` over nonzero-probability edges."""
    targets = frozenset(targets)
    acts = sorted(domain.actions if actions is None else actions)
    seen = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s in targets:
            return seen[s]
        for a in acts:
            for t in sorted(domain.successors(s, a)):
                if t not in seen:
                    seen[t] = seen[s] + 1
                    queue.append(t)
    return None


__all__ = [
    "DEFAULT_GAMMA",
    "DEFAULT_SUCCESS_THRESHOLD",
    "GoalConditionedTask",
    "ActionPolicy",
    "GoalSelectorPolicy",
    "LearnerConfig",
    "PursuitResult",
    "CompetenceTracker",
    "BeliefState",
    "pseudo_reward",
    "idle_policy",
    "uniform_policy",
    "enabled",
    "learn_policy",
    "learn_goal_conditioned",
    "state_values",
    "plan_policy",
    "execute_chain",
    "pursuit_distribution",
    "pursuit_outcomes",
    "competence_gain",
    "information_gain",
    "encoding_discrepancy",
    "evaluate_extrinsic",
    "bfs_distance",
]
