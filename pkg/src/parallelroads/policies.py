"""Baseline routing policies, an episode runner, and a static-policy search.

Policies map observations to autonomous routing vectors.  Besides the fixed
baselines there is a derivative-free optimizer (cross-entropy over the
routing simplex) that looks for the best constant routing on a scenario —
a desk-scale stand-in for training a full controller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from parallelroads.choice import LearningSchedule, hedge_update, learning_rate, validate_routing
from parallelroads.env import StepResult, TrafficEnv
from parallelroads.equilibrium import EquilibriumSolution
from parallelroads.scenario import Scenario

__all__ = [
    "EpisodeTrace",
    "GreedyLatencyPolicy",
    "RoutingPolicy",
    "SelfishAvPolicy",
    "StaticPolicy",
    "StaticSearchResult",
    "UniformPolicy",
    "mean_stage_cost",
    "optimize_static_policy",
    "policy_greedy_min_latency",
    "policy_selfish_av",
    "policy_static_equilibrium",
    "policy_uniform",
    "run_episode",
]


def policy_uniform(num_paths: int) -> np.ndarray:
    """Spread autonomous demand evenly over the paths."""
    if num_paths < 1:
        raise ValueError("need at least one path")
    return np.full(num_paths, 1.0 / num_paths)


def policy_greedy_min_latency(latencies) -> np.ndarray:
    """All mass on the fastest path, split evenly across exact ties."""
    lat = np.asarray(latencies, dtype=float)
    if lat.ndim != 1 or len(lat) == 0:
        raise ValueError("latencies must be a nonempty vector")
    best = lat.min()
    mask = lat <= best + 1e-12
    return mask / mask.sum()


def policy_static_equilibrium(solution: EquilibriumSolution) -> np.ndarray:
    """Replay the autonomous routing of a solved equilibrium."""
    return solution.routing_auto()


class RoutingPolicy:
    """Episode-scoped policy: ``act`` each tick, ``observe`` the result."""

    def start(self, env: TrafficEnv) -> None:  # noqa: B027 - optional hook
        pass

    def act(self, observation: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def observe(self, result: StepResult) -> None:  # noqa: B027 - optional hook
        pass


class StaticPolicy(RoutingPolicy):
    """Always the same routing vector."""

    def __init__(self, routing):
        self._routing = np.asarray(routing, dtype=float)

    def start(self, env: TrafficEnv) -> None:
        self._routing = validate_routing(self._routing, env.action_length, tol=1e-6)

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._routing


class UniformPolicy(RoutingPolicy):
    def start(self, env: TrafficEnv) -> None:
        self._routing = policy_uniform(env.action_length)

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._routing


class GreedyLatencyPolicy(RoutingPolicy):
    """Chase the currently fastest path; uniform before any measurement."""

    def start(self, env: TrafficEnv) -> None:
        self._routing = policy_uniform(env.action_length)

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._routing

    def observe(self, result: StepResult) -> None:
        self._routing = policy_greedy_min_latency(result.latencies)


class SelfishAvPolicy(RoutingPolicy):
    """Uncontrolled autonomous vehicles: Hedge dynamics, like the humans.

    The routing starts uniform (or as given) and updates against each tick's
    measured latencies with its own learning-rate schedule.
    """

    def __init__(self, schedule: LearningSchedule | None = None, initial=None):
        self._schedule = schedule or LearningSchedule()
        self._initial = initial
        self._updates = 0

    def start(self, env: TrafficEnv) -> None:
        if self._initial is None:
            self._routing = policy_uniform(env.action_length)
        else:
            self._routing = validate_routing(
                np.asarray(self._initial, dtype=float), env.action_length, tol=1e-6
            )
        self._updates = 0

    def act(self, observation: np.ndarray) -> np.ndarray:
        return self._routing

    def observe(self, result: StepResult) -> None:
        rate = learning_rate(self._schedule, self._updates)
        self._updates += 1
        self._routing = hedge_update(self._routing, np.asarray(result.latencies), rate)


def policy_selfish_av(schedule: LearningSchedule | None = None, initial=None) -> SelfishAvPolicy:
    return SelfishAvPolicy(schedule=schedule, initial=initial)


def _as_policy(policy) -> RoutingPolicy:
    if isinstance(policy, RoutingPolicy):
        return policy
    return StaticPolicy(np.asarray(policy, dtype=float))


@dataclass
class EpisodeTrace:
    """Per-tick series from one episode, aligned by index (tick k = index+1)."""

    costs: list[float] = field(default_factory=list)
    proxy_costs: list[float] = field(default_factory=list)
    queue_human: list[float] = field(default_factory=list)
    queue_auto: list[float] = field(default_factory=list)
    latencies: list[tuple[float, ...]] = field(default_factory=list)
    routing_human: list[tuple[float, ...]] = field(default_factory=list)
    routing_auto: list[tuple[float, ...]] = field(default_factory=list)
    densities_human: list[tuple[tuple[float, ...], ...]] = field(default_factory=list)
    densities_auto: list[tuple[tuple[float, ...], ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.costs)


def run_episode(env: TrafficEnv, policy, seed: int | None = None) -> EpisodeTrace:
    """Reset the environment and run it to the end under the policy."""
    wrapped = _as_policy(policy)
    obs = env.reset(seed)
    wrapped.start(env)
    trace = EpisodeTrace()
    done = False
    while not done:
        mu_h = env.routing_human
        action = validate_routing(
            np.asarray(wrapped.act(obs), dtype=float), env.action_length, tol=1e-6
        )
        result = env.step(action)
        wrapped.observe(result)
        obs = result.observation
        done = result.done

        queue_h, queue_a = env.queue.totals()
        trace.costs.append(result.cost)
        trace.proxy_costs.append(result.proxy_cost)
        trace.queue_human.append(queue_h)
        trace.queue_auto.append(queue_a)
        trace.latencies.append(result.latencies)
        trace.routing_human.append(tuple(float(x) for x in mu_h))
        trace.routing_auto.append(tuple(float(x) for x in action))
        states = env.states
        trace.densities_human.append(
            tuple(tuple(float(x) for x in st.density_human) for st in states)
        )
        trace.densities_auto.append(
            tuple(tuple(float(x) for x in st.density_auto) for st in states)
        )
    return trace


def mean_stage_cost(trace: EpisodeTrace, burn_in: int = 0) -> float:
    """Average cost over the ticks after the first ``burn_in``."""
    if not 0 <= burn_in < len(trace):
        raise ValueError(f"burn-in {burn_in} outside episode of length {len(trace)}")
    return float(np.mean(trace.costs[burn_in:]))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    weights = np.exp(shifted)
    return weights / weights.sum()


@dataclass(frozen=True)
class StaticSearchResult:
    routing: tuple[float, ...]
    mean_cost: float
    history: tuple[float, ...]  # best mean cost after each iteration


def optimize_static_policy(
    scenario: Scenario,
    iterations: int = 30,
    population: int = 24,
    elites: int = 6,
    seed: int = 0,
    burn_in: int | None = None,
) -> StaticSearchResult:
    """Search for the best constant autonomous routing on a scenario.

    Cross-entropy method in logit space: sample routing vectors around a
    Gaussian, score each by episode-average stage cost after a burn-in, and
    refit the Gaussian to the elite samples.  Deterministic for a fixed seed
    (episodes always reset with the scenario's own seed).
    """
    if iterations < 1 or population < 2 or not 1 <= elites <= population:
        raise ValueError("need iterations >= 1 and 1 <= elites <= population (>= 2)")
    if burn_in is None:
        burn_in = scenario.episode_length // 4
    if not 0 <= burn_in < scenario.episode_length:
        raise ValueError("burn-in must leave at least one scored tick")
    env = TrafficEnv(scenario)
    num = env.action_length

    def score(routing: np.ndarray) -> float:
        env.reset()
        action = validate_routing(np.asarray(routing, dtype=float), num, tol=1e-6)
        total = 0.0
        for tick in range(scenario.episode_length):
            result = env.step(action)
            if tick >= burn_in:
                total += result.cost
        return total / (scenario.episode_length - burn_in)

    if num == 1:
        routing = np.ones(1)
        cost = score(routing)
        return StaticSearchResult((1.0,), cost, (cost,))

    rng = np.random.default_rng(seed)
    mean = np.zeros(num)
    sigma = np.ones(num)
    best_routing = policy_uniform(num)
    best_cost = score(best_routing)
    history = []
    for _ in range(iterations):
        logits = rng.normal(mean, sigma, size=(population, num))
        routings = np.apply_along_axis(_softmax, 1, logits)
        costs = np.array([score(routing) for routing in routings])
        order = np.argsort(costs)
        elite = logits[order[:elites]]
        mean = elite.mean(axis=0)
        sigma = np.maximum(elite.std(axis=0), 0.02)
        if costs[order[0]] < best_cost:
            best_cost = float(costs[order[0]])
            best_routing = routings[order[0]]
        history.append(best_cost)
    return StaticSearchResult(
        tuple(float(x) for x in best_routing), best_cost, tuple(history)
    )
