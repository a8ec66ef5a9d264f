"""Closed-loop network simulator packaged as an episodic control environment.

Each tick runs a fixed pipeline: demand joins the entrance queue, the queue
disburses onto the roads under the human and controlled routing vectors, all
roads advance one step, path latencies are measured and the human routing
takes its exponential-weights update, lane closures change, and finally the
stage cost (vehicles queued plus vehicles on the network) is recorded.  The
controller supplies the autonomous routing vector each tick and sees a flat
numeric observation.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass

import numpy as np

from parallelroads.choice import hedge_update, learning_rate, validate_routing
from parallelroads.ctm import (
    PathState,
    first_cell_supply,
    path_latency_estimate,
    step_path,
)
from parallelroads.queueing import VehicleQueue, disburse, enqueue_demand
from parallelroads.scenario import Scenario

__all__ = ["StepResult", "TrafficEnv", "load_ppo_defaults"]


@dataclass(frozen=True)
class StepResult:
    """Outcome of one environment tick."""

    observation: np.ndarray
    cost: float  # total vehicles queued plus on the network after the tick
    proxy_cost: float  # change in cost since the previous tick
    latencies: tuple[float, ...]
    done: bool


class TrafficEnv:
    """Episodic simulator for one scenario.

    The action is the routing distribution for autonomous vehicles; human
    routing evolves internally by the Hedge rule against measured latencies.
    All randomness (demand draws, random closures) comes from one seeded
    generator, so trajectories are reproducible bit for bit.
    """

    def __init__(self, scenario: Scenario):
        self._scenario = scenario
        self._paths = scenario.network.paths
        self._obs_len = (
            2 * sum(p.num_cells for p in self._paths)
            + 2
            + sum(c.lanes for p in self._paths for c in p.cells)
        )
        self._states: list[PathState] | None = None
        self._rng: np.random.Generator | None = None
        self._queue = VehicleQueue()
        self._mu_h = np.full(len(self._paths), 1.0 / len(self._paths))
        self._tick = 0
        self._updates = 0
        self._last_cost = 0.0
        self._entered = [0.0, 0.0]
        self._exited = [0.0, 0.0]
        self._random_closures: list[tuple[int, int, int, int]] = []

    @property
    def scenario(self) -> Scenario:
        return self._scenario

    @property
    def observation_length(self) -> int:
        return self._obs_len

    @property
    def action_length(self) -> int:
        return len(self._paths)

    @property
    def episode_length(self) -> int:
        return self._scenario.episode_length

    @property
    def time(self) -> int:
        """Number of completed ticks since reset."""
        return self._tick

    @property
    def done(self) -> bool:
        return self._tick >= self._scenario.episode_length

    @property
    def routing_human(self) -> np.ndarray:
        return self._mu_h.copy()

    @property
    def queue(self) -> VehicleQueue:
        return self._queue

    @property
    def states(self) -> tuple[PathState, ...]:
        """Copies of the current per-path states (safe to inspect)."""
        self._require_reset()
        return tuple(state.copy() for state in self._states)

    @property
    def vehicles_entered(self) -> float:
        return self._entered[0] + self._entered[1]

    @property
    def vehicles_exited(self) -> float:
        return self._exited[0] + self._exited[1]

    @property
    def vehicles_entered_by_class(self) -> tuple[float, float]:
        """Cumulative (human, autonomous) demand admitted to the queue."""
        return tuple(self._entered)

    @property
    def vehicles_exited_by_class(self) -> tuple[float, float]:
        """Cumulative (human, autonomous) flow that left the network."""
        return tuple(self._exited)

    def _require_reset(self) -> None:
        if self._states is None:
            raise RuntimeError("environment not reset; call reset() first")

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a fresh episode; omitted seed falls back to the scenario's."""
        self._rng = np.random.default_rng(self._scenario.seed if seed is None else seed)
        states, routing = self._scenario.build_initial_states()
        self._states = states
        self._mu_h = np.asarray(routing, dtype=float)
        self._queue = VehicleQueue()
        self._tick = 0
        self._updates = 0
        self._last_cost = 0.0
        self._entered = [0.0, 0.0]
        self._exited = [0.0, 0.0]
        self._random_closures = []
        self._refresh_closures(next_tick=1)
        return self._observation()

    def step(self, action) -> StepResult:
        """Advance one tick under the given autonomous routing vector."""
        self._require_reset()
        if self.done:
            raise RuntimeError("episode finished; call reset() to start another")
        mu_a = validate_routing(np.asarray(action, dtype=float), len(self._paths), tol=1e-6)

        tick = self._tick + 1
        demand_h, demand_a = self._scenario.demand.sample(self._rng)
        self._queue = enqueue_demand(self._queue, demand_h, demand_a)
        self._entered[0] += demand_h
        self._entered[1] += demand_a

        supplies = np.array(
            [first_cell_supply(spec, st) for spec, st in zip(self._paths, self._states)]
        )
        flows_h, flows_a, self._queue = disburse(self._queue, supplies, self._mu_h, mu_a)

        for p, spec in enumerate(self._paths):
            self._states[p], (exit_h, exit_a) = step_path(
                spec, self._states[p], flows_h[p], flows_a[p]
            )
            self._exited[0] += exit_h
            self._exited[1] += exit_a

        latencies = tuple(
            path_latency_estimate(spec, st, self._scenario.blocked_cell_latency)
            for spec, st in zip(self._paths, self._states)
        )
        rate = learning_rate(self._scenario.schedule, self._updates)
        self._updates += 1
        self._mu_h = hedge_update(self._mu_h, np.asarray(latencies), rate)

        self._refresh_closures(next_tick=tick + 1)

        cost = self.stage_cost()
        proxy = cost - self._last_cost
        self._last_cost = cost
        self._tick = tick
        return StepResult(
            observation=self._observation(),
            cost=cost,
            proxy_cost=proxy,
            latencies=latencies,
            done=self.done,
        )

    def stage_cost(self) -> float:
        """Vehicles waiting in the queue plus vehicles on all roads."""
        self._require_reset()
        return self._queue.total_vehicles() + sum(
            state.total_vehicles() for state in self._states
        )

    # -- lane closures ------------------------------------------------------

    def _refresh_closures(self, next_tick: int) -> None:
        """Set lane flags for the coming tick and maybe spawn a random closure.

        Scheduled events close their lane for ticks [start, start+duration).
        Random closures are drawn here (after this tick's demand, keeping the
        stream order fixed) and never take a cell's last open lane.
        """
        accidents = self._scenario.accidents
        for p, state in enumerate(self._states):
            for flags in state.closed:
                flags[:] = [False] * len(flags)
            for event in accidents.events:
                if event.path == p and event.active(next_tick):
                    state.closed[event.cell][event.lane] = True
        self._random_closures = [
            entry for entry in self._random_closures if next_tick <= entry[3]
        ]
        for path, cell, lane, _ in self._random_closures:
            self._states[path].closed[cell][lane] = True

        if accidents.rate > 0.0 and next_tick <= self._scenario.episode_length:
            if self._rng.uniform() < accidents.rate:
                eligible = [
                    (p, c, lane)
                    for p, state in enumerate(self._states)
                    for c, flags in enumerate(state.closed)
                    if len(flags) - sum(flags) >= 2
                    for lane, shut in enumerate(flags)
                    if not shut
                ]
                if eligible:
                    path, cell, lane = eligible[int(self._rng.integers(len(eligible)))]
                    lo, hi = accidents.duration_range
                    duration = int(self._rng.integers(lo, hi + 1))
                    self._random_closures.append(
                        (path, cell, lane, next_tick + duration - 1)
                    )
                    self._states[path].closed[cell][lane] = True

    # -- observation --------------------------------------------------------

    def _observation(self) -> np.ndarray:
        parts = [state.density_human for state in self._states]
        parts += [state.density_auto for state in self._states]
        queue_h, queue_a = self._queue.totals()
        parts.append(np.array([queue_h, queue_a]))
        for state in self._states:
            for flags in state.closed:
                parts.append(np.array(flags, dtype=float))
        obs = np.concatenate(parts)
        assert len(obs) == self._obs_len
        return obs


def load_ppo_defaults() -> dict:
    """Advisory PPO hyperparameters for external trainers (full-scale values)."""
    text = (
        importlib.resources.files("parallelroads")
        .joinpath("data/ppo_defaults.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)
