"""End-to-end guarantees of the toolkit, one test per contracted behavior.

Run ``pytest tests/test_acceptance.py -v`` to get a single verdict line per
claim.  Tolerances and instance counts here are the package's compatibility
contract; loosening them is an API change, not a test fix.
"""

import time

import numpy as np
import pytest

from parallelroads.choice import LearningSchedule
from parallelroads.ctm import (
    PathSpec,
    PathState,
    cell_autonomy,
    first_cell_supply,
    fundamental_diagram,
    path_latency_estimate,
    step_path,
)
from parallelroads.env import TrafficEnv
from parallelroads.equilibrium import (
    InfeasibleDemandError,
    NetworkSpec,
    best_controlled_equilibrium,
    best_selfish_equilibrium,
    bottleneck_capacity,
    brute_force_equilibrium,
    congested_density,
    equilibrium_state,
    road_equilibrium_latency,
)
from parallelroads.policies import (
    SelfishAvPolicy,
    mean_stage_cost,
    optimize_static_policy,
    run_episode,
)
from parallelroads.scenario import AccidentProcess, DemandProcess, Scenario

# ---------------------------------------------------------------------------
# helpers


def congested_cell_set(spec: PathSpec, state: PathState) -> set[int]:
    """Cells whose density sits above the critical density for their mix."""
    out = set()
    for i, params in enumerate(spec.cells):
        cell = state.cell(i)
        critical, _, _ = fundamental_diagram(params, cell.autonomy, cell.open_lanes)
        if cell.total > critical + 1e-6:
            out.add(i)
    return out


def step_with_queue_cap(spec, state, demand_human, demand_auto):
    """One step admitting as much of the demand as the entrance can take."""
    demand = demand_human + demand_auto
    supply = first_cell_supply(spec, state)
    scale = min(1.0, supply / demand) if demand > 0.0 else 0.0
    new_state, _ = step_path(spec, state, demand_human * scale, demand_auto * scale)
    return new_state


def random_paths(rng: np.random.Generator, count: int) -> tuple[PathSpec, ...] | None:
    """Draw one road set with strictly separated free-flow latencies."""
    paths = []
    for _ in range(count):
        upstream = int(rng.integers(2, 5))
        bottleneck = int(rng.integers(1, 4))
        lanes = int(rng.integers(2, 5))
        drop_to = int(rng.integers(1, lanes))
        speed = float(rng.uniform(0.5, 1.0))
        headway_h = float(rng.uniform(0.8, 1.5))
        headway_a = float(rng.uniform(0.3, 1.0)) * headway_h
        jam_floor = (lanes / headway_a) * (1.0 + speed)
        jam = jam_floor * float(rng.uniform(1.05, 1.6))
        paths.append(
            PathSpec(upstream, bottleneck, lanes, drop_to, speed, headway_h, headway_a, jam)
        )
    paths.sort(key=lambda p: p.free_flow_latency)
    latencies = [p.free_flow_latency for p in paths]
    if any(b - a <= 0.05 for a, b in zip(latencies, latencies[1:])):
        return None
    return tuple(paths)


def random_instance(rng: np.random.Generator, count: int):
    """A random network plus a demand pair that a selfish split can serve."""
    while True:
        paths = random_paths(rng, count)
        if paths is None:
            continue
        net = NetworkSpec(paths)
        human = float(rng.uniform(0.1, 0.6)) * sum(
            bottleneck_capacity(p, 0.0) for p in paths
        )
        auto = float(rng.uniform(0.05, 0.5)) * sum(
            bottleneck_capacity(p, 1.0) for p in paths
        )
        try:
            best_selfish_equilibrium(net, human, auto)
        except InfeasibleDemandError:
            continue
        return net, human, auto


# ---------------------------------------------------------------------------
# the contract


def test_stationary_congestion_profiles_are_step_fixed_points(canonical_path):
    started = time.perf_counter()
    for autonomy in (0.0, 0.5, 1.0):
        capacity = bottleneck_capacity(canonical_path, autonomy)
        human, auto = (1.0 - autonomy) * capacity, autonomy * capacity
        for congested_len in range(4):
            state = equilibrium_state(canonical_path, human, auto, congested_len)
            reference_h = state.density_human.copy()
            reference_a = state.density_auto.copy()
            for _ in range(1000):
                state, _ = step_path(canonical_path, state, human, auto)
            drift = max(
                np.abs(state.density_human - reference_h).max(),
                np.abs(state.density_auto - reference_a).max(),
            )
            assert drift <= 1e-9, (autonomy, congested_len, drift)
            measured = path_latency_estimate(canonical_path, state)
            predicted = road_equilibrium_latency(canonical_path, autonomy, congested_len)
            assert abs(measured - predicted) <= 1e-9, (autonomy, congested_len)
    # spot-pin two hand-derived latencies so the formula cannot drift silently
    assert road_equilibrium_latency(canonical_path, 0.0, 2) == pytest.approx(13.0)
    assert road_equilibrium_latency(canonical_path, 1.0, 3) == pytest.approx(11.0)
    assert time.perf_counter() - started < 1.0


def test_mixed_inflow_drives_every_cell_to_the_inflow_autonomy(canonical_path):
    capacity = bottleneck_capacity(canonical_path, 0.4)
    assert capacity == pytest.approx(1.25)
    human, auto = 0.6 * capacity, 0.4 * capacity
    state = PathState.empty(canonical_path)
    for _ in range(5000):
        state, _ = step_path(canonical_path, state, human, auto)
    for i in range(canonical_path.num_cells):
        mix = cell_autonomy(state.density_human[i], state.density_auto[i])
        assert abs(mix - 0.4) <= 1e-6, (i, mix)


def test_congestion_drains_below_capacity_and_only_suffixes_persist_at_capacity(
    canonical_path,
):
    rng = np.random.default_rng(20260823)
    upstream = set(range(canonical_path.upstream_cells))

    # (a) at 90% of bottleneck capacity any starting state ends uncongested,
    # with every cell carrying the through-flow at free-flow speed.
    capacity = bottleneck_capacity(canonical_path, 0.4)
    human, auto = 0.6 * 0.9 * capacity, 0.4 * 0.9 * capacity
    jam_eff = np.array([8.0, 8.0, 8.0, 4.0, 4.0])
    for _ in range(20):
        total = rng.uniform(0.0, 0.9) * jam_eff * rng.uniform(0.2, 1.0, 5)
        auto_share = rng.uniform(0.0, 1.0, 5)
        state = PathState.from_densities(
            canonical_path, total * (1.0 - auto_share), total * auto_share
        )
        for _ in range(3000):
            state = step_with_queue_cap(canonical_path, state, human, auto)
        assert congested_cell_set(canonical_path, state) == set()
        densities = state.density_human + state.density_auto
        assert np.abs(densities - (human + auto)).max() <= 1e-6

    # (b) at exact capacity every suffix profile is self-sustaining.
    capacity = bottleneck_capacity(canonical_path, 0.4)
    human, auto = 0.6 * capacity, 0.4 * capacity
    for congested_len in range(4):
        state = equilibrium_state(canonical_path, human, auto, congested_len)
        expected = set(range(3 - congested_len, 3))
        assert congested_cell_set(canonical_path, state) & upstream == expected
        for _ in range(500):
            state, _ = step_path(canonical_path, state, human, auto)
        assert congested_cell_set(canonical_path, state) & upstream == expected

    # (c) no other congested set survives: 100 perturbed non-suffix starts
    # all land on a (possibly empty) suffix, never back on themselves.
    non_suffix = [frozenset(s) for s in ({0}, {1}, {0, 1}, {0, 2})]
    suffixes = {frozenset(range(3 - k, 3)) for k in range(4)}
    trials = 0
    while trials < 100:
        chosen = non_suffix[int(rng.integers(len(non_suffix)))]
        mix = float(rng.uniform(0.0, 1.0))
        capacity = bottleneck_capacity(canonical_path, mix)
        human, auto = (1.0 - mix) * capacity, mix * capacity
        free_density = capacity / canonical_path.free_flow_speed
        dense = congested_density(canonical_path, mix)
        total = np.array(
            [dense if i in chosen else free_density for i in range(3)]
            + [free_density, free_density]
        )
        total *= 1.0 + 0.01 * rng.uniform(-1.0, 1.0, 5)
        state = PathState.from_densities(canonical_path, total * (1.0 - mix), total * mix)
        if congested_cell_set(canonical_path, state) & upstream != chosen:
            continue  # the perturbation blurred the profile; redraw
        trials += 1
        for _ in range(600):
            state = step_with_queue_cap(canonical_path, state, human, auto)
        final = frozenset(congested_cell_set(canonical_path, state) & upstream)
        assert final != chosen, (chosen, mix)
        assert final in suffixes, (chosen, final, mix)


def test_lp_solvers_match_grid_oracle_on_random_networks():
    started = time.perf_counter()
    rng = np.random.default_rng(20260823)
    worst_gap = 0.0
    for count, instances in ((2, 100), (3, 20)):
        for _ in range(instances):
            net, human, auto = random_instance(rng, count)
            selfish = best_selfish_equilibrium(net, human, auto)
            controlled = best_controlled_equilibrium(net, human, auto)
            assert controlled.total_latency <= selfish.total_latency + 1e-9

            oracle_selfish = brute_force_equilibrium(
                net, human, auto, resolution=1e-3, mode="selfish"
            )
            oracle_controlled = brute_force_equilibrium(
                net, human, auto, resolution=1e-3, mode="controlled"
            )
            gap_s = abs(selfish.total_latency - oracle_selfish.total_latency)
            gap_c = abs(controlled.total_latency - oracle_controlled.total_latency)
            worst_gap = max(worst_gap, gap_s, gap_c)
            assert gap_s <= 5e-3, (net, human, auto)
            assert gap_c <= 5e-3, (net, human, auto)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s (worst gap {worst_gap:.2e})"


def test_human_route_choice_converges_in_free_flow():
    # Two roads, humans only, demand below even the slow road's capacity:
    # the exponential-weights update settles all mass on the faster road.
    network = NetworkSpec(
        (PathSpec(3, 2, 2, 1, label="fast"), PathSpec(3, 3, 2, 1, label="slow"))
    )
    scenario = Scenario(
        network=network,
        demand=DemandProcess.constant(0.95, 0.0),
        episode_length=1000,
        schedule=LearningSchedule(kind="constant", base_rate=0.1),
        seed=0,
    )
    env = TrafficEnv(scenario)
    env.reset()
    previous = env.routing_human
    deltas, latencies = [], None
    while not env.done:
        result = env.step([0.5, 0.5])
        current = env.routing_human
        deltas.append(np.abs(current - previous).max())
        previous = current
        latencies = result.latencies
    assert max(deltas[-100:]) <= 1e-6
    used = [p for p, share in enumerate(previous) if share > 1e-3]
    assert used == [0]
    used_latencies = [latencies[p] for p in used]
    assert max(used_latencies) <= 1.02 * min(used_latencies)
    assert used_latencies[0] == pytest.approx(5.0, rel=0.02)


def test_conservation_determinism_and_cost_telescoping():
    rng = np.random.default_rng(606)

    def build_scenario(index: int) -> Scenario:
        while True:
            paths = random_paths(rng, 2)
            if paths is not None:
                break
        capacity_h = sum(bottleneck_capacity(p, 0.0) for p in paths)
        capacity_a = sum(bottleneck_capacity(p, 1.0) for p in paths)
        if index % 2 == 0:
            demand = DemandProcess.constant(
                float(rng.uniform(0.1, 0.5)) * capacity_h,
                float(rng.uniform(0.05, 0.4)) * capacity_a,
            )
        else:
            human = np.sort(rng.uniform(0.05, 0.55, 2)) * capacity_h
            auto = np.sort(rng.uniform(0.0, 0.45, 2)) * capacity_a
            demand = DemandProcess(tuple(human), tuple(auto))
        rate = float(rng.choice([0.0, 0.1, 0.3]))
        return Scenario(
            network=NetworkSpec(paths),
            demand=demand,
            episode_length=1000,
            accidents=AccidentProcess(rate=rate, duration_range=(2, 8)),
            seed=int(rng.integers(1, 10_000)),
        )

    for index in range(10):
        scenario = build_scenario(index)
        actions = rng.dirichlet(np.ones(2), size=scenario.episode_length)

        def rollout(check_conservation: bool):
            env = TrafficEnv(scenario)
            env.reset()
            costs, running = [], 0.0
            observations = []
            for k in range(scenario.episode_length):
                result = env.step(actions[k])
                costs.append(result.cost)
                running += result.proxy_cost
                observations.append(result.observation)
                if check_conservation:
                    queue_h, queue_a = env.queue.totals()
                    standing_h = queue_h + sum(
                        float(s.density_human.sum()) for s in env.states
                    )
                    standing_a = queue_a + sum(
                        float(s.density_auto.sum()) for s in env.states
                    )
                    entered = env.vehicles_entered_by_class
                    exited = env.vehicles_exited_by_class
                    assert abs(entered[0] - exited[0] - standing_h) <= 1e-9, (index, k)
                    assert abs(entered[1] - exited[1] - standing_a) <= 1e-9, (index, k)
            return np.array(costs), np.stack(observations), running

        costs_a, obs_a, proxy_sum = rollout(check_conservation=True)
        costs_b, obs_b, _ = rollout(check_conservation=False)
        assert np.array_equal(costs_a, costs_b), index
        assert np.array_equal(obs_a, obs_b), index
        assert proxy_sum == costs_a[-1], index  # the deltas telescope exactly


def test_static_search_reaches_controlled_optimum_and_beats_selfish_autos(desk_network):
    scenario = Scenario(
        network=desk_network,
        demand=DemandProcess.constant(0.9, 0.4),
        episode_length=300,
        schedule=LearningSchedule(kind="constant", base_rate=0.1),
        seed=0,
    )
    target = best_controlled_equilibrium(desk_network, 0.9, 0.4).total_latency
    assert target == pytest.approx(7.5, abs=1e-9)

    search = optimize_static_policy(
        scenario, iterations=20, population=16, elites=4, seed=0
    )
    assert abs(search.mean_cost - target) <= 0.02 * target

    baseline_trace = run_episode(TrafficEnv(scenario), SelfishAvPolicy())
    baseline = mean_stage_cost(baseline_trace, burn_in=scenario.episode_length // 4)
    assert search.mean_cost < baseline
