"""Routing equilibria on a network of parallel bottlenecked roads.

Characterizes the stationary regimes of a single road (which upstream cells
run congested and the travel time that implies), then computes demand
routings that are best among user equilibria in two settings: every vehicle
routes selfishly, or a planner routes the autonomous vehicles while humans
stay selfish.  Both solvers scan candidate "last selfish roads" and reduce
each candidate to a small linear program; an independent grid-search oracle
recomputes the optimum for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from parallelroads.ctm import PathSpec, PathState
from parallelroads.linprog import solve_lp

__all__ = [
    "EquilibriumSolution",
    "InfeasibleDemandError",
    "NetworkSpec",
    "best_controlled_equilibrium",
    "best_selfish_equilibrium",
    "bottleneck_capacity",
    "brute_force_equilibrium",
    "congested_cell_latency",
    "congested_density",
    "congestion_latency_increment",
    "enumerate_congestion_profiles",
    "equilibrium_state",
    "road_equilibrium_latency",
]

_TOL = 1e-9
_GRID_TOL = 1e-12


class InfeasibleDemandError(Exception):
    """The demand cannot be served by any admissible equilibrium routing."""


def _space_per_vehicle(path: PathSpec, autonomy: float) -> float:
    """Average road space one vehicle claims at the given autonomy share."""
    if not 0.0 <= autonomy <= 1.0:
        raise ValueError(f"autonomy must lie in [0, 1], got {autonomy}")
    return autonomy * path.headway_auto + (1.0 - autonomy) * path.headway_human


def bottleneck_capacity(path: PathSpec, autonomy: float) -> float:
    """Maximum sustained throughput of the road at an autonomy share."""
    return path.free_flow_speed * path.bottleneck_lanes / _space_per_vehicle(path, autonomy)


def congestion_latency_increment(path: PathSpec, autonomy: float) -> float:
    """Extra traversal time a congested upstream cell adds over free flow."""
    r = path.lane_ratio
    if not 0.0 < r < 1.0:
        raise ValueError(f"lane ratio must lie strictly inside (0, 1), got {r}")
    space = _space_per_vehicle(path, autonomy)
    return (
        (1.0 - r)
        * path.jam_density
        * space
        / (r * path.free_flow_speed * path.upstream_lanes)
    )


def congested_cell_latency(path: PathSpec, autonomy: float) -> float:
    """Traversal time of one congested upstream cell at steady state."""
    return 1.0 / path.free_flow_speed + congestion_latency_increment(path, autonomy)


def congested_density(path: PathSpec, autonomy: float) -> float:
    """Vehicle count a congested upstream cell settles at."""
    r = path.lane_ratio
    critical = path.upstream_lanes / _space_per_vehicle(path, autonomy)
    return (1.0 - r) * path.jam_density + r * critical


def road_equilibrium_latency(path: PathSpec, autonomy: float, congested_len: float) -> float:
    """Stationary road latency when ``congested_len`` upstream cells run congested.

    ``congested_len`` may be fractional (a boundary cell partway between the
    free-flow and congested densities) but cannot exceed the upstream segment.
    """
    if not 0.0 <= congested_len <= path.upstream_cells:
        raise ValueError(
            f"congested length {congested_len} outside [0, {path.upstream_cells}]"
        )
    return path.free_flow_latency + congested_len * congestion_latency_increment(path, autonomy)


def enumerate_congestion_profiles(path: PathSpec) -> tuple[frozenset[int], ...]:
    """Stationary congested-cell sets: the suffixes of the upstream segment.

    Cell indices are 0-based.  The empty set (pure free flow) through the
    fully congested upstream segment are all sustainable at bottleneck
    capacity; no other set survives.
    """
    m = path.upstream_cells
    return tuple(frozenset(range(m - k, m)) for k in range(m + 1))


def equilibrium_state(
    path: PathSpec,
    demand_human: float,
    demand_auto: float,
    congested_len: int,
    *,
    tol: float = _TOL,
) -> PathState:
    """Construct the stationary state for a demand and congested length.

    With ``congested_len > 0`` the demand must equal the bottleneck capacity
    at the demand's autonomy mix; the last ``congested_len`` upstream cells
    sit at the congested density and every other cell carries the flow at
    free-flow speed.  The result is a fixed point of ``ctm.step_path`` under
    constant inflow equal to the demand.
    """
    if demand_human < 0.0 or demand_auto < 0.0:
        raise ValueError("demand cannot be negative")
    if int(congested_len) != congested_len or not 0 <= congested_len <= path.upstream_cells:
        raise ValueError(
            f"congested length must be an integer in [0, {path.upstream_cells}]"
        )
    congested_len = int(congested_len)
    flow = demand_human + demand_auto
    if flow == 0.0:
        if congested_len > 0:
            raise ValueError("an empty road cannot hold congested cells")
        return PathState.empty(path)

    autonomy = demand_auto / flow
    capacity = bottleneck_capacity(path, autonomy)
    if congested_len > 0:
        if abs(flow - capacity) > tol:
            raise ValueError(
                f"congestion persists only at bottleneck capacity: demand {flow:.12g} "
                f"vs capacity {capacity:.12g}"
            )
    elif flow > capacity + tol:
        raise ValueError(f"demand {flow:.12g} exceeds bottleneck capacity {capacity:.12g}")

    free_density = flow / path.free_flow_speed
    total = np.full(path.num_cells, free_density)
    if congested_len > 0:
        dense = congested_density(path, autonomy)
        total[path.upstream_cells - congested_len : path.upstream_cells] = dense
    auto = autonomy * total
    human = total - auto
    return PathState.from_densities(path, human, auto)


@dataclass(frozen=True)
class NetworkSpec:
    """Parallel roads ordered by strictly increasing free-flow latency."""

    paths: tuple[PathSpec, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.paths, tuple):
            object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("network needs at least one path")
        lat = [p.free_flow_latency for p in self.paths]
        for a, b in zip(lat, lat[1:]):
            if not a < b:
                raise ValueError(
                    f"free-flow latencies must strictly increase, got {lat}"
                )

    @property
    def num_paths(self) -> int:
        return len(self.paths)

    def free_flow_latencies(self) -> np.ndarray:
        return np.array([p.free_flow_latency for p in self.paths])


@dataclass(frozen=True)
class EquilibriumSolution:
    """A best-equilibrium routing plus the road regimes that realize it."""

    mode: str  # "selfish" | "controlled"
    flows_human: tuple[float, ...]
    flows_auto: tuple[float, ...]
    congested_lengths: tuple[float, ...]
    free_flow_road: int  # 0-based index of the last road open to selfish users
    common_latency: float  # latency on every road up to free_flow_road
    road_latencies: tuple[float, ...]
    autonomy: tuple[float, ...]
    total_latency: float

    @property
    def num_paths(self) -> int:
        return len(self.flows_human)

    def routing_human(self) -> np.ndarray:
        """Human flows as a routing vector (uniform when there are none)."""
        flows = np.asarray(self.flows_human)
        total = flows.sum()
        if total <= 0.0:
            return np.full(len(flows), 1.0 / len(flows))
        return flows / total

    def routing_auto(self) -> np.ndarray:
        """Autonomous flows as a routing vector (uniform when there are none)."""
        flows = np.asarray(self.flows_auto)
        total = flows.sum()
        if total <= 0.0:
            return np.full(len(flows), 1.0 / len(flows))
        return flows / total

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "flows_human": list(self.flows_human),
            "flows_auto": list(self.flows_auto),
            "congested_lengths": list(self.congested_lengths),
            "free_flow_road": self.free_flow_road,
            "common_latency": self.common_latency,
            "road_latencies": list(self.road_latencies),
            "autonomy": list(self.autonomy),
            "total_latency": self.total_latency,
        }


def _assemble_solution(
    net: NetworkSpec,
    mode: str,
    pp: int,
    flows_h: np.ndarray,
    flows_a: np.ndarray,
) -> EquilibriumSolution:
    """Fill in regimes and latencies for chosen per-road flows."""
    paths = net.paths
    ff = net.free_flow_latencies()
    ell_star = float(ff[pp])
    lengths = []
    lats = []
    alphas = []
    for p, path in enumerate(paths):
        total = flows_h[p] + flows_a[p]
        if total > 0.0:
            alpha = flows_a[p] / total
        else:
            alpha = 1.0 if mode == "controlled" else 0.0
        if p < pp:
            gamma = (ell_star - ff[p]) * total / (
                (1.0 - paths[p].lane_ratio) * paths[p].jam_density
            )
            # The LP keeps gamma within the upstream segment up to solver tolerance.
            gamma = min(max(float(gamma), 0.0), float(path.upstream_cells))
        else:
            gamma = 0.0
        lengths.append(gamma)
        alphas.append(float(alpha))
        lats.append(road_equilibrium_latency(path, alpha, gamma))
    total_latency = float(
        sum((flows_h[p] + flows_a[p]) * lats[p] for p in range(len(paths)))
    )
    return EquilibriumSolution(
        mode=mode,
        flows_human=tuple(float(x) for x in flows_h),
        flows_auto=tuple(float(x) for x in flows_a),
        congested_lengths=tuple(lengths),
        free_flow_road=pp,
        common_latency=ell_star,
        road_latencies=tuple(lats),
        autonomy=tuple(alphas),
        total_latency=total_latency,
    )


def _candidate_lp(
    net: NetworkSpec, demand_human: float, demand_auto: float, pp: int, controlled: bool
) -> EquilibriumSolution | None:
    """Solve the routing program for one candidate last-selfish road.

    Roads before ``pp`` run congested with their latency pinned to road
    ``pp``'s free-flow latency; road ``pp`` stays in free flow.  In the
    controlled setting autonomous flow may spill onto later roads, each in
    free flow at up to its full-autonomy capacity, and the objective charges
    that spill its extra latency over the common one, so the LP minimizes
    total latency within the candidate class.
    """
    paths = net.paths
    num = net.num_paths
    ff = net.free_flow_latencies()
    ell_star = float(ff[pp])

    n_h = pp + 1  # human flow variables: roads 0..pp
    n_a = num if controlled else pp + 1  # autonomous flow variables
    nv = n_h + n_a

    eq_rows: list[np.ndarray] = []
    eq_rhs: list[float] = []
    ub_rows: list[np.ndarray] = []
    ub_rhs: list[float] = []

    row = np.zeros(nv)
    row[:n_h] = 1.0
    eq_rows.append(row)
    eq_rhs.append(demand_human)
    row = np.zeros(nv)
    row[n_h:] = 1.0
    eq_rows.append(row)
    eq_rhs.append(demand_auto)

    for p in range(pp):
        path = paths[p]
        # Congested roads run exactly at their mix-dependent capacity, which
        # is linear in the class flows through the per-class road space.
        row = np.zeros(nv)
        row[p] = path.headway_human
        row[n_h + p] = path.headway_auto
        eq_rows.append(row)
        eq_rhs.append(path.free_flow_speed * path.bottleneck_lanes)
        # The congested stretch matching the latency gap must fit upstream.
        delta = ell_star - float(ff[p])
        cap_flow = (
            path.upstream_cells * (1.0 - path.lane_ratio) * path.jam_density / delta
        )
        row = np.zeros(nv)
        row[p] = 1.0
        row[n_h + p] = 1.0
        ub_rows.append(row)
        ub_rhs.append(cap_flow)

    # Road pp must hold its share in free flow.
    path = paths[pp]
    row = np.zeros(nv)
    row[pp] = path.headway_human
    row[n_h + pp] = path.headway_auto
    ub_rows.append(row)
    ub_rhs.append(path.free_flow_speed * path.bottleneck_lanes)

    cost = np.zeros(nv)
    if controlled:
        for q in range(pp + 1, num):
            row = np.zeros(nv)
            row[n_h + q] = 1.0
            ub_rows.append(row)
            ub_rhs.append(bottleneck_capacity(paths[q], 1.0))
            # Spill latency above the common one; minimizing this minimizes
            # the candidate's total latency since everything else rides at it.
            cost[n_h + q] = float(ff[q]) - ell_star

    result = solve_lp(cost, np.vstack(eq_rows), eq_rhs, np.vstack(ub_rows), ub_rhs)
    if not result.ok:
        return None

    flows_h = np.zeros(num)
    flows_a = np.zeros(num)
    flows_h[: pp + 1] = result.x[:n_h]
    if controlled:
        flows_a[:] = result.x[n_h:]
    else:
        flows_a[: pp + 1] = result.x[n_h:]
    return _assemble_solution(net, "controlled" if controlled else "selfish", pp, flows_h, flows_a)


def best_selfish_equilibrium(
    net: NetworkSpec, demand_human: float, demand_auto: float
) -> EquilibriumSolution:
    """Best equilibrium when every vehicle routes selfishly.

    Scans candidate last roads in order; the first feasible candidate gives
    the smallest common latency and hence the least total latency, since all
    demand experiences that common value.
    """
    _check_demand(demand_human, demand_auto)
    for pp in range(net.num_paths):
        solution = _candidate_lp(net, demand_human, demand_auto, pp, controlled=False)
        if solution is not None:
            return solution
    raise InfeasibleDemandError(
        f"demand ({demand_human}, {demand_auto}) exceeds what selfish routing can serve"
    )


def best_controlled_equilibrium(
    net: NetworkSpec, demand_human: float, demand_auto: float
) -> EquilibriumSolution:
    """Best equilibrium when a planner routes the autonomous vehicles.

    Humans still equalize latency across the roads they use; autonomous flow
    may additionally run on later roads in free flow.  Every candidate last
    selfish road is solved and the lowest total latency wins, ties toward
    the earlier road.
    """
    _check_demand(demand_human, demand_auto)
    best: EquilibriumSolution | None = None
    for pp in range(net.num_paths):
        solution = _candidate_lp(net, demand_human, demand_auto, pp, controlled=True)
        if solution is None:
            continue
        if best is None or solution.total_latency < best.total_latency - _TOL:
            best = solution
    if best is None:
        raise InfeasibleDemandError(
            f"demand ({demand_human}, {demand_auto}) exceeds network capacity"
        )
    return best


def _check_demand(demand_human: float, demand_auto: float) -> None:
    if demand_human < 0.0 or demand_auto < 0.0:
        raise ValueError("demand cannot be negative")


# ---------------------------------------------------------------------------
# Grid-search oracle


def brute_force_equilibrium(
    net: NetworkSpec,
    demand_human: float,
    demand_auto: float,
    resolution: float = 1e-3,
    mode: str = "selfish",
) -> EquilibriumSolution:
    """Grid-search oracle for the best equilibrium, independent of the LPs.

    For each candidate last selfish road, the traffic mix on every congested
    road is gridded along its capacity segment; the congested stretch is then
    forced by latency matching, leftovers go to the candidate road, and (in
    controlled mode) surplus autonomous flow fills later roads cheapest
    first.  Only assignments meeting every equilibrium condition exactly at
    the grid point are kept, and the best-scoring region is re-gridded twice
    at ten-fold finer steps so the returned total is accurate well below the
    nominal resolution.
    """
    if mode not in ("selfish", "controlled"):
        raise ValueError(f"unknown mode {mode!r}")
    if net.num_paths > 3:
        raise ValueError("oracle is for desk-scale networks (at most 3 paths)")
    if not 0.0 < resolution <= 0.1:
        raise ValueError("resolution must lie in (0, 0.1]")
    _check_demand(demand_human, demand_auto)

    best: EquilibriumSolution | None = None
    for pp in range(net.num_paths):
        candidate = _grid_candidate(net, demand_human, demand_auto, pp, resolution, mode)
        if candidate is None:
            continue
        if mode == "selfish":
            return candidate  # smallest feasible pp carries the least latency
        if best is None or candidate.total_latency < best.total_latency - _GRID_TOL:
            best = candidate
    if best is None:
        raise InfeasibleDemandError(
            f"demand ({demand_human}, {demand_auto}) unservable at any candidate road"
        )
    return best


def _grid_candidate(
    net: NetworkSpec,
    demand_human: float,
    demand_auto: float,
    pp: int,
    resolution: float,
    mode: str,
) -> EquilibriumSolution | None:
    paths = net.paths
    ncong = pp

    def evaluate(points: np.ndarray):
        """Score a (G, ncong) array of autonomy shares on the congested roads.

        Returns (feasible mask, total latency, constraint violation, flows).
        """
        g = points.shape[0]
        fh = np.zeros((g, net.num_paths))
        fa = np.zeros((g, net.num_paths))
        violation = np.zeros(g)
        ff = net.free_flow_latencies()
        ell_star = float(ff[pp])
        for p in range(ncong):
            path = paths[p]
            share = points[:, p]
            space = share * path.headway_auto + (1.0 - share) * path.headway_human
            flow = path.free_flow_speed * path.bottleneck_lanes / space
            fa[:, p] = share * flow
            fh[:, p] = flow - fa[:, p]
            gamma = (ell_star - float(ff[p])) * flow / (
                (1.0 - path.lane_ratio) * path.jam_density
            )
            # Congested stretch longer than the upstream segment: infeasible.
            excess = gamma - path.upstream_cells
            violation += np.maximum(0.0, excess) * (
                (1.0 - path.lane_ratio) * path.jam_density / (ell_star - float(ff[p]))
            )
        resid_h = demand_human - fh[:, :ncong].sum(axis=1)
        resid_a = demand_auto - fa[:, :ncong].sum(axis=1)
        violation += np.maximum(0.0, -resid_h) + np.maximum(0.0, -resid_a)
        rh = np.maximum(resid_h, 0.0)
        ra = np.maximum(resid_a, 0.0)

        last = paths[pp]
        room = last.free_flow_speed * last.bottleneck_lanes
        if mode == "selfish":
            used = rh * last.headway_human + ra * last.headway_auto
            violation += np.maximum(0.0, used - room) / last.headway_human
            fh[:, pp] = rh
            fa[:, pp] = ra
            total = np.full(g, (demand_human + demand_auto) * ell_star)
        else:
            used_h = rh * last.headway_human
            violation += np.maximum(0.0, used_h - room) / last.headway_human
            av_room = np.maximum(0.0, room - used_h) / last.headway_auto
            fa_last = np.minimum(ra, av_room)
            fh[:, pp] = rh
            fa[:, pp] = fa_last
            spill = ra - fa_last
            spill_cost = np.zeros(g)
            remaining = spill.copy()
            for q in range(pp + 1, net.num_paths):
                cap = bottleneck_capacity(paths[q], 1.0)
                take = np.minimum(remaining, cap)
                fa[:, q] = take
                spill_cost += take * float(ff[q])
                remaining -= take
            violation += np.maximum(0.0, remaining)
            total = (demand_human + demand_auto - spill) * ell_star + spill_cost

        feasible = violation <= _GRID_TOL
        return feasible, total, violation, fh, fa

    def search(points: np.ndarray):
        feasible, total, violation, fh, fa = evaluate(points)
        if feasible.any():
            scored = np.where(feasible, total, np.inf)
            idx = int(np.argmin(scored))
            return True, points[idx], float(total[idx]), fh[idx], fa[idx]
        idx = int(np.argmin(violation))
        return False, points[idx], float(violation[idx]), fh[idx], fa[idx]

    if ncong == 0:
        point = np.zeros((1, 0))
        feasible, _, _, fh, fa = evaluate(point)
        if not bool(feasible[0]):
            return None
        return _assemble_solution(net, mode, pp, fh[0], fa[0])

    steps = int(round(1.0 / resolution))
    axes = [np.linspace(0.0, 1.0, steps + 1)] * ncong
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)

    found, center, _, best_fh, best_fa = search(points)
    width = resolution
    # Zoom twice around the best (or least-violating) point; feasibility
    # slivers thinner than the coarse grid are recovered here.
    for _ in range(2):
        width /= 10.0
        lo = np.clip(center - 25.0 * width, 0.0, 1.0)
        hi = np.clip(center + 25.0 * width, 0.0, 1.0)
        axes = [np.linspace(lo[d], hi[d], 51) for d in range(ncong)]
        mesh = np.meshgrid(*axes, indexing="ij")
        fine = np.stack([m.ravel() for m in mesh], axis=1)
        if found:
            fine = np.vstack([fine, center[None, :]])  # never lose the incumbent
        ok, new_center, _, fh, fa = search(fine)
        if ok:
            found, center, best_fh, best_fa = True, new_center, fh, fa
        elif not found:
            center = new_center

    if not found:
        return None
    return _assemble_solution(net, mode, pp, best_fh, best_fa)
