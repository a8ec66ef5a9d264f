"""Two-class cell transmission model on a road with a lane-drop bottleneck.

A road is a chain of cells traversed at one cell per step in free flow.
Each cell tracks human-driven and autonomous vehicle counts separately;
the mix sets how much road space a vehicle claims and therefore the
cell's critical density, capacity, and congestion wave speed.  All
quantities are dimensionless: lengths in cells, time in steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "CellParams",
    "CellState",
    "PathSpec",
    "PathState",
    "apply_lane_closure",
    "cell_autonomy",
    "cell_outflow",
    "cell_supply",
    "first_cell_supply",
    "fundamental_diagram",
    "path_latency_estimate",
    "split_flow_by_type",
    "step_path",
]

# Negative densities beyond this magnitude are treated as real bugs, not roundoff.
_NEG_TOL = 1e-9


@dataclass(frozen=True)
class CellParams:
    """Static properties of one cell.

    ``free_flow_speed`` is in cells per step and must not exceed 1 (a vehicle
    cannot skip a cell).  Headways are the road space one vehicle claims, in
    cells; autonomous vehicles pack at least as tightly as human-driven ones.
    """

    free_flow_speed: float
    lanes: int
    headway_human: float
    headway_auto: float
    jam_density: float  # vehicles held at standstill, all lanes open

    def __post_init__(self) -> None:
        if not 0.0 < self.free_flow_speed <= 1.0:
            raise ValueError(f"free_flow_speed must be in (0, 1], got {self.free_flow_speed}")
        if int(self.lanes) != self.lanes or self.lanes < 1:
            raise ValueError(f"lanes must be a positive integer, got {self.lanes}")
        if self.headway_human <= 0.0 or self.headway_auto <= 0.0:
            raise ValueError("headways must be positive")
        if self.headway_auto > self.headway_human:
            raise ValueError(
                f"autonomous headway {self.headway_auto} exceeds human headway {self.headway_human}"
            )
        # Densest possible critical density is reached at full autonomy.  The
        # jam density must sit far enough above it that the congestion wave
        # never travels faster than one cell per step.
        densest = self.lanes / self.headway_auto
        if self.jam_density < densest * (1.0 + self.free_flow_speed) - 1e-12:
            raise ValueError(
                f"jam_density {self.jam_density} too small for lanes={self.lanes}, "
                f"headway_auto={self.headway_auto}: congestion wave would exceed one cell per step"
            )


@dataclass(frozen=True)
class CellState:
    """Instantaneous contents of one cell.  ``open_lanes=None`` means all open."""

    density_human: float
    density_auto: float
    open_lanes: int | None = None

    @property
    def total(self) -> float:
        return self.density_human + self.density_auto

    @property
    def autonomy(self) -> float:
        return cell_autonomy(self.density_human, self.density_auto)


def cell_autonomy(density_human: float, density_auto: float) -> float:
    """Autonomous share of the vehicles in a cell; an empty cell counts as 0."""
    total = density_human + density_auto
    if total <= 0.0:
        return 0.0
    return density_auto / total


def fundamental_diagram(
    params: CellParams, autonomy: float, open_lanes: int | None = None
) -> tuple[float, float, float]:
    """Critical density, capacity, and congestion wave speed of a cell.

    All three depend on the autonomy share through the average road space a
    vehicle claims.  ``open_lanes`` accounts for lane closures: both the
    critical and jam densities shrink proportionally, and a fully closed cell
    has zero capacity and zero wave speed.
    """
    if not 0.0 <= autonomy <= 1.0:
        raise ValueError(f"autonomy must lie in [0, 1], got {autonomy}")
    if open_lanes is None:
        open_lanes = params.lanes
    if open_lanes < 0 or open_lanes > params.lanes:
        raise ValueError(f"open_lanes {open_lanes} outside [0, {params.lanes}]")
    if open_lanes == 0:
        return 0.0, 0.0, 0.0
    space = autonomy * params.headway_auto + (1.0 - autonomy) * params.headway_human
    critical = open_lanes / space
    capacity = params.free_flow_speed * critical
    jam_eff = params.jam_density * open_lanes / params.lanes
    wave = capacity / (jam_eff - critical)
    return critical, capacity, wave


def cell_supply(params: CellParams, state: CellState) -> float:
    """Vehicles the cell can absorb this step (zero once at effective jam)."""
    open_lanes = params.lanes if state.open_lanes is None else state.open_lanes
    if open_lanes == 0:
        return 0.0
    _, _, wave = fundamental_diagram(params, state.autonomy, open_lanes)
    jam_eff = params.jam_density * open_lanes / params.lanes
    return max(0.0, jam_eff - state.total) * wave


def cell_outflow(
    up_params: CellParams,
    up_state: CellState,
    down_params: CellParams | None = None,
    down_state: CellState | None = None,
) -> float:
    """Total vehicles moving out of a cell this step.

    The flow is the least of what the cell can send at free-flow speed, the
    sender's capacity, and — unless the cell feeds the road exit
    (``down_params=None``) — the room left downstream.
    """
    open_up = up_params.lanes if up_state.open_lanes is None else up_state.open_lanes
    _, cap, _ = fundamental_diagram(up_params, up_state.autonomy, open_up)
    flow = min(up_params.free_flow_speed * up_state.total, cap)
    if down_params is not None:
        if down_state is None:
            raise ValueError("downstream state required when downstream params given")
        flow = min(flow, cell_supply(down_params, down_state))
    return flow


def split_flow_by_type(
    total_flow: float, density_human: float, density_auto: float
) -> tuple[float, float]:
    """Split a cell's outflow across classes in proportion to its contents.

    The human part is computed as the remainder, so the two parts sum to
    ``total_flow`` to within one unit in the last place; a full drain hands
    over the per-class counts verbatim so neither class goes negative.
    """
    if total_flow < 0.0:
        raise ValueError("flow cannot be negative")
    if total_flow == 0.0:
        return 0.0, 0.0
    total = density_human + density_auto
    if total <= 0.0:
        raise ValueError("cannot draw flow from an empty cell")
    if total_flow >= total:
        return density_human, density_auto
    flow_auto = (density_auto / total) * total_flow
    return total_flow - flow_auto, flow_auto


@dataclass(frozen=True)
class PathSpec:
    """A road: identical upstream cells, then a lane-drop bottleneck segment.

    Every cell shares speed, headways, and per-lane jam spacing; only the
    lane count changes at the bottleneck, so the bottleneck's jam density is
    the upstream one scaled by the lane ratio.
    """

    upstream_cells: int
    bottleneck_cells: int
    upstream_lanes: int
    bottleneck_lanes: int
    free_flow_speed: float = 1.0
    headway_human: float = 1.0
    headway_auto: float = 0.5
    jam_density: float = 8.0
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.upstream_cells < 1 or self.bottleneck_cells < 1:
            raise ValueError("need at least one upstream and one bottleneck cell")
        if not 0 < self.bottleneck_lanes < self.upstream_lanes:
            raise ValueError(
                f"bottleneck lanes {self.bottleneck_lanes} must be positive and fewer than "
                f"upstream lanes {self.upstream_lanes}"
            )
        # Validates speed/headway/jam combinations for both segments.
        _ = self.cells

    @property
    def num_cells(self) -> int:
        return self.upstream_cells + self.bottleneck_cells

    @property
    def lane_ratio(self) -> float:
        """Bottleneck share of the upstream lane count, in (0, 1)."""
        return self.bottleneck_lanes / self.upstream_lanes

    @cached_property
    def cells(self) -> tuple[CellParams, ...]:
        upstream = CellParams(
            free_flow_speed=self.free_flow_speed,
            lanes=self.upstream_lanes,
            headway_human=self.headway_human,
            headway_auto=self.headway_auto,
            jam_density=self.jam_density,
        )
        bottleneck = CellParams(
            free_flow_speed=self.free_flow_speed,
            lanes=self.bottleneck_lanes,
            headway_human=self.headway_human,
            headway_auto=self.headway_auto,
            jam_density=self.jam_density * self.lane_ratio,
        )
        return (upstream,) * self.upstream_cells + (bottleneck,) * self.bottleneck_cells

    @property
    def free_flow_latency(self) -> float:
        return self.num_cells / self.free_flow_speed


class PathState:
    """Mutable per-cell vehicle counts by class plus per-lane closure flags."""

    __slots__ = ("density_human", "density_auto", "closed")

    def __init__(self, density_human, density_auto, closed):
        self.density_human = np.asarray(density_human, dtype=float).copy()
        self.density_auto = np.asarray(density_auto, dtype=float).copy()
        self.closed = [[bool(flag) for flag in flags] for flags in closed]
        n = len(self.density_human)
        if len(self.density_auto) != n or len(self.closed) != n:
            raise ValueError("density arrays and closure flags must cover the same cells")
        if np.any(self.density_human < 0.0) or np.any(self.density_auto < 0.0):
            raise ValueError("densities cannot be negative")

    @classmethod
    def empty(cls, spec: PathSpec) -> "PathState":
        n = spec.num_cells
        return cls(
            np.zeros(n),
            np.zeros(n),
            [[False] * p.lanes for p in spec.cells],
        )

    @classmethod
    def from_densities(cls, spec: PathSpec, density_human, density_auto) -> "PathState":
        return cls(
            density_human,
            density_auto,
            [[False] * p.lanes for p in spec.cells],
        )

    def copy(self) -> "PathState":
        return PathState(self.density_human, self.density_auto, self.closed)

    def open_lanes(self) -> list[int]:
        return [len(flags) - sum(flags) for flags in self.closed]

    def cell(self, index: int) -> CellState:
        flags = self.closed[index]
        return CellState(
            density_human=float(self.density_human[index]),
            density_auto=float(self.density_auto[index]),
            open_lanes=len(flags) - sum(flags),
        )

    def total_vehicles(self) -> float:
        return float(self.density_human.sum() + self.density_auto.sum())

    def totals_by_class(self) -> tuple[float, float]:
        return float(self.density_human.sum()), float(self.density_auto.sum())

    def __repr__(self) -> str:
        return f"PathState(human={self.density_human}, auto={self.density_auto})"


def _flow_profile(spec: PathSpec, state: PathState) -> list[float]:
    """Outflow of every cell at the current state; the last entry exits the road."""
    cells = spec.cells
    nh = state.density_human.tolist()
    na = state.density_auto.tolist()
    open_lanes = state.open_lanes()
    n = spec.num_cells

    caps = [0.0] * n
    waves = [0.0] * n
    jams = [0.0] * n
    for i, params in enumerate(cells):
        share = cell_autonomy(nh[i], na[i])
        _, caps[i], waves[i] = fundamental_diagram(params, share, open_lanes[i])
        jams[i] = params.jam_density * open_lanes[i] / params.lanes

    v = spec.free_flow_speed
    flows = [0.0] * n
    for i in range(n):
        flow = min(v * (nh[i] + na[i]), caps[i])
        if i + 1 < n:
            room = max(0.0, jams[i + 1] - (nh[i + 1] + na[i + 1])) * waves[i + 1]
            flow = min(flow, room)
        flows[i] = flow
    return flows


def first_cell_supply(spec: PathSpec, state: PathState) -> float:
    """Vehicles the entrance queue may release into cell 0 this step."""
    return cell_supply(spec.cells[0], state.cell(0))


def step_path(
    spec: PathSpec,
    state: PathState,
    inflow_human: float,
    inflow_auto: float,
    *,
    tol: float = 1e-9,
) -> tuple[PathState, tuple[float, float]]:
    """Advance the road one step; returns the new state and the exit flows.

    The caller — normally queue admission — must keep the inflow within the
    first cell's supply; a violation raises and names the offending path.
    """
    if inflow_human < 0.0 or inflow_auto < 0.0:
        raise ValueError("inflows cannot be negative")
    supply0 = first_cell_supply(spec, state)
    if inflow_human + inflow_auto > supply0 + tol:
        raise ValueError(
            f"inflow {inflow_human + inflow_auto:.12g} exceeds first-cell supply "
            f"{supply0:.12g} on path {spec.label or '<unlabeled>'}"
        )

    nh = state.density_human.tolist()
    na = state.density_auto.tolist()
    flows = _flow_profile(spec, state)

    n = spec.num_cells
    new_h = [0.0] * n
    new_a = [0.0] * n
    prev_h, prev_a = float(inflow_human), float(inflow_auto)
    for i in range(n):
        out_h, out_a = split_flow_by_type(flows[i], nh[i], na[i])
        val_h = nh[i] + prev_h - out_h
        val_a = na[i] + prev_a - out_a
        # Clamp the occasional last-bit rounding residue; anything larger is a bug.
        if val_h < 0.0:
            if val_h < -_NEG_TOL:
                raise AssertionError(f"class balance went negative in cell {i}: {val_h}")
            val_h = 0.0
        if val_a < 0.0:
            if val_a < -_NEG_TOL:
                raise AssertionError(f"class balance went negative in cell {i}: {val_a}")
            val_a = 0.0
        new_h[i] = val_h
        new_a[i] = val_a
        prev_h, prev_a = out_h, out_a

    new_state = PathState(new_h, new_a, state.closed)
    return new_state, (prev_h, prev_a)


def path_latency_estimate(
    spec: PathSpec, state: PathState, blocked_cell_latency: float | None = None
) -> float:
    """Traversal-time estimate with the current flow field held frozen.

    Sums per-cell times: density over outflow where traffic moves, the
    free-flow time for empty cells, and a fixed penalty (default
    ``10 * num_cells / free_flow_speed``) for cells holding vehicles that
    cannot move at all.
    """
    if blocked_cell_latency is None:
        blocked_cell_latency = 10.0 * spec.num_cells / spec.free_flow_speed
    flows = _flow_profile(spec, state)
    free_flow_cell = 1.0 / spec.free_flow_speed
    total = 0.0
    nh = state.density_human.tolist()
    na = state.density_auto.tolist()
    for i in range(spec.num_cells):
        density = nh[i] + na[i]
        if density == 0.0:
            total += free_flow_cell
        elif flows[i] > 0.0:
            total += density / flows[i]
        else:
            total += blocked_cell_latency
    return total


def apply_lane_closure(
    spec: PathSpec, state: PathState, cell_index: int, lane_index: int, closed: bool = True
) -> PathState:
    """Return a copy of the state with one lane's closure flag set."""
    if not 0 <= cell_index < spec.num_cells:
        raise ValueError(f"cell index {cell_index} outside [0, {spec.num_cells})")
    lanes = spec.cells[cell_index].lanes
    if not 0 <= lane_index < lanes:
        raise ValueError(f"lane index {lane_index} outside [0, {lanes}) in cell {cell_index}")
    new_state = state.copy()
    new_state.closed[cell_index][lane_index] = bool(closed)
    return new_state
