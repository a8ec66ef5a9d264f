"""Scenario definitions: everything needed to run a reproducible episode.

A scenario bundles the road network with the demand process, the human
route-choice schedule, lane-closure schedules, the initial condition, the
episode length, and the random seed.  Scenarios can be built in code or
loaded from schema-checked JSON files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from parallelroads.choice import LearningSchedule, validate_routing
from parallelroads.ctm import PathSpec, PathState
from parallelroads.equilibrium import (
    NetworkSpec,
    best_controlled_equilibrium,
    best_selfish_equilibrium,
    equilibrium_state,
)

__all__ = [
    "AccidentEvent",
    "AccidentProcess",
    "DemandProcess",
    "InitialCondition",
    "SCENARIO_SCHEMA",
    "Scenario",
    "ScenarioError",
    "load_scenario",
]


class ScenarioError(ValueError):
    """A scenario document or object fails validation."""


@dataclass(frozen=True)
class DemandProcess:
    """Per-tick vehicle arrivals, constant or i.i.d. uniform per class."""

    human_range: tuple[float, float]
    auto_range: tuple[float, float]

    def __post_init__(self) -> None:
        for name, (lo, hi) in (
            ("human", self.human_range),
            ("auto", self.auto_range),
        ):
            if not 0.0 <= lo <= hi:
                raise ScenarioError(
                    f"{name} demand range must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
                )

    @classmethod
    def constant(cls, human: float, auto: float) -> "DemandProcess":
        return cls((human, human), (auto, auto))

    @property
    def is_constant(self) -> bool:
        return (
            self.human_range[0] == self.human_range[1]
            and self.auto_range[0] == self.auto_range[1]
        )

    def mean(self) -> tuple[float, float]:
        return (
            0.5 * (self.human_range[0] + self.human_range[1]),
            0.5 * (self.auto_range[0] + self.auto_range[1]),
        )

    def sample(self, rng: np.random.Generator) -> tuple[float, float]:
        """Draw one tick of demand.  Constant processes consume no randomness."""
        if self.is_constant:
            return self.human_range[0], self.auto_range[0]
        human = float(rng.uniform(*self.human_range))
        auto = float(rng.uniform(*self.auto_range))
        return human, auto


@dataclass(frozen=True)
class AccidentEvent:
    """One scheduled lane closure: lane of a cell closed for a tick span."""

    path: int
    cell: int
    lane: int
    start: int
    duration: int

    def __post_init__(self) -> None:
        if self.start < 1 or self.duration < 1:
            raise ScenarioError("accident start and duration must be >= 1")
        if min(self.path, self.cell, self.lane) < 0:
            raise ScenarioError("accident path/cell/lane must be nonnegative")

    def active(self, tick: int) -> bool:
        return self.start <= tick < self.start + self.duration


@dataclass(frozen=True)
class AccidentProcess:
    """Scheduled closures plus an optional seeded random closure stream.

    With ``rate > 0`` each tick closes one uniformly chosen open lane with
    that probability, for a uniformly drawn integer duration.  Random
    closures never take a cell's last open lane.
    """

    events: tuple[AccidentEvent, ...] = ()
    rate: float = 0.0
    duration_range: tuple[int, int] = (5, 20)

    def __post_init__(self) -> None:
        if not isinstance(self.events, tuple):
            object.__setattr__(self, "events", tuple(self.events))
        if not 0.0 <= self.rate <= 1.0:
            raise ScenarioError(f"accident rate must lie in [0, 1], got {self.rate}")
        lo, hi = self.duration_range
        if not 1 <= lo <= hi:
            raise ScenarioError(
                f"duration range must satisfy 1 <= lo <= hi, got ({lo}, {hi})"
            )

    @property
    def any_possible(self) -> bool:
        return self.rate > 0.0 or bool(self.events)


@dataclass(frozen=True)
class InitialCondition:
    """How the network starts: empty, explicit densities, or an equilibrium.

    The equilibrium form solves the scenario's mean demand (selfish or
    controlled) and places each road in its stationary regime with the given
    whole-cell congested lengths; the human routing starts at the
    equilibrium split instead of uniform.
    """

    kind: str = "empty"
    densities: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...] = ()
    congested_lengths: tuple[int, ...] = ()
    equilibrium_mode: str = "selfish"

    def __post_init__(self) -> None:
        if self.kind not in ("empty", "explicit", "equilibrium"):
            raise ScenarioError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "explicit" and not self.densities:
            raise ScenarioError("explicit initial condition needs densities")
        if self.kind == "equilibrium" and not self.congested_lengths:
            raise ScenarioError("equilibrium initial condition needs congested lengths")
        if self.equilibrium_mode not in ("selfish", "controlled"):
            raise ScenarioError(f"unknown equilibrium mode {self.equilibrium_mode!r}")

    @classmethod
    def empty(cls) -> "InitialCondition":
        return cls()

    @classmethod
    def explicit(cls, densities) -> "InitialCondition":
        frozen = tuple(
            (tuple(float(x) for x in human), tuple(float(x) for x in auto))
            for human, auto in densities
        )
        return cls(kind="explicit", densities=frozen)

    @classmethod
    def equilibrium(cls, congested_lengths, mode: str = "selfish") -> "InitialCondition":
        return cls(
            kind="equilibrium",
            congested_lengths=tuple(int(g) for g in congested_lengths),
            equilibrium_mode=mode,
        )


@dataclass(frozen=True)
class Scenario:
    """A complete, reproducible episode description."""

    network: NetworkSpec
    demand: DemandProcess
    episode_length: int
    schedule: LearningSchedule = field(default_factory=LearningSchedule)
    accidents: AccidentProcess = field(default_factory=AccidentProcess)
    initial: InitialCondition = field(default_factory=InitialCondition)
    initial_routing_human: tuple[float, ...] | None = None
    blocked_cell_latency: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episode_length < 1:
            raise ScenarioError("episode length must be at least 1")
        paths = self.network.paths
        if self.initial_routing_human is not None:
            routing = validate_routing(
                np.asarray(self.initial_routing_human), len(paths), tol=1e-6
            )
            object.__setattr__(self, "initial_routing_human", tuple(float(x) for x in routing))
        if self.blocked_cell_latency is not None and self.blocked_cell_latency <= 0:
            raise ScenarioError("blocked-cell latency must be positive")
        if self.initial.kind == "explicit" and len(self.initial.densities) != len(paths):
            raise ScenarioError(
                f"explicit initial condition covers {len(self.initial.densities)} paths, "
                f"network has {len(paths)}"
            )
        if self.initial.kind == "equilibrium":
            if len(self.initial.congested_lengths) != len(paths):
                raise ScenarioError("equilibrium initial condition needs one length per path")
            if not self.demand.is_constant:
                raise ScenarioError("equilibrium initial condition requires constant demand")
        for event in self.accidents.events:
            self._check_event(event)

    def _check_event(self, event: AccidentEvent) -> None:
        paths = self.network.paths
        if event.path >= len(paths):
            raise ScenarioError(f"accident path {event.path} out of range")
        spec = paths[event.path]
        if event.cell >= spec.num_cells:
            raise ScenarioError(
                f"accident cell {event.cell} out of range for path {event.path}"
            )
        if event.lane >= spec.cells[event.cell].lanes:
            raise ScenarioError(
                f"accident lane {event.lane} out of range for path {event.path} "
                f"cell {event.cell}"
            )

    @property
    def num_paths(self) -> int:
        return self.network.num_paths

    def build_initial_states(self) -> tuple[list[PathState], np.ndarray]:
        """Materialize the starting path states and human routing vector."""
        paths = self.network.paths
        routing = (
            np.asarray(self.initial_routing_human)
            if self.initial_routing_human is not None
            else np.full(len(paths), 1.0 / len(paths))
        )
        if self.initial.kind == "empty":
            return [PathState.empty(p) for p in paths], routing
        if self.initial.kind == "explicit":
            states = []
            for spec, (human, auto) in zip(paths, self.initial.densities):
                if len(human) != spec.num_cells or len(auto) != spec.num_cells:
                    raise ScenarioError(
                        f"explicit densities for path {spec.label or paths.index(spec)} "
                        f"must cover {spec.num_cells} cells"
                    )
                states.append(PathState.from_densities(spec, human, auto))
            return states, routing

        solver = (
            best_selfish_equilibrium
            if self.initial.equilibrium_mode == "selfish"
            else best_controlled_equilibrium
        )
        human, auto = self.demand.mean()
        solution = solver(self.network, human, auto)
        states = [
            equilibrium_state(
                spec,
                solution.flows_human[p],
                solution.flows_auto[p],
                self.initial.congested_lengths[p],
            )
            for p, spec in enumerate(paths)
        ]
        if self.initial_routing_human is None:
            routing = solution.routing_human()
        return states, routing


# ---------------------------------------------------------------------------
# JSON scenario documents

_PATH_SCHEMA = {
    "type": "object",
    "properties": {
        "cells": {"type": "integer", "minimum": 2},
        "m_n": {"type": "integer", "minimum": 1},
        "b_n": {"type": "integer", "minimum": 1},
        "b_b": {"type": "integer", "minimum": 1},
        "v": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "h_h": {"type": "number", "exclusiveMinimum": 0},
        "h_a": {"type": "number", "exclusiveMinimum": 0},
        "n_jam": {"type": "number", "exclusiveMinimum": 0},
        "label": {"type": "string"},
    },
    "required": ["cells", "m_n", "b_n", "b_b", "v", "h_h", "h_a", "n_jam"],
    "additionalProperties": False,
}

_RANGE = {
    "type": "array",
    "items": {"type": "number", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "paths": {"type": "array", "items": _PATH_SCHEMA, "minItems": 1},
        "demand": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["constant", "uniform"]},
                "human": {},
                "auto": {},
            },
            "required": ["kind", "human", "auto"],
            "additionalProperties": False,
        },
        "episode_length": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "hedge": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["constant", "inverse_sqrt"]},
                "rate": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["rate"],
            "additionalProperties": False,
        },
        "accidents": {
            "type": "object",
            "properties": {
                "events": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "path": {"type": "integer", "minimum": 0},
                            "cell": {"type": "integer", "minimum": 0},
                            "lane": {"type": "integer", "minimum": 0},
                            "start": {"type": "integer", "minimum": 1},
                            "duration": {"type": "integer", "minimum": 1},
                        },
                        "required": ["path", "cell", "lane", "start", "duration"],
                        "additionalProperties": False,
                    },
                },
                "rate": {"type": "number", "minimum": 0, "maximum": 1},
                "duration_range": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 1},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["empty", "explicit", "equilibrium"]},
                "densities": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "human": {"type": "array", "items": {"type": "number", "minimum": 0}},
                            "auto": {"type": "array", "items": {"type": "number", "minimum": 0}},
                        },
                        "required": ["human", "auto"],
                        "additionalProperties": False,
                    },
                },
                "congested_lengths": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                },
                "mode": {"enum": ["selfish", "controlled"]},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "initial_routing_human": {
            "type": "array",
            "items": {"type": "number", "minimum": 0},
        },
        "blocked_cell_latency": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["paths", "demand", "episode_length"],
    "additionalProperties": False,
}


def _demand_from_doc(doc: dict) -> DemandProcess:
    kind = doc["kind"]
    if kind == "constant":
        for key in ("human", "auto"):
            if not isinstance(doc[key], (int, float)):
                raise ScenarioError(f"constant demand {key!r} must be a number")
        return DemandProcess.constant(float(doc["human"]), float(doc["auto"]))
    for key in ("human", "auto"):
        value = doc[key]
        if not (isinstance(value, list) and len(value) == 2):
            raise ScenarioError(f"uniform demand {key!r} must be a [lo, hi] pair")
    return DemandProcess(
        (float(doc["human"][0]), float(doc["human"][1])),
        (float(doc["auto"][0]), float(doc["auto"][1])),
    )


def _path_from_doc(doc: dict) -> PathSpec:
    if doc["m_n"] >= doc["cells"]:
        raise ScenarioError(
            f"path needs at least one bottleneck cell: cells={doc['cells']} m_n={doc['m_n']}"
        )
    return PathSpec(
        upstream_cells=doc["m_n"],
        bottleneck_cells=doc["cells"] - doc["m_n"],
        upstream_lanes=doc["b_n"],
        bottleneck_lanes=doc["b_b"],
        free_flow_speed=float(doc["v"]),
        headway_human=float(doc["h_h"]),
        headway_auto=float(doc["h_a"]),
        jam_density=float(doc["n_jam"]),
        label=doc.get("label", ""),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a scenario document and build the Scenario it describes."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "$" + "".join(
            f"[{part}]" if isinstance(part, int) else f".{part}"
            for part in first.absolute_path
        )
        raise ScenarioError(f"scenario document invalid at {where}: {first.message}")

    try:
        paths = tuple(_path_from_doc(p) for p in doc["paths"])
        network = NetworkSpec(paths)
        demand = _demand_from_doc(doc["demand"])
        hedge_doc = doc.get("hedge", {"kind": "constant", "rate": 0.1})
        schedule = LearningSchedule(
            kind=hedge_doc.get("kind", "constant"), base_rate=float(hedge_doc["rate"])
        )
        acc_doc = doc.get("accidents", {})
        accidents = AccidentProcess(
            events=tuple(AccidentEvent(**e) for e in acc_doc.get("events", [])),
            rate=float(acc_doc.get("rate", 0.0)),
            duration_range=tuple(acc_doc.get("duration_range", (5, 20))),
        )
        init_doc = doc.get("initial", {"kind": "empty"})
        if init_doc["kind"] == "empty":
            initial = InitialCondition.empty()
        elif init_doc["kind"] == "explicit":
            initial = InitialCondition.explicit(
                [(p["human"], p["auto"]) for p in init_doc.get("densities", [])]
            )
        else:
            initial = InitialCondition.equilibrium(
                init_doc.get("congested_lengths", []),
                init_doc.get("mode", "selfish"),
            )
        routing = doc.get("initial_routing_human")
        return Scenario(
            network=network,
            demand=demand,
            episode_length=doc["episode_length"],
            schedule=schedule,
            accidents=accidents,
            initial=initial,
            initial_routing_human=tuple(routing) if routing is not None else None,
            blocked_cell_latency=doc.get("blocked_cell_latency"),
            seed=doc.get("seed", 0),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"scenario file {path} must hold a JSON object")
    return scenario_from_dict(doc)
