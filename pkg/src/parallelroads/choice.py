"""Route choice by exponentially weighted latency feedback.

Travellers keep a probability vector over the parallel roads and shift
weight toward the roads that were recently fast.  The update multiplies
each road's weight by ``exp(-rate * latency)`` and renormalizes; subtracting
the smallest latency first keeps the exponentials in range without changing
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LearningSchedule",
    "hedge_update",
    "learning_rate",
    "uniform_routing",
    "validate_routing",
]


@dataclass(frozen=True)
class LearningSchedule:
    """How the update aggressiveness evolves over an episode.

    ``constant`` keeps ``base_rate``; ``inverse_sqrt`` decays it as
    ``base_rate / sqrt(step + 1)``.
    """

    kind: str = "constant"
    base_rate: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "inverse_sqrt"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.base_rate <= 0.0:
            raise ValueError("base_rate must be positive")


def learning_rate(schedule: LearningSchedule, step: int) -> float:
    """Update rate used at a given (0-based) step."""
    if step < 0:
        raise ValueError("step cannot be negative")
    if schedule.kind == "constant":
        return schedule.base_rate
    return schedule.base_rate / math.sqrt(step + 1.0)


def uniform_routing(num_paths: int) -> np.ndarray:
    if num_paths < 1:
        raise ValueError("need at least one path")
    return np.full(num_paths, 1.0 / num_paths)


def validate_routing(routing, num_paths: int, tol: float = 1e-9) -> np.ndarray:
    """Check a vector lies on the probability simplex and renormalize it.

    Entries must be nonnegative and sum to 1 within ``tol``; the returned
    copy sums to 1 exactly up to floating-point division.
    """
    vec = np.asarray(routing, dtype=float)
    if vec.shape != (num_paths,):
        raise ValueError(f"routing must have shape ({num_paths},), got {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("routing entries must be finite")
    if np.any(vec < 0.0):
        raise ValueError("routing entries cannot be negative")
    total = float(vec.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"routing sums to {total}, outside 1 +- {tol}")
    return vec / total


def hedge_update(routing, latencies, rate: float) -> np.ndarray:
    """Reweight a routing vector by observed road latencies.

    Roads with lower latency gain probability mass; a road's weight can
    decay toward zero but never leaves the simplex.  The smallest latency
    is subtracted inside the exponential for numerical range only.
    """
    mu = np.asarray(routing, dtype=float)
    lat = np.asarray(latencies, dtype=float)
    if mu.shape != lat.shape:
        raise ValueError("routing and latencies must have matching shapes")
    if rate < 0.0:
        raise ValueError("rate cannot be negative")
    if np.any(mu < 0.0):
        raise ValueError("routing entries cannot be negative")
    if not np.all(np.isfinite(lat)):
        raise ValueError("latencies must be finite")
    if mu.sum() <= 0.0:
        raise ValueError("routing has no mass to reweight")
    weights = mu * np.exp(-rate * (lat - lat.min()))
    return weights / weights.sum()
