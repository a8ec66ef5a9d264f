"""Entrance queue holding demand the network cannot yet absorb.

Vehicles arrive in per-step packets of (human, autonomous) counts and are
admitted strictly first-in-first-out.  A whole packet is released when the
current routing sends it onto the roads without exceeding any road's
entrance supply; the first packet that would not fit is split by the largest
admissible fraction and the remainder stays at the head of the queue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = ["Packet", "VehicleQueue", "disburse", "enqueue_demand"]

# Slack for supply comparisons: forgives last-bit roundoff, nothing more.
_SUPPLY_TOL = 1e-12


class Packet(NamedTuple):
    """One arrival batch, counted per vehicle class."""

    human: float
    auto: float

    @property
    def total(self) -> float:
        return self.human + self.auto


@dataclass(frozen=True)
class VehicleQueue:
    """FIFO sequence of arrival packets waiting at the network entrance."""

    packets: tuple[Packet, ...] = ()

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self):
        return iter(self.packets)

    def totals(self) -> tuple[float, float]:
        """Queued vehicles by class (human, autonomous)."""
        human = sum(p.human for p in self.packets)
        auto = sum(p.auto for p in self.packets)
        return human, auto

    def total_vehicles(self) -> float:
        human, auto = self.totals()
        return human + auto


def enqueue_demand(queue: VehicleQueue, demand_human: float, demand_auto: float) -> VehicleQueue:
    """Append one step's arrivals; a packet with no vehicles is dropped."""
    if demand_human < 0.0 or demand_auto < 0.0:
        raise ValueError("demand cannot be negative")
    if demand_human == 0.0 and demand_auto == 0.0:
        return queue
    return VehicleQueue(queue.packets + (Packet(float(demand_human), float(demand_auto)),))


def disburse(
    queue: VehicleQueue,
    supplies: Sequence[float],
    routing_human: Iterable[float],
    routing_auto: Iterable[float],
) -> tuple[np.ndarray, np.ndarray, VehicleQueue]:
    """Admit queued packets onto the roads under the given routings.

    ``supplies[p]`` caps the total flow admitted onto road ``p`` this step.
    Packets leave head-first and whole while they fit on every road; the
    first packet that would overflow some road is scaled by the largest
    fraction that still fits everywhere, and admission stops there.  Roads
    to which the head packet routes no vehicles cannot be overflowed by it,
    so an exactly saturated road does not stall admission on the others.

    Returns per-road admitted flows by class and the remaining queue.
    """
    mu_h = np.asarray(list(routing_human), dtype=float)
    mu_a = np.asarray(list(routing_auto), dtype=float)
    supply = np.asarray(list(supplies), dtype=float)
    paths = len(supply)
    if len(mu_h) != paths or len(mu_a) != paths:
        raise ValueError("routings and supplies must cover the same roads")
    if np.any(supply < 0.0):
        raise ValueError("supplies cannot be negative")

    flow_h = np.zeros(paths)
    flow_a = np.zeros(paths)
    packets = list(queue.packets)
    while packets:
        head = packets[0]
        add_h = mu_h * head.human
        add_a = mu_a * head.auto
        add = add_h + add_a
        room = supply - (flow_h + flow_a)
        if np.all(add <= room + _SUPPLY_TOL):
            flow_h += add_h
            flow_a += add_a
            packets.pop(0)
            continue
        # Largest fraction of the head packet that fits on every road.
        routed = add > 0.0
        fraction = float(np.min(room[routed] / add[routed]))
        fraction = min(max(fraction, 0.0), 1.0)
        if fraction > 0.0:
            flow_h += fraction * add_h
            flow_a += fraction * add_a
            keep = 1.0 - fraction
            packets[0] = Packet(keep * head.human, keep * head.auto)
        break

    return flow_h, flow_a, VehicleQueue(tuple(packets))
