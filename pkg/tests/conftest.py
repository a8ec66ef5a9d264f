import numpy as np
import pytest

from parallelroads import NetworkSpec, PathSpec


@pytest.fixture
def canonical_path() -> PathSpec:
    """Five-cell road, three upstream lanes-of-two dropping to one lane.

    With unit speed, human headway 1 and autonomous headway 0.5 this is the
    hand-checked reference road used throughout the suite: upstream capacity
    2 at zero autonomy, bottleneck capacity 1, free-flow latency 5.
    """
    return PathSpec(
        upstream_cells=3,
        bottleneck_cells=2,
        upstream_lanes=2,
        bottleneck_lanes=1,
        free_flow_speed=1.0,
        headway_human=1.0,
        headway_auto=0.5,
        jam_density=8.0,
        label="canonical",
    )


@pytest.fixture
def desk_network(canonical_path) -> NetworkSpec:
    """Two parallel roads: the canonical one and a stretched copy (latency 10)."""
    longer = PathSpec(3, 7, 2, 1, label="long")
    return NetworkSpec((canonical_path, longer))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
