"""Mixed-autonomy traffic on parallel roads.

Simulation of human-driven and autonomous vehicles sharing a network of
parallel bottlenecked roads, exact routing-game equilibrium solvers, and a
step-based control environment with a JSON bridge for external trainers.
"""

from parallelroads.ctm import (
    CellParams,
    CellState,
    PathSpec,
    PathState,
    apply_lane_closure,
    cell_autonomy,
    cell_outflow,
    cell_supply,
    first_cell_supply,
    fundamental_diagram,
    path_latency_estimate,
    split_flow_by_type,
    step_path,
)
from parallelroads.queueing import Packet, VehicleQueue, disburse, enqueue_demand
from parallelroads.choice import LearningSchedule, hedge_update, learning_rate, uniform_routing
from parallelroads.equilibrium import (
    EquilibriumSolution,
    InfeasibleDemandError,
    NetworkSpec,
    best_controlled_equilibrium,
    best_selfish_equilibrium,
    bottleneck_capacity,
    brute_force_equilibrium,
    congested_cell_latency,
    congested_density,
    congestion_latency_increment,
    enumerate_congestion_profiles,
    equilibrium_state,
    road_equilibrium_latency,
)
from parallelroads.linprog import LPResult, solve_lp
from parallelroads.scenario import (
    AccidentEvent,
    AccidentProcess,
    DemandProcess,
    InitialCondition,
    Scenario,
    ScenarioError,
    load_scenario,
    scenario_from_dict,
)
from parallelroads.env import StepResult, TrafficEnv, load_ppo_defaults
from parallelroads.policies import (
    EpisodeTrace,
    GreedyLatencyPolicy,
    RoutingPolicy,
    SelfishAvPolicy,
    StaticPolicy,
    StaticSearchResult,
    UniformPolicy,
    mean_stage_cost,
    optimize_static_policy,
    policy_greedy_min_latency,
    policy_selfish_av,
    policy_static_equilibrium,
    policy_uniform,
    run_episode,
)
from parallelroads.bridge import BridgeServer, BridgeSession, serve_bridge, serve_stdio

__version__ = "0.1.0"
