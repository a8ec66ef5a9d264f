"""Command-line entry point: simulate scenarios, solve equilibria, serve.

Data goes to stdout (or a file), diagnostics to stderr.  Exit codes:
0 success, 2 bad input, 3 infeasible demand, 4 protocol/transport failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from parallelroads.bridge import serve_bridge
from parallelroads.choice import LearningSchedule
from parallelroads.env import TrafficEnv
from parallelroads.equilibrium import (
    InfeasibleDemandError,
    best_controlled_equilibrium,
    best_selfish_equilibrium,
    brute_force_equilibrium,
)
from parallelroads.policies import (
    GreedyLatencyPolicy,
    SelfishAvPolicy,
    StaticPolicy,
    UniformPolicy,
    policy_static_equilibrium,
    run_episode,
)
from parallelroads.scenario import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_PROTOCOL = 4

log = logging.getLogger("parallelroads")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _make_policy(name: str, scenario: Scenario):
    if name == "uniform":
        return UniformPolicy()
    if name == "greedy":
        return GreedyLatencyPolicy()
    if name == "selfish-av":
        return SelfishAvPolicy(schedule=LearningSchedule(kind=scenario.schedule.kind,
                                                         base_rate=scenario.schedule.base_rate))
    human, auto = scenario.demand.mean()
    if name == "static-selfish":
        solution = best_selfish_equilibrium(scenario.network, human, auto)
    else:  # static-controlled
        solution = best_controlled_equilibrium(scenario.network, human, auto)
    return StaticPolicy(policy_static_equilibrium(solution))


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        policy = _make_policy(args.policy, scenario)
    except InfeasibleDemandError as exc:
        return _fail(EXIT_INFEASIBLE, f"infeasible: {exc}")

    env = TrafficEnv(scenario)
    trace = run_episode(env, policy, args.seed)

    paths = scenario.network.paths
    header = ["k", "cost", "proxy_cost", "queue_human", "queue_auto"]
    header += [f"latency_{p}" for p in range(len(paths))]
    header += [f"routing_human_{p}" for p in range(len(paths))]
    header += [f"routing_auto_{p}" for p in range(len(paths))]
    if args.densities:
        for p, spec in enumerate(paths):
            header += [f"density_human_{p}_{i}" for i in range(spec.num_cells)]
        for p, spec in enumerate(paths):
            header += [f"density_auto_{p}_{i}" for i in range(spec.num_cells)]

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for i in range(len(trace)):
            row = [
                i + 1,
                trace.costs[i],
                trace.proxy_costs[i],
                trace.queue_human[i],
                trace.queue_auto[i],
                *trace.latencies[i],
                *trace.routing_human[i],
                *trace.routing_auto[i],
            ]
            if args.densities:
                for dens in trace.densities_human[i]:
                    row.extend(dens)
                for dens in trace.densities_auto[i]:
                    row.extend(dens)
            writer.writerow([_format(x) for x in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_equilibrium(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(EXIT_INPUT, str(exc))
    human, auto = scenario.demand.mean()
    modes = ["selfish", "controlled"] if args.mode == "both" else [args.mode]
    report = {}
    for mode in modes:
        solver = best_selfish_equilibrium if mode == "selfish" else best_controlled_equilibrium
        try:
            solution = solver(scenario.network, human, auto)
        except InfeasibleDemandError as exc:
            print("infeasible")
            print(f"error: infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        entry = solution.to_dict()
        if args.oracle:
            oracle = brute_force_equilibrium(
                scenario.network, human, auto, resolution=args.resolution, mode=mode
            )
            entry["oracle_total_latency"] = oracle.total_latency
            entry["oracle_gap"] = abs(oracle.total_latency - solution.total_latency)
        report[mode] = entry
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        if args.stdio:
            serve_bridge(scenario, stdio=True)
        else:
            serve_bridge(scenario, port=args.port)
    except OSError as exc:
        return _fail(EXIT_PROTOCOL, f"bridge transport failed: {exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parallelroads",
        description="Mixed-autonomy traffic on parallel roads: simulate, solve, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one episode and write a CSV time series")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument(
        "--policy",
        default="uniform",
        choices=["uniform", "greedy", "static-selfish", "static-controlled", "selfish-av"],
        help="autonomous routing policy",
    )
    sim.add_argument("--output", "-o", default="-", help="CSV path ('-' for stdout)")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--densities", action="store_true", help="include per-cell densities")
    sim.set_defaults(func=cmd_simulate)

    eq = sub.add_parser("equilibrium", help="solve for best equilibria and print JSON")
    eq.add_argument("scenario", help="scenario JSON file")
    eq.add_argument("--mode", default="both", choices=["selfish", "controlled", "both"])
    eq.add_argument("--oracle", action="store_true", help="cross-check with grid search")
    eq.add_argument("--resolution", type=float, default=1e-3, help="oracle grid resolution")
    eq.set_defaults(func=cmd_equilibrium)

    srv = sub.add_parser("serve", help="serve the JSON bridge protocol")
    srv.add_argument("scenario", help="scenario JSON file")
    transport = srv.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true", help="speak on stdin/stdout")
    transport.add_argument("--port", type=int, help="listen on a TCP port (0 = ephemeral)")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("PARALLELROADS_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
