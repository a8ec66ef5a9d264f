// Scratch calibration for the toy PPO test: how many steps does it take to
// land within 10% of the static-equilibrium baseline, and how long does that
// run?  Not part of the shipped package or the test suite.

import { execFileSync } from "node:child_process";

import { toyConfig } from "../src/config.js";
import { spawnBridgeServer } from "../src/server.js";
import { evaluate, train } from "../src/train.js";
import { deskScenario, removeDir, writeScenario } from "../test/helpers.js";

function staticControlledMeanCost(scenarioFile: string): number {
  const csv = execFileSync("python3", [
    "-m",
    "parallelroads.cli",
    "simulate",
    scenarioFile,
    "--policy",
    "static-controlled",
    "-o",
    "-",
  ]).toString();
  const lines = csv.trim().split("\n");
  const header = lines[0].split(",");
  const costIdx = header.indexOf("cost");
  const costs = lines.slice(1).map((line) => Number(line.split(",")[costIdx]));
  return costs.reduce((s, c) => s + c, 0) / costs.length;
}

async function main() {
  const variant = process.argv[2] ?? "A";
  // E*: autos dominate and the short road can carry everything, so the
  // optimal routing is far from the uniform init.
  const scenarioDoc = variant.startsWith("E")
    ? deskScenario({ demand: { kind: "constant", human: 0.3, auto: 0.8 } })
    : deskScenario();
  const { dir, file } = writeScenario(scenarioDoc);
  const server = await spawnBridgeServer(file);
  try {
    const baseline = staticControlledMeanCost(file);
    console.log(`baseline (static-controlled) mean stage cost: ${baseline.toFixed(4)}`);

    const spec = { obs_len: 53, action_len: 2 };
    const { ActorCritic } = await import("../src/policy.js");
    const { Rng } = await import("../src/random.js");
    const untrained = new ActorCritic(spec.obs_len, spec.action_len, 32, 10, new Rng(0), -0.5);
    const initCosts = await evaluate(server.host, server.port, untrained, 1);
    console.log(
      `untrained deterministic eval ${initCosts[0].toFixed(4)}  ratio ${(initCosts[0] / baseline).toFixed(4)}  act ${JSON.stringify(untrained.act(new Array(53).fill(0)))}`,
    );

    const overrides: Record<string, object> = {
      A: { totalSteps: 48_000, actors: 4, stepsPerActorBatch: 600 },
      B: { totalSteps: 48_000, actors: 4, stepsPerActorBatch: 600, stepSize: 0.001 },
      C: { totalSteps: 96_000, actors: 4, stepsPerActorBatch: 1200 },
      D: { totalSteps: 24_000, actors: 4, stepsPerActorBatch: 600, stepSize: 0.001 },
      E1: { totalSteps: 144_000, actors: 4, stepsPerActorBatch: 600 },
      E2: { totalSteps: 96_000, actors: 4, stepsPerActorBatch: 600, stepSize: 0.001 },
      E3: {
        totalSteps: 96_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        annealing: "none",
        logStdInit: -1.0,
      },
      E4: {
        totalSteps: 144_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
      },
      E5: {
        totalSteps: 96_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.002,
        annealing: "none",
      },
      E6: {
        totalSteps: 144_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.002,
        annealing: "none",
      },
      E7: {
        totalSteps: 144_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        optimizationEpochs: 10,
      },
      E8: {
        totalSteps: 192_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        optimizationEpochs: 10,
      },
      E10: {
        totalSteps: 144_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        rewardMode: "proxy",
      },
      E11: {
        totalSteps: 96_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        rewardMode: "proxy",
      },
      E12: {
        totalSteps: 48_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        rewardMode: "proxy",
      },
      DP: {
        totalSteps: 48_000,
        actors: 4,
        stepsPerActorBatch: 600,
        stepSize: 0.001,
        rewardMode: "proxy",
      },
    };
    const config = toyConfig(overrides[variant] as never);
    console.log(`variant ${variant}:`, JSON.stringify(overrides[variant]));

    const started = Date.now();
    const result = await train(server.host, server.port, config, 0, (line) => console.log(line));
    const trainSeconds = (Date.now() - started) / 1000;

    const evalCosts = await evaluate(server.host, server.port, result.policy, 1);
    console.log(`train time ${trainSeconds.toFixed(1)}s, env steps ${result.envStepsUsed}`);
    console.log(
      `deterministic eval mean cost ${evalCosts[0].toFixed(4)}  ratio ${(evalCosts[0] / baseline).toFixed(4)}`,
    );
  } finally {
    await server.stop();
    removeDir(dir);
  }
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
