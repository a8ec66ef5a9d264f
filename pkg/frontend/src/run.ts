// Command-line entry: train against a running bridge server, or spawn one
// from a scenario file first.  Writes the learning curve CSV and the policy
// checkpoint, then evaluates the deterministic policy.
//
// Examples:
//   node dist/run.js --scenario desk.json --seed 0 --out-dir out/
//   node dist/run.js --host 127.0.0.1 --port 5600 --total-steps 24000

import fs from "node:fs";
import path from "node:path";
import { parseArgs } from "node:util";

import { toyConfig } from "./config.js";
import { spawnBridgeServer } from "./server.js";
import { curveToCsv, evaluate, train } from "./train.js";

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      scenario: { type: "string" },
      host: { type: "string", default: "127.0.0.1" },
      port: { type: "string" },
      seed: { type: "string", default: "0" },
      "total-steps": { type: "string" },
      actors: { type: "string" },
      "out-dir": { type: "string", default: "out" },
      "eval-episodes": { type: "string", default: "3" },
    },
  });

  if (!values.scenario && !values.port) {
    console.error("need --scenario (to spawn a server) or --port (to join one)");
    return 2;
  }

  const config = toyConfig({
    ...(values["total-steps"] ? { totalSteps: Number(values["total-steps"]) } : {}),
    ...(values.actors ? { actors: Number(values.actors) } : {}),
  });
  const seed = Number(values.seed);

  let host = values.host!;
  let port = values.port ? Number(values.port) : 0;
  let server = null;
  if (values.scenario) {
    server = await spawnBridgeServer(values.scenario);
    host = server.host;
    port = server.port;
    console.log(`spawned bridge server on ${host}:${port}`);
  }

  try {
    const started = Date.now();
    const result = await train(host, port, config, seed, (line) => console.log(line));
    const seconds = ((Date.now() - started) / 1000).toFixed(1);
    console.log(`trained ${result.envStepsUsed} env steps in ${seconds}s`);

    const outDir = values["out-dir"]!;
    fs.mkdirSync(outDir, { recursive: true });
    const curvePath = path.join(outDir, "curve.csv");
    const checkpointPath = path.join(outDir, "checkpoint.json");
    fs.writeFileSync(curvePath, curveToCsv(result.curve));
    fs.writeFileSync(checkpointPath, JSON.stringify(result.checkpoint));
    console.log(`wrote ${curvePath} and ${checkpointPath}`);

    const episodes = Number(values["eval-episodes"]);
    if (episodes > 0) {
      const costs = await evaluate(host, port, result.policy, episodes);
      const mean = costs.reduce((s, c) => s + c, 0) / costs.length;
      console.log(`deterministic eval over ${episodes} episodes: mean stage cost ${mean.toFixed(4)}`);
    }
    return 0;
  } finally {
    if (server) await server.stop();
  }
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(1);
  },
);
