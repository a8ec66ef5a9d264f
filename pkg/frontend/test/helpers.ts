// Shared fixtures: scenario documents for the simulator and a tmp-dir helper
// for writing them to disk.

import fs from "node:fs";
import os from "node:os";
import path from "node:path";

/** Two-road network: short road and long road over the same lane drop. */
export function deskScenario(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    paths: [
      { cells: 5, m_n: 3, b_n: 2, b_b: 1, v: 1.0, h_h: 1.0, h_a: 0.5, n_jam: 8.0, label: "short" },
      { cells: 10, m_n: 3, b_n: 2, b_b: 1, v: 1.0, h_h: 1.0, h_a: 0.5, n_jam: 8.0, label: "long" },
    ],
    demand: { kind: "constant", human: 0.9, auto: 0.4 },
    episode_length: 300,
    seed: 0,
    ...overrides,
  };
}

/** One-road network, light demand: nothing for a policy to decide. */
export function singleRoadScenario(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    paths: [
      { cells: 5, m_n: 3, b_n: 2, b_b: 1, v: 1.0, h_h: 1.0, h_a: 0.5, n_jam: 8.0 },
    ],
    demand: { kind: "constant", human: 0.5, auto: 0.2 },
    episode_length: 30,
    seed: 0,
    ...overrides,
  };
}

export function writeScenario(doc: Record<string, unknown>): { dir: string; file: string } {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-client-"));
  const file = path.join(dir, "scenario.json");
  fs.writeFileSync(file, JSON.stringify(doc));
  return { dir, file };
}

export function removeDir(dir: string): void {
  fs.rmSync(dir, { recursive: true, force: true });
}
