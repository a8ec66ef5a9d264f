import { execFileSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { REFERENCE_DEFAULTS, toyConfig, validateConfig } from "../src/config.js";

describe("REFERENCE_DEFAULTS", () => {
  it("stays in sync with the simulator's shipped defaults", () => {
    const raw = execFileSync("python3", [
      "-c",
      "import json, parallelroads; print(json.dumps(parallelroads.load_ppo_defaults()))",
    ]);
    const shipped = JSON.parse(raw.toString());
    expect({ ...REFERENCE_DEFAULTS }).toEqual(shipped);
  });
});

describe("toyConfig", () => {
  it("keeps the optimizer constants and shrinks only the scale", () => {
    const config = toyConfig();
    expect(config.clipEpsilon).toBe(REFERENCE_DEFAULTS.clip_epsilon);
    expect(config.entropyCoefficient).toBe(REFERENCE_DEFAULTS.entropy_coefficient);
    expect(config.optimizationEpochs).toBe(REFERENCE_DEFAULTS.optimization_epochs);
    expect(config.stepSize).toBe(REFERENCE_DEFAULTS.step_size);
    expect(config.batchSize).toBe(REFERENCE_DEFAULTS.batch_size);
    expect(config.advantageGamma).toBe(REFERENCE_DEFAULTS.advantage_gamma);
    expect(config.advantageLambda).toBe(REFERENCE_DEFAULTS.advantage_lambda);
    expect(config.adamEpsilon).toBe(REFERENCE_DEFAULTS.adam_epsilon);
    expect(config.annealing).toBe(REFERENCE_DEFAULTS.annealing);
    expect(config.stepsPerActorBatch).toBe(REFERENCE_DEFAULTS.steps_per_actor_batch);
    expect(config.totalSteps).toBeLessThan(REFERENCE_DEFAULTS.total_steps);
    expect(config.actors).toBeLessThanOrEqual(REFERENCE_DEFAULTS.actors);
  });

  it("applies overrides and validates them", () => {
    expect(toyConfig({ actors: 2 }).actors).toBe(2);
    expect(() => toyConfig({ actors: 0 })).toThrow("actors");
    expect(() => toyConfig({ stepSize: -1 })).toThrow("stepSize");
    expect(() => toyConfig({ advantageGamma: 1.5 })).toThrow("advantageGamma");
    expect(() => toyConfig({ batchSize: 2.5 })).toThrow("integer");
    expect(() => toyConfig({ rewardMode: "off" as never })).toThrow("rewardMode");
    expect(() => toyConfig({ annealing: "cosine" as never })).toThrow("annealing");
  });

  it("validateConfig accepts the defaults", () => {
    expect(() => validateConfig(toyConfig())).not.toThrow();
  });
});
