import { describe, expect, it } from "vitest";

import { mergeBatches, normalizeAdvantages, RolloutBuffer } from "../src/buffer.js";

const obs = (x: number) => Float64Array.of(x);

describe("RolloutBuffer", () => {
  it("computes generalized advantages on a worked example", () => {
    // gamma = 0.5, lambda = 0.5; rewards [1,2,3], values [0.5,1,1.5],
    // terminal path (last value 0).  By hand:
    //   deltas      = [1.0, 1.75, 1.5]
    //   advantages  = [1.53125, 2.125, 1.5]   (gamma*lambda = 0.25)
    //   returns     = advantages + values
    const buffer = new RolloutBuffer(0.5, 0.5);
    buffer.add(obs(0), obs(0), -0.1, 1, 0.5);
    buffer.add(obs(1), obs(0), -0.1, 2, 1.0);
    buffer.add(obs(2), obs(0), -0.1, 3, 1.5);
    buffer.finishPath(0);
    const batch = buffer.drain();
    expect(batch.advantages).toEqual([1.53125, 2.125, 1.5]);
    expect(batch.returns).toEqual([2.03125, 3.125, 3.0]);
  });

  it("bootstraps cut-off paths with the provided value", () => {
    const buffer = new RolloutBuffer(0.5, 0.5);
    buffer.add(obs(0), obs(0), -0.1, 1, 2);
    buffer.finishPath(4); // delta = 1 + 0.5*4 - 2 = 1
    const batch = buffer.drain();
    expect(batch.advantages).toEqual([1]);
    expect(batch.returns).toEqual([3]);
  });

  it("keeps multiple paths separate", () => {
    const buffer = new RolloutBuffer(1.0, 1.0);
    buffer.add(obs(0), obs(0), -0.1, 1, 0);
    buffer.finishPath(0);
    buffer.add(obs(1), obs(0), -0.1, 5, 0);
    buffer.finishPath(0);
    const batch = buffer.drain();
    // With gamma = lambda = 1 and zero values, advantage = reward-to-go of
    // the own path only.
    expect(batch.advantages).toEqual([1, 5]);
    expect(buffer.length).toBe(0);
  });

  it("refuses to drain with an open path", () => {
    const buffer = new RolloutBuffer(0.9, 0.9);
    buffer.add(obs(0), obs(0), -0.1, 1, 0);
    expect(() => buffer.drain()).toThrow("finishPath");
  });
});

describe("mergeBatches", () => {
  it("concatenates in the order given", () => {
    const a = new RolloutBuffer(0.5, 0.5);
    a.add(obs(1), obs(0), -0.1, 1, 0);
    a.finishPath(0);
    const b = new RolloutBuffer(0.5, 0.5);
    b.add(obs(2), obs(0), -0.2, 2, 0);
    b.finishPath(0);
    const merged = mergeBatches([a.drain(), b.drain()]);
    expect(merged.observations.map((o) => o[0])).toEqual([1, 2]);
    expect(merged.logProbs).toEqual([-0.1, -0.2]);
  });
});

describe("normalizeAdvantages", () => {
  it("produces zero mean and unit variance", () => {
    const advantages = [1, 2, 3];
    normalizeAdvantages(advantages);
    const std = Math.sqrt(2 / 3) + 1e-8;
    expect(advantages[0]).toBeCloseTo(-1 / std, 12);
    expect(advantages[1]).toBeCloseTo(0, 12);
    expect(advantages[2]).toBeCloseTo(1 / std, 12);
  });

  it("tolerates empty input", () => {
    const advantages: number[] = [];
    expect(() => normalizeAdvantages(advantages)).not.toThrow();
  });
});
