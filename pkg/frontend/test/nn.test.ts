import { describe, expect, it } from "vitest";

import { Adam, clipGradNorm, Mlp } from "../src/nn.js";
import { Rng } from "../src/random.js";

function scalarLoss(net: Mlp, input: Float64Array, target: number): number {
  const out = net.output(input)[0];
  return 0.5 * (out - target) * (out - target);
}

describe("Mlp", () => {
  it("rejects degenerate size lists", () => {
    expect(() => new Mlp([4])).toThrow("input and output");
  });

  it("checks the input length", () => {
    const net = new Mlp([3, 4, 2], new Rng(0));
    expect(() => net.output(Float64Array.of(1, 2))).toThrow("length 3");
  });

  it("backward matches finite differences", () => {
    const rng = new Rng(2024);
    const net = new Mlp([3, 5, 4, 1], rng);
    const input = Float64Array.of(0.3, -0.7, 1.1);
    const target = 0.25;

    const acts = net.forward(input);
    const out = acts[acts.length - 1][0];
    const grads = net.gradients();
    net.backward(acts, Float64Array.of(out - target), grads);

    const params = net.parameters();
    const eps = 1e-6;
    // Spot-check a handful of coordinates in every block.
    for (let b = 0; b < params.length; b++) {
      const block = params[b];
      const stride = Math.max(1, Math.floor(block.length / 5));
      for (let i = 0; i < block.length; i += stride) {
        const saved = block[i];
        block[i] = saved + eps;
        const up = scalarLoss(net, input, target);
        block[i] = saved - eps;
        const down = scalarLoss(net, input, target);
        block[i] = saved;
        const numeric = (up - down) / (2 * eps);
        expect(grads[b][i]).toBeCloseTo(numeric, 6);
      }
    }
  });

  it("round-trips through JSON exactly", () => {
    const net = new Mlp([4, 6, 2], new Rng(3));
    const clone = Mlp.fromJSON(JSON.parse(JSON.stringify(net.toJSON())));
    const input = Float64Array.of(0.1, 0.2, 0.3, 0.4);
    expect(Array.from(clone.output(input))).toEqual(Array.from(net.output(input)));
  });
});

describe("Adam", () => {
  it("drives a quadratic toward its minimum", () => {
    const x = Float64Array.of(5);
    const adam = new Adam([x], 0.1);
    for (let i = 0; i < 500; i++) {
      adam.step([Float64Array.of(2 * x[0])]); // d/dx of x^2
    }
    expect(Math.abs(x[0])).toBeLessThan(1e-3);
  });

  it("trains the net on a tiny regression problem", () => {
    const rng = new Rng(7);
    const net = new Mlp([2, 8, 1], rng);
    const adam = new Adam(net.parameters(), 0.01);
    // Fit f(x, y) = x - y on four points.
    const points = [
      [Float64Array.of(0, 0), 0],
      [Float64Array.of(1, 0), 1],
      [Float64Array.of(0, 1), -1],
      [Float64Array.of(1, 1), 0],
    ] as const;
    for (let epoch = 0; epoch < 800; epoch++) {
      const grads = net.gradients();
      for (const [input, target] of points) {
        const acts = net.forward(input);
        const out = acts[acts.length - 1][0];
        net.backward(acts, Float64Array.of((out - target) / points.length), grads);
      }
      adam.step(grads);
    }
    for (const [input, target] of points) {
      expect(net.output(input)[0]).toBeCloseTo(target, 2);
    }
  });

  it("rejects mismatched gradient lists", () => {
    const adam = new Adam([Float64Array.of(1)], 0.1);
    expect(() => adam.step([])).toThrow("gradient blocks");
  });
});

describe("clipGradNorm", () => {
  it("leaves small gradients alone and rescales large ones", () => {
    const small = [Float64Array.of(0.1, 0.1)];
    expect(clipGradNorm(small, 1)).toBeCloseTo(Math.sqrt(0.02), 12);
    expect(Array.from(small[0])).toEqual([0.1, 0.1]);

    const large = [Float64Array.of(3, 4)];
    const norm = clipGradNorm(large, 1);
    expect(norm).toBeCloseTo(5, 12);
    expect(Math.hypot(large[0][0], large[0][1])).toBeCloseTo(1, 12);
    expect(large[0][0] / large[0][1]).toBeCloseTo(3 / 4, 12);
  });
});
