// Minimal dense network and Adam, just enough for a two-hidden-layer
// actor/critic.  No autodiff: forward keeps the layer activations and
// backward applies the chain rule by hand.  Parameters live in plain
// Float64Array blocks so the optimizer can treat everything uniformly.

import { Rng } from "./random.js";

export interface MlpJson {
  sizes: number[];
  weights: number[][];
  biases: number[][];
}

/** Fully connected net, tanh hidden layers, linear output. */
export class Mlp {
  readonly sizes: number[];
  /** weights[l] is (sizes[l+1] x sizes[l]), row-major. */
  readonly weights: Float64Array[];
  readonly biases: Float64Array[];

  constructor(sizes: number[], rng?: Rng, outputScale = 1) {
    if (sizes.length < 2) {
      throw new Error(`need at least input and output sizes, got [${sizes}]`);
    }
    this.sizes = sizes.slice();
    this.weights = [];
    this.biases = [];
    for (let l = 0; l < sizes.length - 1; l++) {
      const fanIn = sizes[l];
      const fanOut = sizes[l + 1];
      const w = new Float64Array(fanOut * fanIn);
      if (rng) {
        // Glorot-uniform; the last layer can be shrunk so the initial policy
        // is near-uniform instead of an arbitrary preference.
        const last = l === sizes.length - 2;
        const bound = Math.sqrt(6 / (fanIn + fanOut)) * (last ? outputScale : 1);
        for (let i = 0; i < w.length; i++) {
          w[i] = (2 * rng.next() - 1) * bound;
        }
      }
      this.weights.push(w);
      this.biases.push(new Float64Array(fanOut));
    }
  }

  get layerCount(): number {
    return this.sizes.length - 1;
  }

  /** All parameter blocks, in a fixed order (for the optimizer). */
  parameters(): Float64Array[] {
    const out: Float64Array[] = [];
    for (let l = 0; l < this.layerCount; l++) {
      out.push(this.weights[l], this.biases[l]);
    }
    return out;
  }

  /** Zeroed gradient blocks matching parameters(). */
  gradients(): Float64Array[] {
    return this.parameters().map((p) => new Float64Array(p.length));
  }

  /**
   * Forward pass that keeps every layer's activations (input included) so
   * backward() can run without recomputing.
   */
  forward(input: Float64Array | number[]): Float64Array[] {
    if (input.length !== this.sizes[0]) {
      throw new Error(`expected input of length ${this.sizes[0]}, got ${input.length}`);
    }
    const acts: Float64Array[] = [Float64Array.from(input)];
    for (let l = 0; l < this.layerCount; l++) {
      const fanIn = this.sizes[l];
      const fanOut = this.sizes[l + 1];
      const prev = acts[l];
      const w = this.weights[l];
      const b = this.biases[l];
      const next = new Float64Array(fanOut);
      for (let i = 0; i < fanOut; i++) {
        let sum = b[i];
        const row = i * fanIn;
        for (let j = 0; j < fanIn; j++) {
          sum += w[row + j] * prev[j];
        }
        next[i] = l < this.layerCount - 1 ? Math.tanh(sum) : sum;
      }
      acts.push(next);
    }
    return acts;
  }

  /** Output only. */
  output(input: Float64Array | number[]): Float64Array {
    const acts = this.forward(input);
    return acts[acts.length - 1];
  }

  /**
   * Accumulate dLoss/dparams into grads given dLoss/doutput.  `acts` must
   * come from forward() on the same parameters.
   */
  backward(acts: Float64Array[], gradOutput: Float64Array, grads: Float64Array[]): void {
    let upstream = Float64Array.from(gradOutput);
    for (let l = this.layerCount - 1; l >= 0; l--) {
      const fanIn = this.sizes[l];
      const fanOut = this.sizes[l + 1];
      const prev = acts[l];
      const gw = grads[2 * l];
      const gb = grads[2 * l + 1];
      const w = this.weights[l];
      const downstream = new Float64Array(fanIn);
      for (let i = 0; i < fanOut; i++) {
        const g = upstream[i];
        if (g === 0) continue;
        const row = i * fanIn;
        gb[i] += g;
        for (let j = 0; j < fanIn; j++) {
          gw[row + j] += g * prev[j];
          downstream[j] += w[row + j] * g;
        }
      }
      if (l > 0) {
        // prev is a tanh activation; fold its derivative in here.
        for (let j = 0; j < fanIn; j++) {
          downstream[j] *= 1 - prev[j] * prev[j];
        }
      }
      upstream = downstream;
    }
  }

  toJSON(): MlpJson {
    return {
      sizes: this.sizes.slice(),
      weights: this.weights.map((w) => Array.from(w)),
      biases: this.biases.map((b) => Array.from(b)),
    };
  }

  static fromJSON(data: MlpJson): Mlp {
    const net = new Mlp(data.sizes);
    for (let l = 0; l < net.layerCount; l++) {
      if (data.weights[l].length !== net.weights[l].length) {
        throw new Error(`weight block ${l} has wrong length`);
      }
      net.weights[l].set(data.weights[l]);
      net.biases[l].set(data.biases[l]);
    }
    return net;
  }
}

/** Adam over a fixed list of parameter blocks. */
export class Adam {
  private readonly params: Float64Array[];
  private readonly m: Float64Array[];
  private readonly v: Float64Array[];
  private steps = 0;

  constructor(
    params: Float64Array[],
    readonly stepSize: number,
    readonly beta1 = 0.9,
    readonly beta2 = 0.999,
    readonly epsilon = 1e-5,
  ) {
    this.params = params;
    this.m = params.map((p) => new Float64Array(p.length));
    this.v = params.map((p) => new Float64Array(p.length));
  }

  /**
   * One descent step along `grads` (same block layout as params).
   * `scale` multiplies the step size, e.g. for linear annealing.
   */
  step(grads: Float64Array[], scale = 1): void {
    if (grads.length !== this.params.length) {
      throw new Error(`expected ${this.params.length} gradient blocks, got ${grads.length}`);
    }
    this.steps += 1;
    const correction1 = 1 - Math.pow(this.beta1, this.steps);
    const correction2 = 1 - Math.pow(this.beta2, this.steps);
    const lr = this.stepSize * scale;
    for (let b = 0; b < this.params.length; b++) {
      const p = this.params[b];
      const g = grads[b];
      const m = this.m[b];
      const v = this.v[b];
      for (let i = 0; i < p.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        const mHat = m[i] / correction1;
        const vHat = v[i] / correction2;
        p[i] -= (lr * mHat) / (Math.sqrt(vHat) + this.epsilon);
      }
    }
  }
}

/** Scale gradient blocks in place so their global L2 norm is at most maxNorm. */
export function clipGradNorm(grads: Float64Array[], maxNorm: number): number {
  let sq = 0;
  for (const g of grads) {
    for (let i = 0; i < g.length; i++) sq += g[i] * g[i];
  }
  const norm = Math.sqrt(sq);
  if (norm > maxNorm && norm > 0) {
    const factor = maxNorm / norm;
    for (const g of grads) {
      for (let i = 0; i < g.length; i++) g[i] *= factor;
    }
  }
  return norm;
}
