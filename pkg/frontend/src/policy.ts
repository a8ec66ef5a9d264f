// Actor-critic for simplex actions.  The actor emits one logit per road and a
// learned (state-independent) log standard deviation; exploration samples a
// Gaussian in logit space and squashes it through a normalized exponential,
// so whatever the network does, the action sent to the bridge is a
// probability vector.  PPO ratios and entropy are taken on the Gaussian
// latent, which is the actual sampled quantity.

import { Mlp, MlpJson } from "./nn.js";
import { Rng } from "./random.js";

const HALF_LOG_TWO_PI = 0.5 * Math.log(2 * Math.PI);

export interface ActionSample {
  latent: Float64Array;
  action: number[];
  logProb: number;
  value: number;
}

export interface CheckpointData {
  obsLen: number;
  actionLen: number;
  observationScale: number;
  actor: MlpJson;
  critic: MlpJson;
  logStd: number[];
}

export function softmax(logits: Float64Array | number[]): number[] {
  let max = -Infinity;
  for (const z of logits) max = Math.max(max, z);
  const exps = new Array<number>(logits.length);
  let sum = 0;
  for (let i = 0; i < logits.length; i++) {
    exps[i] = Math.exp(logits[i] - max);
    sum += exps[i];
  }
  for (let i = 0; i < logits.length; i++) exps[i] /= sum;
  return exps;
}

export class ActorCritic {
  readonly actor: Mlp;
  readonly critic: Mlp;
  readonly logStd: Float64Array;
  readonly obsLen: number;
  readonly actionLen: number;
  readonly observationScale: number;

  constructor(
    obsLen: number,
    actionLen: number,
    hiddenSize: number,
    observationScale: number,
    rng: Rng,
    logStdInit = -0.5,
  ) {
    this.obsLen = obsLen;
    this.actionLen = actionLen;
    this.observationScale = observationScale;
    // Two hidden layers for both heads; the layer sizes are a project
    // default, not a tuned quantity.
    this.actor = new Mlp([obsLen, hiddenSize, hiddenSize, actionLen], rng, 0.01);
    this.critic = new Mlp([obsLen, hiddenSize, hiddenSize, 1], rng);
    this.logStd = new Float64Array(actionLen).fill(logStdInit);
  }

  /** Parameter blocks: actor, then logStd, then critic. */
  parameters(): Float64Array[] {
    return [...this.actor.parameters(), this.logStd, ...this.critic.parameters()];
  }

  gradients(): Float64Array[] {
    return this.parameters().map((p) => new Float64Array(p.length));
  }

  scaleObservation(obs: number[]): Float64Array {
    const scaled = new Float64Array(obs.length);
    for (let i = 0; i < obs.length; i++) scaled[i] = obs[i] / this.observationScale;
    return scaled;
  }

  value(scaledObs: Float64Array): number {
    return this.critic.output(scaledObs)[0];
  }

  /** Stochastic action for rollout collection. */
  sample(scaledObs: Float64Array, rng: Rng): ActionSample {
    const mean = this.actor.output(scaledObs);
    const latent = new Float64Array(this.actionLen);
    for (let i = 0; i < this.actionLen; i++) {
      latent[i] = mean[i] + Math.exp(this.logStd[i]) * rng.normal();
    }
    return {
      latent,
      action: softmax(latent),
      logProb: this.logProbGiven(mean, latent),
      value: this.value(scaledObs),
    };
  }

  /** Deterministic action (softmax of the mean logits), for evaluation. */
  act(obs: number[]): number[] {
    return softmax(this.actor.output(this.scaleObservation(obs)));
  }

  logProbGiven(mean: Float64Array, latent: Float64Array): number {
    let logProb = 0;
    for (let i = 0; i < this.actionLen; i++) {
      const std = Math.exp(this.logStd[i]);
      const z = (latent[i] - mean[i]) / std;
      logProb -= 0.5 * z * z + this.logStd[i] + HALF_LOG_TWO_PI;
    }
    return logProb;
  }

  /** Entropy of the latent Gaussian (closed form, state-independent). */
  entropy(): number {
    let h = 0;
    for (let i = 0; i < this.actionLen; i++) {
      h += this.logStd[i] + 0.5 + HALF_LOG_TWO_PI;
    }
    return h;
  }

  toJSON(): CheckpointData {
    return {
      obsLen: this.obsLen,
      actionLen: this.actionLen,
      observationScale: this.observationScale,
      actor: this.actor.toJSON(),
      critic: this.critic.toJSON(),
      logStd: Array.from(this.logStd),
    };
  }

  static fromJSON(data: CheckpointData): ActorCritic {
    const hiddenSize = data.actor.sizes[1];
    const policy = new ActorCritic(
      data.obsLen,
      data.actionLen,
      hiddenSize,
      data.observationScale,
      new Rng(0),
    );
    const actorParams = Mlp.fromJSON(data.actor).parameters();
    const criticParams = Mlp.fromJSON(data.critic).parameters();
    policy.actor.parameters().forEach((block, i) => block.set(actorParams[i]));
    policy.critic.parameters().forEach((block, i) => block.set(criticParams[i]));
    policy.logStd.set(data.logStd);
    return policy;
  }
}
