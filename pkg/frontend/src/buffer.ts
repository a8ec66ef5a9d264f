// Rollout storage for one actor: transitions plus the generalized-advantage
// bookkeeping that turns (rewards, values) into training targets.

export interface RolloutBatch {
  observations: Float64Array[];
  /** Pre-softmax Gaussian samples; the policy gradient is taken w.r.t. these. */
  latents: Float64Array[];
  logProbs: number[];
  advantages: number[];
  returns: number[];
}

export class RolloutBuffer {
  readonly gamma: number;
  readonly lambda: number;

  private observations: Float64Array[] = [];
  private latents: Float64Array[] = [];
  private logProbs: number[] = [];
  private rewards: number[] = [];
  private values: number[] = [];
  private advantages: number[] = [];
  private returns: number[] = [];
  private pathStart = 0;

  constructor(gamma: number, lambda: number) {
    this.gamma = gamma;
    this.lambda = lambda;
  }

  get length(): number {
    return this.observations.length;
  }

  add(
    observation: Float64Array,
    latent: Float64Array,
    logProb: number,
    reward: number,
    value: number,
  ): void {
    this.observations.push(observation);
    this.latents.push(latent);
    this.logProbs.push(logProb);
    this.rewards.push(reward);
    this.values.push(value);
  }

  /**
   * Close the current trajectory.  `lastValue` is the critic's estimate of
   * the state after the final stored step: 0 when the episode really ended,
   * V(s) when the batch cut the episode short.
   */
  finishPath(lastValue: number): void {
    const start = this.pathStart;
    const end = this.rewards.length;
    let advantage = 0;
    const pathAdvantages = new Array<number>(end - start);
    for (let t = end - 1; t >= start; t--) {
      const nextValue = t === end - 1 ? lastValue : this.values[t + 1];
      const delta = this.rewards[t] + this.gamma * nextValue - this.values[t];
      advantage = delta + this.gamma * this.lambda * advantage;
      pathAdvantages[t - start] = advantage;
    }
    for (let i = 0; i < pathAdvantages.length; i++) {
      this.advantages.push(pathAdvantages[i]);
      this.returns.push(pathAdvantages[i] + this.values[start + i]);
    }
    this.pathStart = end;
  }

  /** Hand the finished transitions over (throws if a path is still open). */
  drain(): RolloutBatch {
    if (this.pathStart !== this.rewards.length) {
      throw new Error("finishPath() before draining the buffer");
    }
    const batch: RolloutBatch = {
      observations: this.observations,
      latents: this.latents,
      logProbs: this.logProbs,
      advantages: this.advantages,
      returns: this.returns,
    };
    this.observations = [];
    this.latents = [];
    this.logProbs = [];
    this.rewards = [];
    this.values = [];
    this.advantages = [];
    this.returns = [];
    this.pathStart = 0;
    return batch;
  }
}

/** Concatenate per-actor batches in actor order (keeps runs reproducible). */
export function mergeBatches(batches: RolloutBatch[]): RolloutBatch {
  const merged: RolloutBatch = {
    observations: [],
    latents: [],
    logProbs: [],
    advantages: [],
    returns: [],
  };
  for (const b of batches) {
    merged.observations.push(...b.observations);
    merged.latents.push(...b.latents);
    merged.logProbs.push(...b.logProbs);
    merged.advantages.push(...b.advantages);
    merged.returns.push(...b.returns);
  }
  return merged;
}

/** Normalize advantages to zero mean / unit variance (in place). */
export function normalizeAdvantages(advantages: number[]): void {
  const n = advantages.length;
  if (n === 0) return;
  let mean = 0;
  for (const a of advantages) mean += a;
  mean /= n;
  let variance = 0;
  for (const a of advantages) variance += (a - mean) * (a - mean);
  const std = Math.sqrt(variance / n) + 1e-8;
  for (let i = 0; i < n; i++) {
    advantages[i] = (advantages[i] - mean) / std;
  }
}
