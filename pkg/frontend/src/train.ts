// PPO against a bridge server.  One connection per actor collects rollouts
// with the current policy; the batches are merged in actor order and
// optimized with the clipped surrogate, an entropy bonus, and a squared-error
// value loss.  Everything random is driven by seeded streams, so a run is a
// pure function of (scenario, seed, config).

import { mergeBatches, normalizeAdvantages, RolloutBatch, RolloutBuffer } from "./buffer.js";
import { BridgeClient } from "./client.js";
import { TrainConfig, validateConfig } from "./config.js";
import { Adam, clipGradNorm } from "./nn.js";
import { ActorCritic, CheckpointData } from "./policy.js";
import { Rng } from "./random.js";

const VALUE_LOSS_WEIGHT = 0.5;
const SEED_RANGE = 2_147_483_647;

export interface IterationStats {
  iteration: number;
  envSteps: number;
  episodes: number;
  meanEpisodeCost: number;
  policyLoss: number;
  valueLoss: number;
  entropy: number;
  clipFraction: number;
  approxKl: number;
  stepScale: number;
}

export interface TrainResult {
  policy: ActorCritic;
  checkpoint: CheckpointData;
  curve: IterationStats[];
  envStepsUsed: number;
}

interface ActorState {
  client: BridgeClient;
  rng: Rng;
  buffer: RolloutBuffer;
  /** Scaled observation of the in-flight episode, or null between episodes. */
  obs: Float64Array | null;
  episodeCostSum: number;
  episodeSteps: number;
}

interface CollectResult {
  batch: RolloutBatch;
  /** Mean stage cost of each episode that finished during this batch. */
  episodeCosts: number[];
}

async function collect(
  actor: ActorState,
  policy: ActorCritic,
  steps: number,
  config: TrainConfig,
): Promise<CollectResult> {
  const episodeCosts: number[] = [];
  for (let k = 0; k < steps; k++) {
    if (actor.obs === null) {
      const raw = await actor.client.reset(actor.rng.int(SEED_RANGE));
      actor.obs = policy.scaleObservation(raw);
      actor.episodeCostSum = 0;
      actor.episodeSteps = 0;
    }
    const sample = policy.sample(actor.obs, actor.rng);
    const reply = await actor.client.step(sample.action);
    const cost = config.rewardMode === "proxy" ? reply.proxy_cost : reply.cost;
    actor.buffer.add(actor.obs, sample.latent, sample.logProb, -cost * config.rewardScale, sample.value);
    actor.episodeCostSum += reply.cost;
    actor.episodeSteps += 1;
    if (reply.done) {
      actor.buffer.finishPath(0);
      episodeCosts.push(actor.episodeCostSum / actor.episodeSteps);
      actor.obs = null;
    } else {
      actor.obs = policy.scaleObservation(reply.obs);
    }
  }
  if (actor.obs !== null) {
    // Batch cut the episode short; bootstrap with the critic.
    actor.buffer.finishPath(policy.value(actor.obs));
  }
  return { batch: actor.buffer.drain(), episodeCosts };
}

interface UpdateStats {
  policyLoss: number;
  valueLoss: number;
  clipFraction: number;
  approxKl: number;
}

function optimize(
  policy: ActorCritic,
  adam: Adam,
  batch: RolloutBatch,
  config: TrainConfig,
  rng: Rng,
  stepScale: number,
): UpdateStats {
  normalizeAdvantages(batch.advantages);
  const n = batch.observations.length;
  const order = new Int32Array(n);
  const stats: UpdateStats = { policyLoss: 0, valueLoss: 0, clipFraction: 0, approxKl: 0 };
  let minibatches = 0;

  const actorGradCount = policy.actor.parameters().length;
  for (let epoch = 0; epoch < config.optimizationEpochs; epoch++) {
    for (let i = 0; i < n; i++) order[i] = i;
    rng.shuffle(order);
    for (let start = 0; start < n; start += config.batchSize) {
      const end = Math.min(start + config.batchSize, n);
      const size = end - start;
      const grads = policy.gradients();
      const actorGrads = grads.slice(0, actorGradCount);
      const logStdGrad = grads[actorGradCount];
      const criticGrads = grads.slice(actorGradCount + 1);
      let policyLoss = 0;
      let valueLoss = 0;
      let clipped = 0;
      let klSum = 0;

      for (let pos = start; pos < end; pos++) {
        const i = order[pos];
        const obs = batch.observations[i];
        const latent = batch.latents[i];
        const advantage = batch.advantages[i];

        const actorActs = policy.actor.forward(obs);
        const mean = actorActs[actorActs.length - 1];
        const logProb = policy.logProbGiven(mean, latent);
        const ratio = Math.exp(logProb - batch.logProbs[i]);
        klSum += batch.logProbs[i] - logProb;

        // Clipped surrogate: the sample only carries gradient while the
        // ratio is on the unclipped side for its advantage sign.
        const active =
          advantage >= 0 ? ratio < 1 + config.clipEpsilon : ratio > 1 - config.clipEpsilon;
        if (Math.abs(ratio - 1) > config.clipEpsilon) clipped += 1;
        const clippedRatio = Math.min(Math.max(ratio, 1 - config.clipEpsilon), 1 + config.clipEpsilon);
        policyLoss -= Math.min(ratio * advantage, clippedRatio * advantage);

        if (active) {
          // d(-ratio*A)/dmean and /dlogStd via the Gaussian log-density.
          const coef = -ratio * advantage / size;
          const gradMean = new Float64Array(policy.actionLen);
          for (let a = 0; a < policy.actionLen; a++) {
            const std = Math.exp(policy.logStd[a]);
            const z = (latent[a] - mean[a]) / std;
            gradMean[a] = coef * (z / std);
            logStdGrad[a] += coef * (z * z - 1);
          }
          policy.actor.backward(actorActs, gradMean, actorGrads);
        }

        const criticActs = policy.critic.forward(obs);
        const value = criticActs[criticActs.length - 1][0];
        const residual = value - batch.returns[i];
        valueLoss += 0.5 * residual * residual;
        policy.critic.backward(
          criticActs,
          Float64Array.of((VALUE_LOSS_WEIGHT * residual) / size),
          criticGrads,
        );
      }

      // Entropy bonus (maximize entropy => descend on -coefficient).
      for (let a = 0; a < policy.actionLen; a++) {
        logStdGrad[a] -= config.entropyCoefficient;
      }

      clipGradNorm(grads, config.maxGradNorm);
      adam.step(grads, stepScale);

      stats.policyLoss += policyLoss / size;
      stats.valueLoss += valueLoss / size;
      stats.clipFraction += clipped / size;
      stats.approxKl += klSum / size;
      minibatches += 1;
    }
  }

  stats.policyLoss /= minibatches;
  stats.valueLoss /= minibatches;
  stats.clipFraction /= minibatches;
  stats.approxKl /= minibatches;
  return stats;
}

export async function train(
  host: string,
  port: number,
  config: TrainConfig,
  seed: number,
  log?: (line: string) => void,
): Promise<TrainResult> {
  validateConfig(config);
  const master = new Rng(seed);
  const clients: BridgeClient[] = [];
  try {
    for (let a = 0; a < config.actors; a++) {
      clients.push(await BridgeClient.connect(host, port));
    }
    const spec = await clients[0].spec();

    const policy = new ActorCritic(
      spec.obs_len,
      spec.action_len,
      config.hiddenSize,
      config.observationScale,
      master,
      config.logStdInit,
    );
    const adam = new Adam(policy.parameters(), config.stepSize, 0.9, 0.999, config.adamEpsilon);
    const actors: ActorState[] = clients.map((client, a) => ({
      client,
      rng: master.derive(a),
      buffer: new RolloutBuffer(config.advantageGamma, config.advantageLambda),
      obs: null,
      episodeCostSum: 0,
      episodeSteps: 0,
    }));

    const stepsPerIteration = config.actors * config.stepsPerActorBatch;
    const iterations = Math.max(1, Math.ceil(config.totalSteps / stepsPerIteration));
    const curve: IterationStats[] = [];
    let envSteps = 0;

    for (let it = 1; it <= iterations; it++) {
      const progress = envSteps / (iterations * stepsPerIteration);
      const stepScale = config.annealing === "linear" ? 1 - progress : 1;

      const collected = await Promise.all(
        actors.map((actor) => collect(actor, policy, config.stepsPerActorBatch, config)),
      );
      envSteps += stepsPerIteration;
      // Merge in actor order so socket timing cannot change the arithmetic.
      const episodeCosts = collected.flatMap((c) => c.episodeCosts);
      const merged = mergeBatches(collected.map((c) => c.batch));
      const update = optimize(policy, adam, merged, config, master, stepScale);

      const meanEpisodeCost =
        episodeCosts.length > 0
          ? episodeCosts.reduce((s, c) => s + c, 0) / episodeCosts.length
          : NaN;
      const row: IterationStats = {
        iteration: it,
        envSteps,
        episodes: episodeCosts.length,
        meanEpisodeCost,
        policyLoss: update.policyLoss,
        valueLoss: update.valueLoss,
        entropy: policy.entropy(),
        clipFraction: update.clipFraction,
        approxKl: update.approxKl,
        stepScale,
      };
      curve.push(row);
      log?.(
        `iter ${it}/${iterations}  steps ${envSteps}  cost ${meanEpisodeCost.toFixed(3)}  ` +
          `piLoss ${update.policyLoss.toFixed(4)}  vLoss ${update.valueLoss.toFixed(4)}  ` +
          `ent ${policy.entropy().toFixed(3)}  clip ${update.clipFraction.toFixed(3)}`,
      );
    }

    return { policy, checkpoint: policy.toJSON(), curve, envStepsUsed: envSteps };
  } finally {
    await Promise.all(clients.map((c) => c.close()));
  }
}

/** Run deterministic (mean-action) episodes; returns each episode's mean stage cost. */
export async function evaluate(
  host: string,
  port: number,
  policy: ActorCritic,
  episodes: number,
  seedBase = 0,
): Promise<number[]> {
  const client = await BridgeClient.connect(host, port);
  try {
    const costs: number[] = [];
    for (let ep = 0; ep < episodes; ep++) {
      let obs = await client.reset(seedBase + ep);
      let total = 0;
      let steps = 0;
      for (;;) {
        const reply = await client.step(policy.act(obs));
        total += reply.cost;
        steps += 1;
        if (reply.done) break;
        obs = reply.obs;
      }
      costs.push(total / steps);
    }
    return costs;
  } finally {
    await client.close();
  }
}

export function curveToCsv(curve: IterationStats[]): string {
  const header =
    "iteration,env_steps,episodes,mean_episode_cost,policy_loss,value_loss,entropy,clip_fraction,approx_kl,step_scale";
  const rows = curve.map((r) =>
    [
      r.iteration,
      r.envSteps,
      r.episodes,
      r.meanEpisodeCost,
      r.policyLoss,
      r.valueLoss,
      r.entropy,
      r.clipFraction,
      r.approxKl,
      r.stepScale,
    ].join(","),
  );
  return [header, ...rows].join("\n") + "\n";
}
