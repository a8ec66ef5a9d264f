// Training configuration.  The reference values are the ones shipped with the
// simulator package (parallelroads' data/ppo_defaults.json, also available as
// load_ppo_defaults() on the Python side); they describe a 40M-step cluster
// run.  The toy defaults keep every optimizer constant identical and only
// shrink the scale knobs (total steps, actor count, network width) to
// something a laptop CPU finishes in minutes.

export interface TrainConfig {
  /** Environment steps to collect over the whole run. */
  totalSteps: number;
  /** Parallel bridge connections collecting rollouts. */
  actors: number;
  /** Steps each actor contributes per optimization batch. */
  stepsPerActorBatch: number;
  clipEpsilon: number;
  entropyCoefficient: number;
  /** Passes over the batch per optimization phase. */
  optimizationEpochs: number;
  /** Adam step size. */
  stepSize: number;
  /** Minibatch size within an epoch. */
  batchSize: number;
  advantageGamma: number;
  advantageLambda: number;
  adamEpsilon: number;
  /** "linear" decays the step size to 0 over the run; "none" keeps it fixed. */
  annealing: "linear" | "none";

  // --- trainer-local knobs (not part of the reference file) ---
  /** Hidden width of the two-layer actor and critic nets. */
  hiddenSize: number;
  /** Observations are divided by this before entering the nets. */
  observationScale: number;
  /** Rewards are -cost * rewardScale ("stage") or -proxy_cost * rewardScale. */
  rewardScale: number;
  rewardMode: "stage" | "proxy";
  /** Initial log standard deviation of the Gaussian over logits. */
  logStdInit: number;
  /** Global gradient-norm clip. */
  maxGradNorm: number;
}

/**
 * Mirror of the simulator's shipped hyperparameter file, for reference and
 * for tests that keep the two in sync.
 */
export const REFERENCE_DEFAULTS = {
  total_steps: 40_000_000,
  actors: 32,
  steps_per_episode: 300,
  steps_per_actor_batch: 1200,
  clip_epsilon: 0.2,
  entropy_coefficient: 0.005,
  optimization_epochs: 5,
  step_size: 0.0003,
  batch_size: 64,
  advantage_gamma: 0.99,
  advantage_lambda: 0.95,
  adam_epsilon: 1e-5,
  annealing: "linear",
} as const;

/** Desk-scale defaults: reference constants, shrunk run size. */
export function toyConfig(overrides: Partial<TrainConfig> = {}): TrainConfig {
  const config: TrainConfig = {
    totalSteps: 60_000,
    actors: 4,
    stepsPerActorBatch: REFERENCE_DEFAULTS.steps_per_actor_batch,
    clipEpsilon: REFERENCE_DEFAULTS.clip_epsilon,
    entropyCoefficient: REFERENCE_DEFAULTS.entropy_coefficient,
    optimizationEpochs: REFERENCE_DEFAULTS.optimization_epochs,
    stepSize: REFERENCE_DEFAULTS.step_size,
    batchSize: REFERENCE_DEFAULTS.batch_size,
    advantageGamma: REFERENCE_DEFAULTS.advantage_gamma,
    advantageLambda: REFERENCE_DEFAULTS.advantage_lambda,
    adamEpsilon: REFERENCE_DEFAULTS.adam_epsilon,
    annealing: REFERENCE_DEFAULTS.annealing,
    hiddenSize: 32,
    observationScale: 10,
    rewardScale: 0.1,
    // Train on the per-tick change in vehicle count rather than the count
    // itself: the differenced signal is nearly uncorrelated step to step, so
    // the critic fits it tightly and the advantages stay sharp.  The raw
    // count is available as "stage".
    rewardMode: "proxy",
    logStdInit: -0.5,
    maxGradNorm: 0.5,
    ...overrides,
  };
  validateConfig(config);
  return config;
}

export function validateConfig(config: TrainConfig): void {
  const positive: Array<[string, number]> = [
    ["totalSteps", config.totalSteps],
    ["actors", config.actors],
    ["stepsPerActorBatch", config.stepsPerActorBatch],
    ["clipEpsilon", config.clipEpsilon],
    ["optimizationEpochs", config.optimizationEpochs],
    ["stepSize", config.stepSize],
    ["batchSize", config.batchSize],
    ["adamEpsilon", config.adamEpsilon],
    ["hiddenSize", config.hiddenSize],
    ["observationScale", config.observationScale],
    ["rewardScale", config.rewardScale],
    ["maxGradNorm", config.maxGradNorm],
  ];
  for (const [name, value] of positive) {
    if (!(value > 0) || !Number.isFinite(value)) {
      throw new Error(`${name} must be positive, got ${value}`);
    }
  }
  if (config.entropyCoefficient < 0) {
    throw new Error(`entropyCoefficient must be >= 0, got ${config.entropyCoefficient}`);
  }
  for (const name of ["advantageGamma", "advantageLambda"] as const) {
    const value = config[name];
    if (!(value > 0 && value <= 1)) {
      throw new Error(`${name} must lie in (0, 1], got ${value}`);
    }
  }
  for (const name of ["totalSteps", "actors", "stepsPerActorBatch", "optimizationEpochs", "batchSize", "hiddenSize"] as const) {
    if (!Number.isInteger(config[name])) {
      throw new Error(`${name} must be an integer, got ${config[name]}`);
    }
  }
  if (config.annealing !== "linear" && config.annealing !== "none") {
    throw new Error(`annealing must be "linear" or "none", got ${config.annealing}`);
  }
  if (config.rewardMode !== "stage" && config.rewardMode !== "proxy") {
    throw new Error(`rewardMode must be "stage" or "proxy", got ${config.rewardMode}`);
  }
}
