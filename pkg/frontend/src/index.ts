export { Rng } from "./random.js";
export { Adam, clipGradNorm, Mlp } from "./nn.js";
export { mergeBatches, normalizeAdvantages, RolloutBuffer } from "./buffer.js";
export type { RolloutBatch } from "./buffer.js";
export { assertSimplex, BridgeClient, BridgeError } from "./client.js";
export type { SpecReply, StepReply } from "./client.js";
export { REFERENCE_DEFAULTS, toyConfig, validateConfig } from "./config.js";
export type { TrainConfig } from "./config.js";
export { ActorCritic, softmax } from "./policy.js";
export type { ActionSample, CheckpointData } from "./policy.js";
export { spawnBridgeServer } from "./server.js";
export type { SpawnedServer } from "./server.js";
export { curveToCsv, evaluate, train } from "./train.js";
export type { IterationStats, TrainResult } from "./train.js";
