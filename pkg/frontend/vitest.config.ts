import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // Integration tests drive a live simulator subprocess; give them room.
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // One file at a time: several tests own a Python server subprocess and
    // the PPO test wants the CPU to itself for stable timing.
    fileParallelism: false,
  },
});
