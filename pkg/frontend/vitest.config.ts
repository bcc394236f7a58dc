import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the round-trip test trains a small fixture checkpoint on first run
    testTimeout: 180_000,
    hookTimeout: 300_000,
  },
});
