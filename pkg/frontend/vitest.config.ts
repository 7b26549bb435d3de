import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the UI-loop test boots the planner service and runs real simulations
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
