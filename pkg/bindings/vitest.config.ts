import { defineConfig } from "vitest/config";

// Every bound call spawns a fresh core process; allow for slow interpreters
// and loaded machines.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
