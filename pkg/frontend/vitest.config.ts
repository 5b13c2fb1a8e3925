import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // every equivalence check shells into the Python engine twice; the
    // full 5 x 50 matrix runs for minutes on a slow core
    testTimeout: 900_000,
    hookTimeout: 120_000,
  },
});
