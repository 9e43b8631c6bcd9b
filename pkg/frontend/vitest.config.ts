import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    testTimeout: 600_000,
    hookTimeout: 600_000,
    // tfjs keeps global backend state; a single fork avoids cross-test races
    pool: 'forks',
    maxWorkers: 1,
    minWorkers: 1,
  },
});
