import { defineConfig } from 'vitest/config';

// The e2e suite boots a real orchestrator process; give it room.
export default defineConfig({
  test: {
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
