import { defineConfig } from "vitest/config";

// the e2e suite spawns the Python service on this port; the window origin
// must match or the browser same-origin policy blocks the API calls
export const SERVICE_PORT = 8765;

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: { url: `http://127.0.0.1:${SERVICE_PORT}` },
    },
    include: ["test/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
