import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    // dev server forwards API calls to a locally running `bodyforge serve`
    proxy: { "/v1": "http://127.0.0.1:8000" },
  },
  build: {
    chunkSizeWarningLimit: 900,
  },
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
  },
});
