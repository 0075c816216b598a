import { defineConfig } from "vitest/config";

// the labeling service owns these routes; the UI is same-origin in dev
const backend = process.env.ALMATCH_URL ?? "http://127.0.0.1:8000";
const proxy = Object.fromEntries(
  ["/status", "/queue", "/label", "/advance", "/reports"].map((route) => [
    route,
    { target: backend, changeOrigin: true },
  ]),
);

export default defineConfig({
  server: { proxy },
  preview: { proxy },
  test: {
    environment: "jsdom",
  },
});
