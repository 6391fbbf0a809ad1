import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    environmentOptions: {
      // the simulated page lives on the first-party origin
      jsdom: { url: "http://mysite.test:8080/" },
    },
    include: ["tests/**/*.test.ts"],
  },
});
