import { expect } from "vitest";

/** Recursively assert that a payload carries no rank/score/streak keys. */
export function expectNoBannedKeys(obj: unknown): void {
  if (Array.isArray(obj)) {
    obj.forEach(expectNoBannedKeys);
  } else if (obj && typeof obj === "object") {
    for (const [key, value] of Object.entries(obj)) {
      expect(["rank", "score", "streak"]).not.toContain(key);
      expectNoBannedKeys(value);
    }
  }
}
