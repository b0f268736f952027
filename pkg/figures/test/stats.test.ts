import { describe, expect, it } from "vitest";

import { bandPoint, groupBy, mean, sampleStd } from "../src/stats";

describe("band math", () => {
  it("computes mean and n-1 sample std", () => {
    expect(mean([0.5, 0.7])).toBeCloseTo(0.6, 15);
    // variance = ((0.1)^2 + (0.1)^2) / 1 = 0.02
    expect(sampleStd([0.5, 0.7])).toBeCloseTo(Math.sqrt(0.02), 15);
  });

  it("band half-width is 1.96 * std / sqrt(runs)", () => {
    const values = [0.2, 0.4, 0.9];
    const point = bandPoint(values);
    const m = (0.2 + 0.4 + 0.9) / 3;
    const variance =
      ((0.2 - m) ** 2 + (0.4 - m) ** 2 + (0.9 - m) ** 2) / 2;
    expect(point.runs).toBe(3);
    expect(point.mean).toBeCloseTo(m, 15);
    expect(point.halfWidth).toBeCloseTo(
      (1.96 * Math.sqrt(variance)) / Math.sqrt(3),
      15,
    );
  });

  it("constant values give a zero-width band", () => {
    const point = bandPoint([0.25, 0.25, 0.25, 0.25]);
    expect(point.halfWidth).toBe(0);
    expect(point.mean).toBe(0.25);
  });

  it("a single value gives runs=1 and no width", () => {
    const point = bandPoint([0.7]);
    expect(point.runs).toBe(1);
    expect(point.halfWidth).toBe(0);
    expect(point.mean).toBe(0.7);
  });

  it("groupBy preserves first-seen key order", () => {
    const groups = groupBy([3, 1, 2, 1, 3], (v) => String(v));
    expect([...groups.keys()]).toEqual(["3", "1", "2"]);
    expect(groups.get("1")).toEqual([1, 1]);
  });
});
