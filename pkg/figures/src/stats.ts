/** Aggregation of repeated metric values into a mean line with a 95% band. */

export interface BandPoint {
  /** Mean of the values at this x position. */
  mean: number;
  /** Half-width of the 95% confidence band: 1.96 * std / sqrt(runs). */
  halfWidth: number;
  /** Number of values aggregated (distinct runs at this x position). */
  runs: number;
}

export function mean(values: readonly number[]): number {
  if (values.length === 0) {
    throw new Error("mean of empty list");
  }
  let total = 0;
  for (const v of values) {
    total += v;
  }
  return total / values.length;
}

/** Sample standard deviation with the n-1 divisor. Requires >= 2 values. */
export function sampleStd(values: readonly number[]): number {
  if (values.length < 2) {
    throw new Error("sample std needs at least two values");
  }
  const m = mean(values);
  let total = 0;
  for (const v of values) {
    total += (v - m) * (v - m);
  }
  return Math.sqrt(total / (values.length - 1));
}

export function bandPoint(values: readonly number[]): BandPoint {
  const runs = values.length;
  const m = mean(values);
  if (runs < 2) {
    return { mean: m, halfWidth: 0, runs };
  }
  return {
    mean: m,
    halfWidth: (1.96 * sampleStd(values)) / Math.sqrt(runs),
    runs,
  };
}

/** Group values by a string key, preserving first-seen key order. */
export function groupBy<T>(
  items: readonly T[],
  key: (item: T) => string,
): Map<string, T[]> {
  const groups = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const bucket = groups.get(k);
    if (bucket === undefined) {
      groups.set(k, [item]);
    } else {
      bucket.push(item);
    }
  }
  return groups;
}
