/**
 * Bare-bones deterministic SVG assembly.
 *
 * Figures are plain strings built from sorted inputs with fixed-precision
 * coordinates, so rendering the same CSV twice yields byte-identical files.
 */

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite coordinate: ${value}`);
  }
  // Fixed precision keeps output stable; trim trailing zeros for readability.
  const s = value.toFixed(3);
  return s.replace(/\.?0+$/, "") || "0";
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tag(
  name: string,
  attrs: Record<string, string>,
  children?: string,
): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${v}"`);
  const head = parts.length > 0 ? `<${name} ${parts.join(" ")}` : `<${name}`;
  if (children === undefined) {
    return `${head}/>`;
  }
  return `${head}>${children}</${name}>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string> = {},
): string {
  return tag(
    "text",
    { x: fmt(x), y: fmt(y), ...attrs },
    escapeXml(content),
  );
}

export function polylinePath(points: ReadonlyArray<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`)
    .join(" ");
}

/** Closed band polygon: upper edge left-to-right, lower edge back. */
export function bandPath(
  upper: ReadonlyArray<[number, number]>,
  lower: ReadonlyArray<[number, number]>,
): string {
  const forward = polylinePath(upper);
  const backward = [...lower]
    .reverse()
    .map(([x, y]) => `L${fmt(x)} ${fmt(y)}`)
    .join(" ");
  return `${forward} ${backward} Z`;
}

export interface Scale {
  (value: number): number;
  ticks: number[];
  tickLabel(value: number): string;
}

/** Affine map from [lo, hi] to pixel range with evenly spaced ticks. */
export function linearScale(
  lo: number,
  hi: number,
  pixelLo: number,
  pixelHi: number,
  tickCount = 5,
): Scale {
  const span = hi - lo || 1;
  const scale = ((value: number) =>
    pixelLo + ((value - lo) / span) * (pixelHi - pixelLo)) as Scale;
  scale.ticks = linearTicks(lo, hi, tickCount);
  scale.tickLabel = (value: number) => trimNumber(value);
  return scale;
}

/** Map log10(value) affinely; ticks sit at powers of ten inside the domain. */
export function log10Scale(
  lo: number,
  hi: number,
  pixelLo: number,
  pixelHi: number,
): Scale {
  if (lo <= 0 || hi <= 0) {
    throw new Error("log scale requires positive domain");
  }
  const logLo = Math.log10(lo);
  const logHi = Math.log10(hi);
  const span = logHi - logLo || 1;
  const scale = ((value: number) =>
    pixelLo + ((Math.log10(value) - logLo) / span) * (pixelHi - pixelLo)) as Scale;
  const ticks: number[] = [];
  for (
    let exp = Math.ceil(logLo - 1e-9);
    exp <= Math.floor(logHi + 1e-9);
    exp += 1
  ) {
    ticks.push(10 ** exp);
  }
  scale.ticks = ticks;
  scale.tickLabel = (value: number) => trimNumber(value);
  return scale;
}

function linearTicks(lo: number, hi: number, count: number): number[] {
  if (hi === lo) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(count - 1, 1);
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * magnitude);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[4]!;
  const ticks: number[] = [];
  for (
    let v = Math.ceil(lo / step) * step;
    v <= hi + step * 1e-9;
    v += step
  ) {
    // Snap to the step grid to avoid 0.30000000000000004-style labels.
    ticks.push(Number((Math.round(v / step) * step).toPrecision(12)));
  }
  return ticks;
}

function trimNumber(value: number): string {
  if (value !== 0 && (Math.abs(value) >= 1e5 || Math.abs(value) < 1e-3)) {
    const exp = Math.floor(Math.log10(Math.abs(value)));
    const mantissa = value / 10 ** exp;
    const m = Number(mantissa.toPrecision(3));
    return m === 1 ? `1e${exp}` : `${m}e${exp}`;
  }
  return Number(value.toPrecision(6)).toString();
}
