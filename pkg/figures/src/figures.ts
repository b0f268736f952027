import type { ResultRow } from "./schema.js";
import { SchemaError } from "./schema.js";
import { bandPoint, groupBy } from "./stats.js";
import {
  bandPath,
  fmt,
  linearScale,
  log10Scale,
  polylinePath,
  tag,
  text,
  type Scale,
} from "./svg.js";

export const FIGURE_KINDS = [
  "learning_curve",
  "grad_variance",
  "ope_grid",
  "variance_grid",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  input: string;
  kind: FigureKind;
  output: string;
}

export interface SeriesPoint {
  x: number;
  mean: number;
  halfWidth: number;
  runs: number;
}

export interface Series {
  estimator: string;
  /** Empty for single-panel kinds; "K=10, inv temp 1" for grid kinds. */
  panel: string;
  /** Panel coordinates for grid kinds; null for single-panel kinds. */
  kActions: number | null;
  invTemperature: number | null;
  points: SeriesPoint[];
}

export interface Figure {
  svg: string;
  warnings: string[];
  series: Series[];
}

interface KindConfig {
  metric: string;
  xField: (row: ResultRow) => number;
  xLabel: string;
  yLabel: string;
  logX: boolean;
  logY: boolean;
  panelled: boolean;
}

const KIND_CONFIG: Record<FigureKind, KindConfig> = {
  learning_curve: {
    metric: "test_value",
    xField: (r) => r.epoch,
    xLabel: "epoch",
    yLabel: "policy value",
    logX: false,
    logY: false,
    panelled: false,
  },
  grad_variance: {
    metric: "grad_variance",
    xField: (r) => r.epoch,
    xLabel: "epoch",
    yLabel: "gradient variance",
    logX: false,
    logY: true,
    panelled: false,
  },
  ope_grid: {
    metric: "mse",
    xField: (r) => r.nLogged,
    xLabel: "logged interactions",
    yLabel: "MSE",
    logX: true,
    logY: true,
    panelled: true,
  },
  variance_grid: {
    metric: "est_variance",
    xField: (r) => r.nLogged,
    xLabel: "logged interactions",
    yLabel: "estimator variance",
    logX: true,
    logY: true,
    panelled: true,
  },
};

const PALETTE = [
  "#4269d0",
  "#efb118",
  "#ff725c",
  "#6cc5b0",
  "#3ca951",
  "#ff8ab7",
  "#a463f2",
  "#97bbf5",
  "#9c6b4e",
  "#9498a0",
] as const;

const PANEL_WIDTH = 260;
const PANEL_HEIGHT = 190;
const GAP_X = 48;
const GAP_Y = 56;
const MARGIN = { left: 72, right: 24, top: 64, bottom: 48 } as const;

function panelKey(row: ResultRow): string {
  return `K=${row.kActions}, inv temp ${row.invTemperature}`;
}

/** Aggregate rows into per-estimator, per-panel mean/band series. */
export function buildSeries(
  kind: FigureKind,
  rows: readonly ResultRow[],
): { series: Series[]; warnings: string[] } {
  const config = KIND_CONFIG[kind];
  const matching = rows.filter((r) => r.metricName === config.metric);
  if (matching.length === 0) {
    throw new SchemaError(
      `no rows with metric_name "${config.metric}" for figure kind "${kind}"`,
    );
  }
  const warnings: string[] = [];
  const series: Series[] = [];
  const byGroup = groupBy(matching, (r) =>
    JSON.stringify(
      config.panelled
        ? [r.kActions, r.invTemperature, r.estimator]
        : [null, null, r.estimator],
    ),
  );
  const keys = [...byGroup.keys()].sort((a, b) => {
    const [ka, ta, ea] = JSON.parse(a) as [number | null, number | null, string];
    const [kb, tb, eb] = JSON.parse(b) as [number | null, number | null, string];
    return (ka ?? 0) - (kb ?? 0) || (ta ?? 0) - (tb ?? 0) || ea.localeCompare(eb);
  });
  for (const key of keys) {
    const [kActions, invTemperature, estimator] = JSON.parse(key) as [
      number | null,
      number | null,
      string,
    ];
    const groupRows = byGroup.get(key)!;
    const panel = config.panelled ? panelKey(groupRows[0]!) : "";
    const byX = groupBy(groupRows, (r) => String(config.xField(r)));
    const points: SeriesPoint[] = [...byX.entries()]
      .map(([x, group]) => ({
        x: Number(x),
        ...bandPoint(group.map((r) => r.metricValue)),
      }))
      .sort((a, b) => a.x - b.x);
    if (points.some((p) => p.runs < 2)) {
      const where = panel === "" ? "" : ` in panel "${panel}"`;
      warnings.push(
        `estimator "${estimator}"${where} has a single run; confidence band omitted`,
      );
      for (const p of points) {
        p.halfWidth = 0;
      }
    }
    series.push({ estimator, panel, kActions, invTemperature, points });
  }
  return { series, warnings };
}

interface Domain {
  lo: number;
  hi: number;
}

function valueDomain(
  series: readonly Series[],
  log: boolean,
  banded: (s: Series) => boolean,
): Domain {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    const withBand = banded(s);
    for (const p of s.points) {
      const upper = withBand ? p.mean + p.halfWidth : p.mean;
      const lower = withBand ? p.mean - p.halfWidth : p.mean;
      hi = Math.max(hi, upper);
      lo = Math.min(lo, log && lower <= 0 ? p.mean : lower);
    }
  }
  if (log) {
    // Pad by a constant log-factor so lines do not sit on the frame.
    return { lo: lo / 1.5, hi: hi * 1.5 };
  }
  const pad = (hi - lo || Math.abs(hi) || 1) * 0.06;
  return { lo: lo - pad, hi: hi + pad };
}

function makeScale(
  domain: Domain,
  log: boolean,
  pixelLo: number,
  pixelHi: number,
): Scale {
  return log
    ? log10Scale(domain.lo, domain.hi, pixelLo, pixelHi)
    : linearScale(domain.lo, domain.hi, pixelLo, pixelHi);
}

function colorFor(estimators: readonly string[]): Map<string, string> {
  const colors = new Map<string, string>();
  estimators.forEach((name, i) => {
    colors.set(name, PALETTE[i % PALETTE.length]!);
  });
  return colors;
}

function renderPanel(
  panelSeries: readonly Series[],
  title: string,
  originX: number,
  originY: number,
  xScale: Scale,
  yScale: Scale,
  colors: ReadonlyMap<string, string>,
  config: KindConfig,
  bandedSeries: ReadonlySet<Series>,
  logY: boolean,
  yFloor: number,
): string {
  const parts: string[] = [];
  const left = originX;
  const right = originX + PANEL_WIDTH;
  const top = originY;
  const bottom = originY + PANEL_HEIGHT;

  if (title !== "") {
    parts.push(
      text(left + PANEL_WIDTH / 2, top - 10, title, {
        "text-anchor": "middle",
        "font-size": "12",
        class: "panel-title",
      }),
    );
  }
  parts.push(
    tag("rect", {
      x: fmt(left),
      y: fmt(top),
      width: fmt(PANEL_WIDTH),
      height: fmt(PANEL_HEIGHT),
      fill: "none",
      stroke: "#444444",
      "stroke-width": "1",
    }),
  );
  for (const value of xScale.ticks) {
    const px = xScale(value);
    parts.push(
      tag("line", {
        x1: fmt(px),
        y1: fmt(bottom),
        x2: fmt(px),
        y2: fmt(bottom + 4),
        stroke: "#444444",
        class: "x-tick",
      }),
      text(px, bottom + 16, xScale.tickLabel(value), {
        "text-anchor": "middle",
        "font-size": "10",
        class: "x-tick-label",
      }),
    );
  }
  for (const value of yScale.ticks) {
    const py = yScale(value);
    parts.push(
      tag("line", {
        x1: fmt(left - 4),
        y1: fmt(py),
        x2: fmt(left),
        y2: fmt(py),
        stroke: "#444444",
        class: "y-tick",
      }),
      text(left - 7, py + 3, yScale.tickLabel(value), {
        "text-anchor": "end",
        "font-size": "10",
        class: "y-tick-label",
      }),
    );
  }
  parts.push(
    text(left + PANEL_WIDTH / 2, bottom + 34, config.xLabel, {
      "text-anchor": "middle",
      "font-size": "11",
      class: "x-axis-label",
    }),
    text(left - 52, top + PANEL_HEIGHT / 2, config.yLabel, {
      "text-anchor": "middle",
      "font-size": "11",
      class: "y-axis-label",
      transform: `rotate(-90 ${fmt(left - 52)} ${fmt(top + PANEL_HEIGHT / 2)})`,
    }),
  );

  for (const s of panelSeries) {
    const color = colors.get(s.estimator)!;
    const linePoints = s.points.map(
      (p): [number, number] => [xScale(p.x), yScale(p.mean)],
    );
    if (bandedSeries.has(s)) {
      const upper = s.points.map(
        (p): [number, number] => [xScale(p.x), yScale(p.mean + p.halfWidth)],
      );
      const lower = s.points.map((p): [number, number] => {
        const v = p.mean - p.halfWidth;
        // A band crossing zero cannot be drawn on a log axis; clamp it to
        // the bottom of the panel instead of dropping the whole band.
        const safe = logY ? Math.max(v, yFloor) : v;
        return [xScale(p.x), yScale(safe)];
      });
      parts.push(
        tag("path", {
          d: bandPath(upper, lower),
          fill: color,
          "fill-opacity": "0.18",
          stroke: "none",
          class: "band",
          "data-estimator": s.estimator,
        }),
      );
    }
    parts.push(
      tag("path", {
        d: polylinePath(linePoints),
        fill: "none",
        stroke: color,
        "stroke-width": "1.6",
        class: "series-line",
        "data-estimator": s.estimator,
      }),
    );
  }
  return parts.join("\n");
}

/** Build the complete figure for one kind from parsed result rows. */
export function buildFigure(
  kind: FigureKind,
  rows: readonly ResultRow[],
): Figure {
  const config = KIND_CONFIG[kind];
  const { series, warnings } = buildSeries(kind, rows);

  const estimators = [...new Set(series.map((s) => s.estimator))].sort();
  const colors = colorFor(estimators);
  const bandedSeries = new Set(
    series.filter((s) => s.points.every((p) => p.runs >= 2)),
  );

  // Series arrive sorted by (k_actions, inv_temperature), so first-seen panel
  // order is the numeric grid order: one row per k, one column per temperature.
  const panels = [...new Set(series.map((s) => s.panel))];
  const columns = config.panelled
    ? new Set(series.map((s) => s.invTemperature)).size
    : 1;
  const rowsOfPanels = Math.ceil(panels.length / columns);

  const xValues = series.flatMap((s) => s.points.map((p) => p.x));
  const xDomain: Domain = {
    lo: Math.min(...xValues),
    hi: Math.max(...xValues),
  };
  // A log value axis cannot show zero or negative means; fall back to
  // linear then. Bands that cross zero are clamped at the domain floor.
  const allPositive = series.every((s) => s.points.every((p) => p.mean > 0));
  const logY = config.logY && allPositive;
  const yDomain = valueDomain(series, logY, (s) => bandedSeries.has(s));

  const width = MARGIN.left + columns * PANEL_WIDTH + (columns - 1) * GAP_X + MARGIN.right;
  const height =
    MARGIN.top + rowsOfPanels * PANEL_HEIGHT + (rowsOfPanels - 1) * GAP_Y + MARGIN.bottom;

  const body: string[] = [];
  // Legend: one swatch/label pair per estimator along the top edge.
  let legendX = MARGIN.left;
  for (const estimator of estimators) {
    body.push(
      tag("rect", {
        x: fmt(legendX),
        y: fmt(16),
        width: "14",
        height: "14",
        fill: colors.get(estimator)!,
        class: "legend-swatch",
      }),
      text(legendX + 18, 27, estimator, {
        "font-size": "11",
        class: "legend-label",
      }),
    );
    legendX += 26 + 7 * estimator.length + 16;
  }

  panels.forEach((panel, index) => {
    const col = index % columns;
    const rowIdx = Math.floor(index / columns);
    const originX = MARGIN.left + col * (PANEL_WIDTH + GAP_X);
    const originY = MARGIN.top + rowIdx * (PANEL_HEIGHT + GAP_Y);
    const xScale = makeScale(
      xDomain,
      config.logX,
      originX,
      originX + PANEL_WIDTH,
    );
    const yScale = makeScale(
      yDomain,
      logY,
      originY + PANEL_HEIGHT,
      originY,
    );
    const panelSeries = series.filter((s) => s.panel === panel);
    body.push(
      renderPanel(
        panelSeries,
        panel,
        originX,
        originY,
        xScale,
        yScale,
        colors,
        config,
        bandedSeries,
        logY,
        yDomain.lo,
      ),
    );
  });

  const svg = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(width)}" height="${fmt(
      height,
    )}" viewBox="0 0 ${fmt(width)} ${fmt(height)}" font-family="sans-serif">`,
    tag("rect", {
      x: "0",
      y: "0",
      width: fmt(width),
      height: fmt(height),
      fill: "#ffffff",
    }),
    ...body,
    "</svg>",
    "",
  ].join("\n");
  return { svg, warnings, series };
}
