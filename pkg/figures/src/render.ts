import { readFileSync, writeFileSync } from "node:fs";

import { buildFigure, type Figure, type FigureSpec } from "./figures.js";
import { parseResultsCsv } from "./schema.js";

/**
 * Read a results CSV, build one figure kind, and write the SVG.
 *
 * The output depends only on the CSV contents and the kind: no estimator
 * math happens here, and rerunning on the same file is byte-identical.
 */
export function render(spec: FigureSpec): Figure {
  const csvText = readFileSync(spec.input, "utf-8");
  const rows = parseResultsCsv(csvText);
  const figure = buildFigure(spec.kind, rows);
  for (const warning of figure.warnings) {
    console.error(`warning: ${warning}`);
  }
  writeFileSync(spec.output, figure.svg, "utf-8");
  return figure;
}
