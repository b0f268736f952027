#!/usr/bin/env node
/** Command line entry point: render --in results.csv --kind ope_grid --out fig.svg */
import { parseArgs } from "node:util";

import { FIGURE_KINDS, type FigureKind } from "./figures.js";
import { render } from "./render.js";
import { SchemaError } from "./schema.js";

const USAGE =
  "usage: render --in <results.csv> --kind <learning_curve|grad_variance|ope_grid|variance_grid> --out <figure.svg>";

export function main(argv: string[]): number {
  let values: { in?: string; kind?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        kind: { type: "string" },
        out: { type: "string" },
      },
      allowPositionals: false,
    }));
  } catch (error) {
    console.error(`config error: ${(error as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  const missing = (["in", "kind", "out"] as const).filter(
    (flag) => values[flag] === undefined,
  );
  if (missing.length > 0) {
    console.error(
      `config error: missing required flag(s): ${missing
        .map((f) => `--${f}`)
        .join(", ")}`,
    );
    console.error(USAGE);
    return 2;
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(values.kind!)) {
    console.error(
      `config error: unknown figure kind "${values.kind}"; expected one of ${FIGURE_KINDS.join(", ")}`,
    );
    return 2;
  }
  try {
    render({
      input: values.in!,
      kind: values.kind as FigureKind,
      output: values.out!,
    });
  } catch (error) {
    if (error instanceof SchemaError) {
      console.error(`config error: ${error.message}`);
      return 2;
    }
    if (error instanceof Error && "code" in error) {
      // File system errors (missing input, unwritable output).
      console.error(`config error: ${error.message}`);
      return 2;
    }
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
