import Papa from "papaparse";

/** Column order of the results CSV produced by the simulator CLI. */
export const RESULT_COLUMNS = [
  "experiment",
  "estimator",
  "seed",
  "epoch",
  "k_actions",
  "inv_temperature",
  "n_logged",
  "metric_name",
  "metric_value",
] as const;

export type ResultColumn = (typeof RESULT_COLUMNS)[number];

export interface ResultRow {
  experiment: string;
  estimator: string;
  seed: number;
  epoch: number;
  kActions: number;
  invTemperature: number;
  nLogged: number;
  metricName: string;
  metricValue: number;
}

/** Raised when the input CSV does not match the results schema. */
export class SchemaError extends Error {}

function parseNumber(
  field: ResultColumn,
  raw: string,
  line: number,
  allowNonFinite: boolean,
): number {
  const value = Number(raw.trim());
  if (Number.isFinite(value)) {
    return value;
  }
  // Python writes non-finite floats as "nan"/"inf"/"-inf"; Number() maps the
  // first to NaN already but rejects the infinities.
  const lowered = raw.trim().toLowerCase();
  if (allowNonFinite) {
    if (lowered === "nan" || raw.trim() === "") {
      return NaN;
    }
    if (lowered === "inf" || lowered === "+inf" || lowered === "infinity") {
      return Infinity;
    }
    if (lowered === "-inf" || lowered === "-infinity") {
      return -Infinity;
    }
  }
  throw new SchemaError(
    `row ${line}: column "${field}" has non-numeric value "${raw}"`,
  );
}

function parseInteger(field: ResultColumn, raw: string, line: number): number {
  const value = parseNumber(field, raw, line, false);
  if (!Number.isInteger(value)) {
    throw new SchemaError(
      `row ${line}: column "${field}" must be an integer, got "${raw}"`,
    );
  }
  return value;
}

/**
 * Parse a results CSV into typed rows.
 *
 * The header must contain every column in RESULT_COLUMNS; extra columns are
 * rejected so a silently mis-shapen file cannot produce an empty figure.
 */
export function parseResultsCsv(text: string): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new SchemaError(
      `CSV parse error at row ${first.row ?? "?"}: ${first.message}`,
    );
  }
  const header = parsed.meta.fields ?? [];
  const missing = RESULT_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `results CSV is missing column(s): ${missing.join(", ")}`,
    );
  }
  const extra = header.filter(
    (c) => !(RESULT_COLUMNS as readonly string[]).includes(c),
  );
  if (extra.length > 0) {
    throw new SchemaError(
      `results CSV has unexpected column(s): ${extra.join(", ")}`,
    );
  }

  return parsed.data.map((record, index) => {
    const line = index + 2; // header occupies line 1
    const get = (field: ResultColumn): string => record[field] ?? "";
    return {
      experiment: get("experiment"),
      estimator: get("estimator"),
      seed: parseInteger("seed", get("seed"), line),
      epoch: parseInteger("epoch", get("epoch"), line),
      kActions: parseInteger("k_actions", get("k_actions"), line),
      invTemperature: parseNumber(
        "inv_temperature",
        get("inv_temperature"),
        line,
        true,
      ),
      nLogged: parseInteger("n_logged", get("n_logged"), line),
      metricName: get("metric_name"),
      metricValue: parseNumber(
        "metric_value",
        get("metric_value"),
        line,
        true,
      ),
    };
  });
}
