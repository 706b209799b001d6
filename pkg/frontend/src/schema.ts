/**
 * Shapes of the simulator's output files, plus the schema-version guard.
 * Figures are pure views: they read only the documented fields below and
 * never recompute statistics.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export interface Provenance {
  schema_version: number;
  config_hash: string;
  master_seed: number;
  tool_version: string;
}

export interface NormalityEntry {
  ks_stat?: number;
  p_value?: number;
  skew_z?: number;
  kurt_z?: number;
  skipped?: string;
}

export interface PerT {
  t: number;
  window_size: number;
  columns: string[];
  samples: number[] | number[][];
  moments: {
    mean?: number[];
    variance?: number[];
    covariance?: number[][];
  };
  normality: NormalityEntry[] | null;
  predicted: {
    variance?: number;
    covariance?: number[][];
    frobenius_relative_deviation?: number;
    fit?: DecayFitInfo;
  };
  extras: Record<string, unknown>;
}

export interface Summary {
  provenance: Provenance;
  schema_version: number;
  plan: Record<string, unknown>;
  calibration: Record<string, number> | null;
  per_t: PerT[];
}

export interface DecayFitInfo {
  rate?: number;
  r_squared?: number;
  intercept?: number;
  used_n?: number[];
  error?: string;
}

export interface DecayFile {
  provenance: Provenance;
  t: number;
  radii: number[];
  estimate: number[];
  se: (number | null)[];
  fit: DecayFitInfo | null;
}

export class SchemaError extends Error {}

export function checkProvenance(p: Provenance | undefined, source: string): Provenance {
  if (!p || typeof p.config_hash !== "string") {
    throw new SchemaError(`${source}: missing provenance block`);
  }
  if (p.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    throw new SchemaError(
      `${source}: schema version ${p.schema_version} is not supported ` +
      `(this tool reads version ${SUPPORTED_SCHEMA_VERSION})`);
  }
  return p;
}

/** Extract one column of the per-replicate sample matrix. */
export function sampleColumn(pt: PerT, column: string): number[] {
  const idx = pt.columns.indexOf(column);
  if (idx < 0) {
    throw new SchemaError(
      `column '${column}' not in [${pt.columns.join(", ")}]`);
  }
  const rows = pt.samples as number[] | number[][];
  if (rows.length === 0) throw new SchemaError("empty sample array");
  if (typeof rows[0] === "number") {
    if (idx !== 0) throw new SchemaError("scalar samples have a single column");
    return rows as number[];
  }
  return (rows as number[][]).map((r) => r[idx]);
}
