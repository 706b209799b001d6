/** Reader for the simulator's CSV flavour: '#'-prefixed provenance, then header. */

import { readFileSync } from "node:fs";
import { Provenance, SchemaError, checkProvenance } from "./schema.js";

export interface CsvTable {
  provenance: Provenance;
  columns: string[];
  rows: string[][];
}

export function readCsv(path: string): CsvTable {
  const text = readFileSync(path, "utf-8");
  const meta: Record<string, string> = {};
  let columns: string[] | null = null;
  const rows: string[][] = [];
  for (const line of text.split(/\r?\n/)) {
    if (line.startsWith("#")) {
      const body = line.slice(1);
      const sep = body.indexOf(":");
      if (sep >= 0) meta[body.slice(0, sep).trim()] = body.slice(sep + 1).trim();
    } else if (columns === null) {
      if (line.trim() === "") continue;
      columns = line.split(",");
    } else if (line.trim() !== "") {
      rows.push(line.split(","));
    }
  }
  if (columns === null) throw new SchemaError(`${path}: no header line`);
  const prov = checkProvenance(
    {
      schema_version: Number(meta["schema_version"]),
      config_hash: meta["config_hash"] ?? "",
      master_seed: Number(meta["master_seed"]),
      tool_version: meta["tool_version"] ?? "",
    },
    path,
  );
  return { provenance: prov, columns, rows };
}

export function numericColumn(table: CsvTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new SchemaError(`column '${name}' missing from CSV`);
  return table.rows.map((r) => Number(r[idx]));
}
