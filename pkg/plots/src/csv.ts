/**
 * Strict reader for the simulator's CSV contract: header row mandatory,
 * fields never quoted, fixed column sets per file kind.
 */

export class SchemaError extends Error {}

export type ColumnKind = "string" | "int" | "float";

export interface ColumnSpec {
  name: string;
  kind: ColumnKind;
}

export type Row = Record<string, string | number>;

export function parseCsv(text: string, columns: ColumnSpec[]): Row[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: missing header row");
  }
  const header = lines[0].split(",");
  const expected = columns.map((c) => c.name);
  for (const name of expected) {
    if (!header.includes(name)) {
      throw new SchemaError(`missing column "${name}"`);
    }
  }
  for (const name of header) {
    if (!expected.includes(name)) {
      throw new SchemaError(`unexpected column "${name}"`);
    }
  }
  if (lines.length === 1) {
    throw new SchemaError("no rows");
  }

  const index = new Map(header.map((name, i) => [name, i]));
  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length !== header.length) {
      throw new SchemaError(`row ${i}: expected ${header.length} fields, got ${fields.length}`);
    }
    const row: Row = {};
    for (const col of columns) {
      const raw = fields[index.get(col.name)!];
      if (col.kind === "string") {
        row[col.name] = raw;
        continue;
      }
      const value = Number(raw);
      if (!Number.isFinite(value) || (col.kind === "int" && !Number.isInteger(value))) {
        throw new SchemaError(`row ${i}: column "${col.name}" is not a ${col.kind}: "${raw}"`);
      }
      row[col.name] = value;
    }
    rows.push(row);
  }
  return rows;
}

export const RB_SWEEP_COLUMNS: ColumnSpec[] = [
  { name: "mcs", kind: "int" },
  { name: "size_bytes", kind: "int" },
  { name: "interval_ms", kind: "int" },
  { name: "min_rbs", kind: "int" },
];

export const PDR_SWEEP_COLUMNS: ColumnSpec[] = [
  { name: "scenario_id", kind: "string" },
  { name: "seed", kind: "int" },
  { name: "shadowing", kind: "string" },
  { name: "vehicle", kind: "int" },
  { name: "tx", kind: "int" },
  { name: "rx", kind: "int" },
  { name: "pdr", kind: "float" },
];

export const LAYER_METRICS_COLUMNS: ColumnSpec[] = [
  { name: "scenario_id", kind: "string" },
  { name: "vehicle", kind: "int" },
  { name: "layer", kind: "string" },
  { name: "mean_delay_ms", kind: "float" },
  { name: "p95_delay_ms", kind: "float" },
  { name: "throughput_kbps", kind: "float" },
];
