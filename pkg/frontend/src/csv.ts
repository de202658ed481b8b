/**
 * Reader for the solver CSV exports: one header line, comma separators,
 * '.' decimals.
 */

import { readFileSync } from "fs";

export interface CsvTable {
  header: string[];
  rows: number[][];
}

export function readCsv(path: string): CsvTable {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length < 1) throw new Error(`empty CSV: ${path}`);
  const header = lines[0].split(",").map((s) => s.trim());
  const rows = lines.slice(1).map((line, i) => {
    const vals = line.split(",").map(Number);
    if (vals.length !== header.length || vals.some(Number.isNaN)) {
      throw new Error(`malformed CSV row ${i + 2} in ${path}`);
    }
    return vals;
  });
  return { header, rows };
}

export function column(table: CsvTable, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new Error(`no column ${name} (have ${table.header.join(", ")})`);
  return table.rows.map((r) => r[idx]);
}
