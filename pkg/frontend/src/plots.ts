/**
 * Figure builders over the solver's CSV / container exports:
 * log-log convergence curves with annotated least-squares slopes,
 * observable time traces, and Im G^R(t, 0) slices.
 */

import { column, readCsv } from "./csv.js";
import { fitLogLog, SlopeFit } from "./fit.js";
import { ContourGroup, loadContainer, retColumn } from "./container.js";
import { linePlot, Series } from "./svg.js";

export interface ConvergencePlot {
  svg: string;
  fits: Record<string, SlopeFit>;
}

/** Log-log error-vs-N curves from a convergence CSV; the first column is
 * the sweep variable, every other column one error curve. */
export function plotConvergence(csvPath: string, expectedSlope?: number): ConvergencePlot {
  const table = readCsv(csvPath);
  const xName = table.header[0];
  const x = column(table, xName);
  const series: Series[] = [];
  const fits: Record<string, SlopeFit> = {};
  for (const name of table.header.slice(1)) {
    const y = column(table, name);
    const fit = fitLogLog(x, y);
    fits[name] = fit;
    series.push({ label: `${name} (slope ${fit.slope.toFixed(2)})`, x, y });
  }
  const annotations = Object.entries(fits).map(
    ([name, f]) => `${name}: slope ${f.slope.toFixed(2)} (fit rms ${f.rms.toExponential(1)})`,
  );
  if (expectedSlope !== undefined) annotations.push(`expected slope ${expectedSlope}`);
  const svg = linePlot(series, {
    title: csvPath.split("/").pop(),
    xLabel: xName,
    yLabel: "error",
    logX: true,
    logY: true,
    annotations,
  });
  return { svg, fits };
}

/** Multi-series time traces (first column is time). */
export function plotObservables(csvPath: string, columns?: string[]): string {
  const table = readCsv(csvPath);
  const t = column(table, table.header[0]);
  const names = columns ?? table.header.slice(1);
  const series: Series[] = names.map((name) => ({ label: name, x: t, y: column(table, name) }));
  return linePlot(series, {
    title: csvPath.split("/").pop(),
    xLabel: table.header[0],
    yLabel: "observable",
  });
}

/** Im G^R(t, t'=j h) from a contour container. */
export function plotRetardedSlice(containerPath: string, group?: string, j = 0,
                                  orbital: [number, number] = [0, 0]): string {
  const gf: ContourGroup = loadContainer(containerPath, group);
  const col = retColumn(gf, j, orbital[0], orbital[1]);
  const series: Series[] = [{ label: `Im G^R(t, ${j})`, x: col.t, y: col.im }];
  return linePlot(series, {
    title: `retarded slice from ${containerPath.split("/").pop()}`,
    xLabel: "time step",
    yLabel: "Im G^R(t, 0)",
  });
}
