#!/usr/bin/env node
/**
 * Render SVG figures from solver outputs.
 *
 * Usage:
 *   node dist/cli.js convergence <csv> [outdir] [expectedSlope]
 *   node dist/cli.js observables <csv> [outdir]
 *   node dist/cli.js gret <container> [outdir] [group]
 */

import { mkdirSync, writeFileSync } from "fs";
import path from "path";

import { plotConvergence, plotObservables, plotRetardedSlice } from "./plots.js";

function outPath(input: string, outdir: string, suffix: string): string {
  mkdirSync(outdir, { recursive: true });
  const base = path.basename(input).replace(/\.(csv|kbc)$/, "");
  return path.join(outdir, `${base}${suffix}.svg`);
}

function main(argv: string[]): number {
  const [cmd, input, outdir = ".", extra] = argv;
  if (!cmd || !input) {
    console.error("usage: cli.js convergence|observables|gret <input> [outdir] [extra]");
    return 2;
  }
  if (cmd === "convergence") {
    const expected = extra !== undefined ? Number(extra) : undefined;
    const { svg, fits } = plotConvergence(input, expected);
    const dest = outPath(input, outdir, "_convergence");
    writeFileSync(dest, svg);
    for (const [name, f] of Object.entries(fits)) {
      console.log(`${name}: slope ${f.slope.toFixed(3)} (${f.used} points, rms ${f.rms.toExponential(2)})`);
    }
    console.log(`wrote ${dest}`);
    return 0;
  }
  if (cmd === "observables") {
    const dest = outPath(input, outdir, "_observables");
    writeFileSync(dest, plotObservables(input));
    console.log(`wrote ${dest}`);
    return 0;
  }
  if (cmd === "gret") {
    const dest = outPath(input, outdir, "_gret");
    writeFileSync(dest, plotRetardedSlice(input, extra));
    console.log(`wrote ${dest}`);
    return 0;
  }
  console.error(`unknown command ${cmd}`);
  return 2;
}

process.exit(main(process.argv.slice(2)));
