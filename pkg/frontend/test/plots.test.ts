import { readFileSync } from "fs";
import path from "path";
import { describe, expect, it } from "vitest";

import { plotConvergence, plotObservables, plotRetardedSlice } from "../src/plots.js";

const FIX = path.join(__dirname, "fixtures");
const SUMMARY = JSON.parse(readFileSync(path.join(FIX, "summary.json"), "utf8"));

describe("convergence figures", () => {
  it("annotated slopes match the solver's fitted values to 2 decimals", () => {
    const cases: Array<[string, string, number]> = [
      ["gregory_k1.csv", "mean_abs_err", SUMMARY.gregory_k1.slope],
      ["gregory_k5.csv", "mean_abs_err", SUMMARY.gregory_k5.slope],
      ["test_eq_k1.csv", "err_fourier", SUMMARY.test_eq_k1.slope_fourier],
      ["test_eq_k1.csv", "err_fixpoint", SUMMARY.test_eq_k1.slope_fixpoint],
      ["test_noneq_k1.csv", "err_dyson", SUMMARY.test_noneq_k1.slope_dyson],
      ["test_noneq_k1.csv", "err_vie2", SUMMARY.test_noneq_k1.slope_vie2],
    ];
    for (const [file, columnName, expected] of cases) {
      const { svg, fits } = plotConvergence(path.join(FIX, file));
      expect(Math.abs(fits[columnName].slope - expected)).toBeLessThan(0.005);
      const annotated = fits[columnName].slope.toFixed(2);
      expect(svg).toContain(annotated);
      expect(expected.toFixed(2)).toBe(annotated);
    }
  });

  it("produces well-formed SVG", () => {
    const { svg } = plotConvergence(path.join(FIX, "gregory_k1.csv"), -3);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("expected slope -3");
    expect(svg.endsWith("</svg>")).toBe(true);
  });
});

describe("observable traces", () => {
  it("renders the hubbard observables", () => {
    const svg = plotObservables(path.join(FIX, "hubbard_2B.csv"));
    expect(svg).toContain("n1");
    expect(svg).toContain("Etot");
  });
});

describe("retarded slice", () => {
  it("renders Im G^R(t, 0) from the demo container without error", () => {
    const svg = plotRetardedSlice(path.join(FIX, "hubbard_2B.kbc"), "G");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("Im G^R(t, 0)");
  });
});
