import path from "path";
import { describe, expect, it } from "vitest";

import { getLes, getMat, getRet, listGroups, loadContainer, retColumn, unrollRet } from "../src/container.js";

const FIX = path.join(__dirname, "fixtures");
const DEMO = path.join(FIX, "hubbard_2B.kbc");

describe("container loader", () => {
  it("lists groups and validates dataset shapes", () => {
    expect(listGroups(DEMO)).toEqual(["G", "Sigma"]);
    const gf = loadContainer(DEMO, "G");
    const ntri = ((gf.nt + 1) * (gf.nt + 2)) / 2;
    expect(gf.ret.length).toBe(2 * ntri * gf.size1 * gf.size1);
    expect(gf.les.length).toBe(2 * ntri * gf.size1 * gf.size1);
    expect(gf.mat.length).toBe(2 * (gf.ntau + 1) * gf.size1 * gf.size1);
    expect(gf.tv.length).toBe(2 * (gf.nt + 1) * (gf.ntau + 1) * gf.size1 * gf.size1);
    expect(gf.sig).toBe(-1);
    expect(gf.size1).toBe(2);
  });

  it("exposes physically meaningful values", () => {
    const gf = loadContainer(DEMO, "G");
    // equal-time retarded component is -i * identity
    for (const n of [0, Math.floor(gf.nt / 2), gf.nt]) {
      const diag = getRet(gf, n, n, 0, 0);
      expect(diag.re).toBeCloseTo(0, 10);
      expect(diag.im).toBeCloseTo(-1, 10);
      const off = getRet(gf, n, n, 0, 1);
      expect(Math.hypot(off.re, off.im)).toBeLessThan(1e-10);
    }
    // Matsubara endpoint gives minus the density matrix: half filling
    const occ = getMat(gf, gf.ntau, 0, 0);
    expect(-occ.re).toBeCloseTo(0.5, 4);
  });

  it("unrolls the triangular storage", () => {
    const gf = loadContainer(DEMO, "G");
    const t0 = retColumn(gf, 0);
    expect(t0.t.length).toBe(gf.nt + 1);
    expect(t0.im[0]).toBeCloseTo(-1, 10);
    const dense = unrollRet(gf);
    expect(dense.length).toBe(gf.nt + 1);
    expect(dense[3][5]).toEqual([0, 0]); // above the diagonal
    const v = getRet(gf, 5, 3);
    expect(dense[5][3][0]).toBe(v.re);
    expect(dense[5][3][1]).toBe(v.im);
  });

  it("rejects bad indices and bad files", () => {
    const gf = loadContainer(DEMO, "G");
    expect(() => getRet(gf, 2, 5)).toThrow();
    expect(() => getLes(gf, 5, 2)).toThrow();
    expect(() => loadContainer(DEMO, "nope")).toThrow();
    expect(() => loadContainer(path.join(FIX, "gregory_k1.csv"))).toThrow(/magic/);
  });
});
