/**
 * Reader for the contour container format: magic line, length-prefixed
 * JSON manifest, then little-endian float64 (re, im) pairs per dataset.
 *
 * The triangular ret/les storages are kept flat (index n(n+1)/2 + j) with
 * accessors, and can be unrolled to dense [t][t'] grids for plotting.
 */

import { readFileSync } from "fs";

const MAGIC = "#kbcontour-container v1\n";

export interface Complex {
  re: number;
  im: number;
}

export interface ContourGroup {
  nt: number;
  ntau: number;
  size1: number;
  size2: number;
  sig: number;
  elementSize: number;
  mat: Float64Array; // interleaved re,im
  ret: Float64Array;
  les: Float64Array;
  tv: Float64Array;
}

interface DatasetEntry {
  offset: number;
  count: number;
}

function triIndex(n: number, j: number): number {
  return (n * (n + 1)) / 2 + j;
}

export function listGroups(path: string): string[] {
  const { manifest } = readManifest(readFileSync(path));
  return Object.keys(manifest.groups).sort();
}

function readManifest(buf: Buffer): { manifest: any; dataStart: number } {
  const magic = buf.subarray(0, MAGIC.length).toString("utf8");
  if (magic !== MAGIC) throw new Error("not a contour container (bad magic)");
  let pos = MAGIC.length;
  const nl = buf.indexOf(0x0a, pos);
  const hlen = parseInt(buf.subarray(pos, nl).toString("utf8"), 10);
  if (!Number.isFinite(hlen)) throw new Error("malformed manifest length");
  const manifest = JSON.parse(buf.subarray(nl + 1, nl + 1 + hlen).toString("utf8"));
  if (!manifest.groups) throw new Error("malformed manifest: no groups");
  return { manifest, dataStart: nl + 1 + hlen };
}

export function loadContainer(path: string, group?: string): ContourGroup {
  const buf = readFileSync(path);
  const { manifest, dataStart } = readManifest(buf);
  const names = Object.keys(manifest.groups);
  const name = group ?? (names.length === 1 ? names[0] : undefined);
  if (name === undefined) throw new Error(`pick one of groups: ${names.join(", ")}`);
  const g = manifest.groups[name];
  if (!g) throw new Error(`no group ${name} in container`);
  const nt: number = g.nt;
  const ntau: number = g.ntau;
  const d: number = g.size1;
  const ntri = nt >= 0 ? ((nt + 1) * (nt + 2)) / 2 : 0;
  const expected: Record<string, number> = {
    mat: (ntau + 1) * d * d,
    ret: ntri * d * d,
    les: ntri * d * d,
    tv: nt >= 0 ? (nt + 1) * (ntau + 1) * d * d : 0,
  };
  const read = (comp: string): Float64Array => {
    const ds: DatasetEntry = g.datasets[comp];
    if (ds.count !== expected[comp]) {
      throw new Error(
        `dataset ${comp} has ${ds.count} elements, header implies ${expected[comp]}`,
      );
    }
    const start = dataStart + ds.offset;
    const bytes = 16 * ds.count;
    if (start + bytes > buf.length) throw new Error(`dataset ${comp} truncated`);
    // copy to an aligned buffer; Buffer slices may be unaligned for f64 views
    const out = new Float64Array(2 * ds.count);
    for (let i = 0; i < 2 * ds.count; i++) out[i] = buf.readDoubleLE(start + 8 * i);
    return out;
  };
  return {
    nt,
    ntau,
    size1: d,
    size2: g.size2,
    sig: g.sig,
    elementSize: g.element_size,
    mat: read("mat"),
    ret: read("ret"),
    les: read("les"),
    tv: read("tv"),
  };
}

function pick(flat: Float64Array, d: number, element: number, a: number, b: number): Complex {
  const base = 2 * (element * d * d + a * d + b);
  return { re: flat[base], im: flat[base + 1] };
}

/** C^R(n h, j h) for j <= n. */
export function getRet(gf: ContourGroup, n: number, j: number, a = 0, b = 0): Complex {
  if (j > n || n > gf.nt) throw new Error(`ret index (${n}, ${j}) out of range`);
  return pick(gf.ret, gf.size1, triIndex(n, j), a, b);
}

/** C^<(j h, n h) for j <= n. */
export function getLes(gf: ContourGroup, j: number, n: number, a = 0, b = 0): Complex {
  if (j > n || n > gf.nt) throw new Error(`les index (${j}, ${n}) out of range`);
  return pick(gf.les, gf.size1, triIndex(n, j), a, b);
}

export function getTv(gf: ContourGroup, n: number, m: number, a = 0, b = 0): Complex {
  if (n > gf.nt || m > gf.ntau) throw new Error(`tv index (${n}, ${m}) out of range`);
  return pick(gf.tv, gf.size1, n * (gf.ntau + 1) + m, a, b);
}

export function getMat(gf: ContourGroup, m: number, a = 0, b = 0): Complex {
  if (m > gf.ntau) throw new Error(`mat index ${m} out of range`);
  return pick(gf.mat, gf.size1, m, a, b);
}

/** Retarded column C^R(t, j h) as arrays over the time index t >= j. */
export function retColumn(gf: ContourGroup, j: number, a = 0, b = 0) {
  const t: number[] = [];
  const re: number[] = [];
  const im: number[] = [];
  for (let n = j; n <= gf.nt; n++) {
    const v = getRet(gf, n, j, a, b);
    t.push(n);
    re.push(v.re);
    im.push(v.im);
  }
  return { t, re, im };
}

/** Dense [t][t'] unroll of the triangular retarded storage (small files). */
export function unrollRet(gf: ContourGroup, a = 0, b = 0): number[][][] {
  const out: number[][][] = [];
  for (let n = 0; n <= gf.nt; n++) {
    const row: number[][] = [];
    for (let j = 0; j <= gf.nt; j++) {
      if (j <= n) {
        const v = getRet(gf, n, j, a, b);
        row.push([v.re, v.im]);
      } else {
        row.push([0, 0]);
      }
    }
    out.push(row);
  }
  return out;
}
