/**
 * Log-log slope fit with the same selection rule as the solver's own
 * summaries: drop round-off-floor points (err <= floor), then fit the
 * asymptotic half of the sweep (largest x), at least 4 and at most
 * maxPoints points.
 */

export interface SlopeFit {
  slope: number;
  intercept: number;
  rms: number;
  used: number;
}

export function fitLogLog(
  x: number[],
  err: number[],
  floor = 1e-12,
  maxPoints = 10,
): SlopeFit {
  if (x.length !== err.length) throw new Error("x and err lengths differ");
  // drop saturated points: at the absolute floor or within 3x of the
  // smallest observed error (curve flattened onto a secondary source)
  const minErr = Math.min(...err);
  let cut = Math.max(floor, 3 * minErr);
  if (err.filter((e) => e > cut).length < 4) cut = floor;
  const pairs = x
    .map((xi, i) => [xi, err[i]] as const)
    .filter(([, e]) => e > cut)
    .sort((a, b) => a[0] - b[0]);
  if (pairs.length < 2) throw new Error("not enough points above the floor");
  const use = Math.min(maxPoints, Math.max(4, Math.floor(pairs.length / 2)), pairs.length);
  const tail = pairs.slice(-use);
  const lx = tail.map(([xi]) => Math.log(xi));
  const le = tail.map(([, e]) => Math.log(e));
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = le.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (le[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ss = 0;
  for (let i = 0; i < n; i++) {
    const fit = slope * lx[i] + intercept;
    ss += (le[i] - fit) * (le[i] - fit);
  }
  return { slope, intercept, rms: Math.sqrt(ss / n), used: n };
}
