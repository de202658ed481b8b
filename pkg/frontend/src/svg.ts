/**
 * Minimal dependency-free SVG line plots (linear and log-log axes).
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color?: string;
  dashed?: boolean;
}

export interface PlotOptions {
  title?: string;
  xLabel?: string;
  yLabel?: string;
  logX?: boolean;
  logY?: boolean;
  width?: number;
  height?: number;
  annotations?: string[];
}

const COLORS = ["#1f61a0", "#c23b22", "#2a8c55", "#8655b5", "#b58900", "#3a7ca5"];
const MARGIN = { left: 64, right: 16, top: 34, bottom: 46 };

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const t: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) t.push(v);
  return t;
}

function logTicks(lo: number, hi: number): number[] {
  const t: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) t.push(e);
  if (t.length === 0) t.push(lo, hi);
  return t;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return String(Math.round(v * 1e6) / 1e6);
}

export function linePlot(series: Series[], opts: PlotOptions = {}): string {
  const W = opts.width ?? 640;
  const H = opts.height ?? 420;
  const iw = W - MARGIN.left - MARGIN.right;
  const ih = H - MARGIN.top - MARGIN.bottom;
  const tx = (v: number) => (opts.logX ? Math.log10(v) : v);
  const ty = (v: number) => (opts.logY ? Math.log10(v) : v);
  const xs = series.flatMap((s) => s.x.map(tx)).filter(Number.isFinite);
  const ys = series.flatMap((s) => s.y.map(ty)).filter(Number.isFinite);
  if (xs.length === 0 || ys.length === 0) throw new Error("nothing to plot");
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x1 === x0) [x0, x1] = [x0 - 1, x1 + 1];
  if (y1 === y0) [y0, y1] = [y0 - 1, y1 + 1];
  const padY = 0.05 * (y1 - y0);
  y0 -= padY;
  y1 += padY;
  const px = (v: number) => MARGIN.left + ((tx(v) - x0) / (x1 - x0)) * iw;
  const py = (v: number) => MARGIN.top + ih - ((ty(v) - y0) / (y1 - y0)) * ih;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif" font-size="12">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
  );
  const xticks = opts.logX ? logTicks(x0, x1) : niceTicks(x0, x1);
  const yticks = opts.logY ? logTicks(y0, y1) : niceTicks(y0, y1);
  for (const t of xticks) {
    const x = MARGIN.left + ((t - x0) / (x1 - x0)) * iw;
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + ih}" stroke="#ddd"/>`);
    const label = opts.logX ? `1e${t}` : fmt(t);
    parts.push(`<text x="${x}" y="${MARGIN.top + ih + 18}" text-anchor="middle">${label}</text>`);
  }
  for (const t of yticks) {
    const y = MARGIN.top + ih - ((t - y0) / (y1 - y0)) * ih;
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + iw}" y2="${y}" stroke="#ddd"/>`);
    const label = opts.logY ? `1e${t}` : fmt(t);
    parts.push(`<text x="${MARGIN.left - 6}" y="${y + 4}" text-anchor="end">${label}</text>`);
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${iw}" height="${ih}" fill="none" stroke="#444"/>`,
  );
  series.forEach((s, i) => {
    const color = s.color ?? COLORS[i % COLORS.length];
    const pts = s.x
      .map((xv, j) => [xv, s.y[j]] as const)
      .filter(([xv, yv]) => Number.isFinite(tx(xv)) && Number.isFinite(ty(yv)));
    const path = pts.map(([xv, yv], j) => `${j === 0 ? "M" : "L"}${px(xv).toFixed(2)},${py(yv).toFixed(2)}`).join(" ");
    const dash = s.dashed ? ' stroke-dasharray="6,4"' : "";
    parts.push(`<path d="${path}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`);
    for (const [xv, yv] of pts) {
      parts.push(`<circle cx="${px(xv).toFixed(2)}" cy="${py(yv).toFixed(2)}" r="2.4" fill="${color}"/>`);
    }
    parts.push(
      `<text x="${MARGIN.left + iw - 8}" y="${MARGIN.top + 16 + 16 * i}" text-anchor="end" fill="${color}">` +
      `${escapeXml(s.label)}</text>`,
    );
  });
  if (opts.title) {
    parts.push(`<text x="${W / 2}" y="20" text-anchor="middle" font-size="14">${escapeXml(opts.title)}</text>`);
  }
  if (opts.xLabel) {
    parts.push(`<text x="${MARGIN.left + iw / 2}" y="${H - 10}" text-anchor="middle">${escapeXml(opts.xLabel)}</text>`);
  }
  if (opts.yLabel) {
    parts.push(
      `<text x="16" y="${MARGIN.top + ih / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${MARGIN.top + ih / 2})">${escapeXml(opts.yLabel)}</text>`,
    );
  }
  (opts.annotations ?? []).forEach((a, i) => {
    parts.push(`<text x="${MARGIN.left + 8}" y="${MARGIN.top + 16 + 16 * i}" fill="#333">${escapeXml(a)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n");
}
