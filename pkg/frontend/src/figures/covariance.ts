/** Side-by-side empirical vs predicted covariance heatmaps. */

import { PerT, SchemaError, Summary, checkProvenance } from "../schema.js";
import { frobenius } from "../stats.js";
import { Svg, fmt } from "../svg.js";

const W = 760, H = 430;

function diverging(v: number, top: number): string {
  // blue (negative) -> white -> red (positive), clamped
  const t = top > 0 ? Math.max(-1, Math.min(1, v / top)) : 0;
  const lift = (c: number) => Math.round(255 - (255 - c) * Math.abs(t));
  return t >= 0
    ? `rgb(255,${lift(64)},${lift(48)})`
    : `rgb(${lift(40)},${lift(88)},255)`;
}

function heatPanel(svg: Svg, x0: number, y0: number, size: number,
                   m: number[][], top: number, label: string): void {
  const n = m.length;
  const cell = size / n;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      svg.rect(x0 + j * cell, y0 + i * cell, cell, cell,
               diverging(m[i][j], top), "#999");
      const v = m[i][j];
      svg.text(x0 + (j + 0.5) * cell, y0 + (i + 0.5) * cell + 4,
               fmt(v, 3), Math.min(12, cell / 4), "middle",
               Math.abs(v) > 0.6 * top ? "#fff" : "#111");
    }
  }
  svg.text(x0 + size / 2, y0 + size + 22, label, 13);
}

export function covarianceFigure(summary: Summary, opts: { t?: number } = {}): string {
  checkProvenance(summary.provenance, "summary");
  const pts = summary.per_t;
  if (pts.length === 0) throw new SchemaError("summary has no per-box entries");
  const pt: PerT = opts.t === undefined
    ? pts[pts.length - 1]
    : (pts.find((s) => s.t === opts.t) ??
       (() => { throw new SchemaError(`no entry for t=${opts.t}`); })());
  const emp = pt.moments.covariance;
  const pred = pt.predicted.covariance;
  if (!emp || !pred) {
    throw new SchemaError("summary lacks an empirical/predicted covariance pair");
  }
  const top = Math.max(
    ...emp.flat().map(Math.abs), ...pred.flat().map(Math.abs), 1e-300);
  const svg = new Svg(W, H);
  const size = 240;
  heatPanel(svg, 70, 90, size, emp, top, "empirical covariance");
  heatPanel(svg, 70 + size + 110, 90, size, pred, top, "predicted covariance");
  const fro = frobenius(emp, pred);
  const base = Math.sqrt(pred.flat().reduce((a, b) => a + b * b, 0));
  const rel = pt.predicted.frobenius_relative_deviation ?? (base > 0 ? fro / base : NaN);
  svg.text(W / 2, 30, `covariance of the normalized vector at t=${pt.t}`, 15);
  svg.text(W / 2, 52,
           `Frobenius deviation ${fmt(fro, 3)}  (relative ${fmt(rel * 100, 3)}%)`,
           12, "middle", "#444");
  // simple legend bar
  const lx = 70, ly = H - 46, lw = 2 * size + 110, lh = 10;
  for (let i = 0; i < 60; i++) {
    const v = -top + (i / 59) * 2 * top;
    svg.rect(lx + (i * lw) / 60, ly, lw / 60 + 0.5, lh, diverging(v, top));
  }
  svg.text(lx, ly + 24, fmt(-top, 3), 10, "start");
  svg.text(lx + lw / 2, ly + 24, "0", 10);
  svg.text(lx + lw, ly + 24, fmt(top, 3), 10, "end");
  const p = summary.provenance;
  svg.text(W - 20, H - 4,
           `config ${p.config_hash}  seed ${p.master_seed}  v${p.tool_version}`,
           9, "end", "#666");
  return svg.render();
}
