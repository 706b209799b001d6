/** Histogram with fitted-normal overlay, and a normal QQ plot, per statistic. */

import { PerT, SchemaError, Summary, checkProvenance, sampleColumn } from "../schema.js";
import { mean, normalPdf, normalQuantile, stdev } from "../stats.js";
import { Svg, fmt, linearScale, ticks } from "../svg.js";

const W = 720, H = 480, ML = 70, MR = 25, MT = 48, MB = 64;

function pickPerT(summary: Summary, t?: number): PerT {
  if (summary.per_t.length === 0) throw new SchemaError("summary has no per-box entries");
  if (t === undefined) return summary.per_t[summary.per_t.length - 1];
  const hit = summary.per_t.find((s) => s.t === t);
  if (!hit) throw new SchemaError(`no entry for t=${t}`);
  return hit;
}

function frame(svg: Svg, x: ReturnType<typeof linearScale>, y: ReturnType<typeof linearScale>,
               xlabel: string, ylabel: string): void {
  svg.line(ML, H - MB, W - MR, H - MB);
  svg.line(ML, MT, ML, H - MB);
  for (const tx of ticks(x.domain[0], x.domain[1], 6)) {
    svg.line(x(tx), H - MB, x(tx), H - MB + 5);
    svg.text(x(tx), H - MB + 20, fmt(tx), 11);
  }
  for (const ty of ticks(y.domain[0], y.domain[1], 5)) {
    svg.line(ML - 5, y(ty), ML, y(ty));
    svg.text(ML - 9, y(ty) + 4, fmt(ty), 11, "end");
    svg.line(ML, y(ty), W - MR, y(ty), "#ddd", 0.5);
  }
  svg.text((ML + W - MR) / 2, H - 18, xlabel, 13);
  svg.raw(`<g transform="rotate(-90 18 ${(MT + H - MB) / 2})">`);
  svg.text(18, (MT + H - MB) / 2, ylabel, 13);
  svg.raw(`</g>`);
}

function footer(svg: Svg, summary: Summary): void {
  const p = summary.provenance;
  svg.text(W - MR, H - 4,
           `config ${p.config_hash}  seed ${p.master_seed}  v${p.tool_version}`,
           9, "end", "#666");
}

export function histogramFigure(summary: Summary, opts: { t?: number; column?: string } = {}): string {
  checkProvenance(summary.provenance, "summary");
  const pt = pickPerT(summary, opts.t);
  const column = opts.column ?? pt.columns[0];
  const xs = sampleColumn(pt, column);
  if (xs.length < 2) throw new SchemaError("need at least two samples for a histogram");
  const mu = mean(xs), sd = stdev(xs);
  const nBins = Math.max(1, Math.ceil(Math.sqrt(xs.length)));
  const lo = Math.min(...xs), hi = Math.max(...xs);
  const span = hi - lo || 1;
  const binW = span / nBins;
  const counts = new Array<number>(nBins).fill(0);
  for (const v of xs) {
    counts[Math.min(nBins - 1, Math.floor((v - lo) / binW))]++;
  }
  const density = counts.map((c) => c / (xs.length * binW));
  let peak = Math.max(...density);
  if (sd > 0) peak = Math.max(peak, normalPdf(mu, mu, sd));
  const x = linearScale([lo - 0.02 * span, hi + 0.02 * span], [ML, W - MR]);
  const y = linearScale([0, peak * 1.08], [H - MB, MT]);
  const svg = new Svg(W, H);
  frame(svg, x, y, column, "density");
  for (let i = 0; i < nBins; i++) {
    if (counts[i] === 0) continue;
    svg.rect(x(lo + i * binW), y(density[i]),
             x(lo + (i + 1) * binW) - x(lo + i * binW),
             y(0) - y(density[i]), "#89aec9", "#3c5a73");
  }
  if (sd > 0) {
    const pts: Array<[number, number]> = [];
    for (let i = 0; i <= 200; i++) {
      const v = x.domain[0] + (i / 200) * (x.domain[1] - x.domain[0]);
      pts.push([x(v), y(normalPdf(v, mu, sd))]);
    }
    svg.path(pts, "#b03030", 2);
  }
  const norm = pt.normality?.[pt.columns.indexOf(column)];
  const pTxt = norm && norm.p_value !== undefined ? `  KS p=${fmt(norm.p_value, 3)}` : "";
  svg.text(W / 2, 24, `${column} at t=${pt.t}: histogram vs fitted normal`, 15);
  svg.text(W / 2, 42,
           `n=${xs.length}  mean=${fmt(mu)}  sd=${fmt(sd)}${pTxt}`, 11, "middle", "#444");
  footer(svg, summary);
  return svg.render();
}

export function qqFigure(summary: Summary, opts: { t?: number; column?: string } = {}): string {
  checkProvenance(summary.provenance, "summary");
  const pt = pickPerT(summary, opts.t);
  const column = opts.column ?? pt.columns[0];
  const xs = [...sampleColumn(pt, column)].sort((a, b) => a - b);
  if (xs.length < 3) throw new SchemaError("need at least three samples for a QQ plot");
  const mu = mean(xs), sd = stdev(xs);
  const n = xs.length;
  const theo = xs.map((_, i) => normalQuantile((i + 0.5) / n));
  const tLo = theo[0], tHi = theo[n - 1];
  const x = linearScale([tLo * 1.05, tHi * 1.05], [ML, W - MR]);
  const lo = xs[0], hi = xs[n - 1];
  const pad = 0.05 * (hi - lo || 1);
  const y = linearScale([lo - pad, hi + pad], [H - MB, MT]);
  const svg = new Svg(W, H);
  frame(svg, x, y, "normal quantile", column);
  // reference line through the fitted moments
  svg.line(x(tLo), y(mu + sd * tLo), x(tHi), y(mu + sd * tHi), "#b03030", 1.5, "6 3");
  const step = Math.max(1, Math.floor(n / 800));  // cap the marker count
  for (let i = 0; i < n; i += step) {
    svg.circle(x(theo[i]), y(xs[i]), 2, "#2a5d8a");
  }
  svg.text(W / 2, 24, `${column} at t=${pt.t}: normal QQ plot`, 15);
  svg.text(W / 2, 42, `n=${n}  mean=${fmt(mu)}  sd=${fmt(sd)}`, 11, "middle", "#444");
  footer(svg, summary);
  return svg.render();
}
