/** Semilog radial-connection decay: points, error bars, fitted exponential. */

import { DecayFile, SchemaError, checkProvenance } from "../schema.js";
import { Svg, fmt, linearScale, ticks } from "../svg.js";

const W = 720, H = 480, ML = 80, MR = 25, MT = 48, MB = 64;

export function decayFigure(data: DecayFile): string {
  checkProvenance(data.provenance, "decay file");
  if (!data.radii || data.radii.length === 0) {
    throw new SchemaError("decay file has no radii");
  }
  const pts = data.radii
    .map((n, i) => ({ n, est: data.estimate[i], se: data.se[i] ?? 0 }))
    .filter((p) => p.est > 0);
  if (pts.length === 0) throw new SchemaError("no positive estimates to plot");
  const logs = pts.map((p) => Math.log10(p.est));
  const yLo = Math.min(...logs) - 0.4;
  const yHi = Math.max(...logs) + 0.4;
  const x = linearScale(
    [data.radii[0] - 0.5, data.radii[data.radii.length - 1] + 0.5], [ML, W - MR]);
  const y = linearScale([yLo, yHi], [H - MB, MT]);
  const svg = new Svg(W, H);
  svg.line(ML, H - MB, W - MR, H - MB);
  svg.line(ML, MT, ML, H - MB);
  for (const tx of ticks(x.domain[0], x.domain[1], 8)) {
    if (!Number.isInteger(tx)) continue;
    svg.line(x(tx), H - MB, x(tx), H - MB + 5);
    svg.text(x(tx), H - MB + 20, fmt(tx), 11);
  }
  for (let e = Math.ceil(yLo); e <= Math.floor(yHi); e++) {
    svg.line(ML - 5, y(e), ML, y(e));
    svg.text(ML - 9, y(e) + 4, `1e${e}`, 11, "end");
    svg.line(ML, y(e), W - MR, y(e), "#ddd", 0.5);
  }
  svg.text((ML + W - MR) / 2, H - 18, "radius n", 13);
  svg.raw(`<g transform="rotate(-90 20 ${(MT + H - MB) / 2})">`);
  svg.text(20, (MT + H - MB) / 2, "connection probability", 13);
  svg.raw(`</g>`);
  // fitted line exp(intercept - rate * n), drawn across the data range
  const fit = data.fit;
  let fitTxt = "no usable fit";
  if (fit && fit.rate !== undefined && fit.intercept !== undefined) {
    const toLog10 = Math.LOG10E;
    const lineOf = (n: number) => (fit.intercept! - fit.rate! * n) * toLog10;
    const n0 = pts[0].n, n1 = pts[pts.length - 1].n;
    svg.line(x(n0), y(lineOf(n0)), x(n1), y(lineOf(n1)), "#b03030", 1.8);
    fitTxt = `rate=${fmt(fit.rate, 4)}  R²=${fmt(fit.r_squared ?? NaN, 4)}`;
  }
  for (const p of pts) {
    if (p.se > 0 && p.se < p.est) {
      svg.line(x(p.n), y(Math.log10(p.est - p.se)), x(p.n), y(Math.log10(p.est + p.se)),
               "#2a5d8a", 1);
    }
    svg.circle(x(p.n), y(Math.log10(p.est)), 3, "#2a5d8a");
  }
  svg.text(W / 2, 24, `radial connection decay at t=${data.t}`, 15);
  svg.text(W / 2, 42, fitTxt, 12, "middle", "#444");
  const pr = data.provenance;
  svg.text(W - MR, H - 4,
           `config ${pr.config_hash}  seed ${pr.master_seed}  v${pr.tool_version}`,
           9, "end", "#666");
  return svg.render();
}
