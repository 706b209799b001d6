/**
 * Minimal deterministic SVG assembly: fixed-precision formatting, no DOM.
 * Figures must be byte-stable for fixed inputs, so all numbers pass
 * through fmt() and element order is the call order.
 */

export function fmt(x: number, digits = 4): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(digits);
  return s.includes(".") || s.includes("e")
    ? s.replace(/(\.\d*?)0+(?=$|e)/, "$1").replace(/\.(?=$|e)/, "")
    : s;
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="100%" height="100%" fill="white"/>`,
    );
  }

  raw(s: string): this {
    this.parts.push(s);
    return this;
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#222", width = 1, dash = ""): this {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    return this.raw(`<line x1="${fmt(x1, 6)}" y1="${fmt(y1, 6)}" x2="${fmt(x2, 6)}" ` +
      `y2="${fmt(y2, 6)}" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): this {
    return this.raw(`<rect x="${fmt(x, 6)}" y="${fmt(y, 6)}" width="${fmt(w, 6)}" ` +
      `height="${fmt(h, 6)}" fill="${fill}" stroke="${stroke}"/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string): this {
    return this.raw(`<circle cx="${fmt(cx, 6)}" cy="${fmt(cy, 6)}" r="${r}" fill="${fill}"/>`);
  }

  path(points: Array<[number, number]>, stroke: string, width = 1.5): this {
    const d = points
      .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x, 6)} ${fmt(y, 6)}`)
      .join(" ");
    return this.raw(`<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  text(x: number, y: number, s: string, size = 12,
       anchor: "start" | "middle" | "end" = "middle", fill = "#111"): this {
    const esc = s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
    return this.raw(`<text x="${fmt(x, 6)}" y="${fmt(y, 6)}" font-size="${size}" ` +
      `text-anchor="${anchor}" fill="${fill}">${esc}</text>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

/** Round-numbered tick positions covering the domain (about n of them). */
export function ticks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / n)));
  const err = (hi - lo) / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * s; v += s) {
    out.push(Math.abs(v) < s / 1e6 ? 0 : v);
  }
  return out;
}
