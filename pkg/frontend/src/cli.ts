/**
 * Figure generator for fklab outputs.
 *
 *   node dist/cli.js histogram  --input summary.json --out fig.svg [--t N] [--column value]
 *   node dist/cli.js qq         --input summary.json --out fig.svg [--t N] [--column value]
 *   node dist/cli.js covariance --input summary.json --out fig.svg [--t N]
 *   node dist/cli.js decay      --input decay.json   --out fig.svg
 *
 * Inputs must carry a supported schema version; anything else is refused.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { covarianceFigure } from "./figures/covariance.js";
import { decayFigure } from "./figures/decay.js";
import { histogramFigure, qqFigure } from "./figures/normality.js";
import { DecayFile, SchemaError, Summary } from "./schema.js";

interface Args {
  kind: string;
  input: string;
  out: string;
  t?: number;
  column?: string;
}

export function parseArgs(argv: string[]): Args {
  const [kind, ...rest] = argv;
  if (!kind) throw new SchemaError("usage: <histogram|qq|covariance|decay> --input F --out F");
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || rest[i + 1] === undefined) {
      throw new SchemaError(`bad argument pair near '${key}'`);
    }
    opts[key.slice(2)] = rest[i + 1];
  }
  if (!opts.input || !opts.out) throw new SchemaError("--input and --out are required");
  return {
    kind,
    input: opts.input,
    out: opts.out,
    t: opts.t !== undefined ? Number(opts.t) : undefined,
    column: opts.column,
  };
}

export function makeFigure(args: Args): string {
  const payload = JSON.parse(readFileSync(args.input, "utf-8"));
  switch (args.kind) {
    case "histogram":
      return histogramFigure(payload as Summary, { t: args.t, column: args.column });
    case "qq":
      return qqFigure(payload as Summary, { t: args.t, column: args.column });
    case "covariance":
      return covarianceFigure(payload as Summary, { t: args.t });
    case "decay":
      return decayFigure(payload as DecayFile);
    default:
      throw new SchemaError(`unknown figure kind '${args.kind}'`);
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    writeFileSync(args.out, makeFigure(args));
    console.log(`${args.kind} -> ${args.out}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
