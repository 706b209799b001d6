export { histogramFigure, qqFigure } from "./figures/normality.js";
export { covarianceFigure } from "./figures/covariance.js";
export { decayFigure } from "./figures/decay.js";
export { readCsv, numericColumn } from "./csv.js";
export { makeFigure, parseArgs } from "./cli.js";
export type { Summary, DecayFile, PerT, Provenance } from "./schema.js";
export { SchemaError, checkProvenance, sampleColumn, SUPPORTED_SCHEMA_VERSION } from "./schema.js";
