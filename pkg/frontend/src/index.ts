/**
 * Node bindings for the cdeforest conditional density estimation engine.
 *
 * The wrapper contains zero numerics: every call marshals arrays to CSV,
 * shells out to the `cdeforest` CLI, and parses the numbers the core wrote.
 * Models live on disk as the core's versioned JSON documents; a BoundForest
 * is a handle to one such file plus the CLI invocation that owns it.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Mirrors the core package version. */
export const VERSION = "0.1.0";

export interface TrainOptions {
  nTrees?: number;
  mtry?: number;
  nodeSize?: number;
  nBasis?: number;
  criterion?: "cde" | "mse";
  bootstrap?: boolean;
  seed?: number;
  threads?: number;
}

export interface CliOptions {
  /** CLI invocation, e.g. ["cdeforest"] or ["python3", "-m", "cdeforest"]. */
  command?: string[];
  /** Extra environment variables for the spawned CLI. */
  env?: Record<string, string>;
}

export type ForestOptions = TrainOptions & CliOptions;

/** One response dimension of an evaluation grid (maps to --grid=min:max:steps). */
export interface GridSpec {
  min: number;
  max: number;
  steps: number;
}

export type Bandwidth = number | number[] | "adaptive";

const DEFAULT_COMMAND = ["cdeforest"];

function resolveCommand(opts: CliOptions): string[] {
  if (opts.command && opts.command.length > 0) return opts.command;
  const fromEnv = process.env.CDEFOREST_CLI;
  if (fromEnv) return fromEnv.split(/\s+/).filter((s) => s.length > 0);
  return DEFAULT_COMMAND;
}

function runCli(command: string[], env: Record<string, string>, args: string[]): void {
  const proc = spawnSync(command[0], [...command.slice(1), ...args], {
    env: { ...process.env, ...env },
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw new Error(`failed to launch ${command[0]}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr ?? "").trim();
    throw new Error(`cdeforest ${args[0]} exited with ${proc.status}: ${detail}`);
  }
}

function assertFiniteMatrix(rows: number[][], what: string): void {
  for (const row of rows) {
    if (row.length !== rows[0].length) {
      throw new Error(`${what} rows have inconsistent lengths`);
    }
    for (const v of row) {
      if (!Number.isFinite(v)) throw new Error(`${what} contains a non-finite value`);
    }
  }
}

function toMatrix(data: number[] | number[][], what: string): number[][] {
  if (data.length === 0) throw new Error(`${what} is empty`);
  const rows = typeof data[0] === "number"
    ? (data as number[]).map((v) => [v])
    : (data as number[][]).map((row) => [...row]);
  assertFiniteMatrix(rows, what);
  return rows;
}

function writeCsv(path: string, header: string[], rows: number[][]): void {
  const lines = [header.join(",")];
  for (const row of rows) lines.push(row.map((v) => String(v)).join(","));
  writeFileSync(path, lines.join("\n") + "\n", "utf8");
}

function parseCsv(path: string): { header: string[]; rows: number[][] } {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((line) => line.length > 0);
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map(Number);
    if (cells.some((v) => Number.isNaN(v))) {
      throw new Error(`${path}:${i + 2}: non-numeric field in CLI output`);
    }
    return cells;
  });
  return { header, rows };
}

/** Handle to a trained forest; valid until dispose() removes its files. */
export class BoundForest {
  readonly modelPath: string;
  readonly nFeatures: number;
  readonly responseDim: number;
  private readonly workDir: string;
  private readonly command: string[];
  private readonly env: Record<string, string>;
  private disposed = false;

  constructor(
    modelPath: string,
    workDir: string,
    command: string[],
    env: Record<string, string>,
  ) {
    this.modelPath = modelPath;
    this.workDir = workDir;
    this.command = command;
    this.env = env;
    const doc = JSON.parse(readFileSync(modelPath, "utf8")) as {
      n_features: number;
      response_dim: number;
    };
    this.nFeatures = doc.n_features;
    this.responseDim = doc.response_dim;
  }

  /** @internal */
  run(args: string[]): void {
    if (this.disposed) throw new Error("forest handle has been disposed");
    runCli(this.command, this.env, args);
  }

  /** @internal */
  scratch(name: string): string {
    if (this.disposed) throw new Error("forest handle has been disposed");
    return join(this.workDir, name);
  }

  dispose(): void {
    if (!this.disposed) {
      rmSync(this.workDir, { recursive: true, force: true });
      this.disposed = true;
    }
  }
}

/**
 * Train a forest. Mirrors the core fit: `zTrain` may be one response
 * column (number[]) or an (n x d) matrix for joint responses.
 */
export function RFCDE(
  xTrain: number[][],
  zTrain: number[] | number[][],
  opts: ForestOptions = {},
): BoundForest {
  const x = toMatrix(xTrain, "xTrain");
  const z = toMatrix(zTrain, "zTrain");
  if (x.length !== z.length) {
    throw new Error(`xTrain has ${x.length} rows but zTrain has ${z.length}`);
  }
  const p = x[0].length;
  const d = z[0].length;
  const xNames = Array.from({ length: p }, (_, i) => `x${i + 1}`);
  const zNames = d === 1 ? ["z"] : Array.from({ length: d }, (_, i) => `z${i + 1}`);

  const command = resolveCommand(opts);
  const env = opts.env ?? {};
  const workDir = mkdtempSync(join(tmpdir(), "cdeforest-"));
  try {
    const dataPath = join(workDir, "train.csv");
    writeCsv(dataPath, [...xNames, ...zNames], x.map((row, i) => [...row, ...z[i]]));
    const modelPath = join(workDir, "model.json");
    const args = [
      "train",
      "--data", dataPath,
      "--response-cols", zNames.join(","),
      "--out", modelPath,
    ];
    if (opts.nTrees !== undefined) args.push("--ntrees", String(opts.nTrees));
    if (opts.mtry !== undefined) args.push("--mtry", String(opts.mtry));
    if (opts.nodeSize !== undefined) args.push("--node-size", String(opts.nodeSize));
    if (opts.nBasis !== undefined) args.push("--n-basis", String(opts.nBasis));
    if (opts.criterion !== undefined) args.push("--criterion", opts.criterion);
    if (opts.bootstrap !== undefined) args.push("--bootstrap", opts.bootstrap ? "on" : "off");
    if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
    if (opts.threads !== undefined) args.push("--threads", String(opts.threads));
    runCli(command, env, args);
    return new BoundForest(modelPath, workDir, command, env);
  } catch (err) {
    rmSync(workDir, { recursive: true, force: true });
    throw err;
  }
}

/**
 * Canonicalize a grid argument to per-dimension specs. A plain number[] must
 * be evenly spaced; it is converted to its min/max/steps form (the core
 * regenerates the axis, so supply specs when exact grid points matter).
 */
function toGridSpecs(zGrid: GridSpec[] | GridSpec | number[], responseDim: number): GridSpec[] {
  let specs: GridSpec[];
  if (Array.isArray(zGrid) && zGrid.length > 0 && typeof zGrid[0] === "number") {
    const axis = zGrid as number[];
    if (axis.length < 2) throw new Error("grid needs at least 2 points");
    const spec = { min: axis[0], max: axis[axis.length - 1], steps: axis.length };
    const scale = Math.max(1, Math.abs(spec.min), Math.abs(spec.max));
    const step = (spec.max - spec.min) / (spec.steps - 1);
    axis.forEach((v, i) => {
      if (Math.abs(v - (spec.min + i * step)) > 1e-9 * scale) {
        throw new Error("number[] grids must be evenly spaced; pass a GridSpec instead");
      }
    });
    specs = [spec];
  } else if (Array.isArray(zGrid)) {
    specs = zGrid as GridSpec[];
  } else {
    specs = [zGrid];
  }
  if (specs.length !== responseDim) {
    throw new Error(`grid has ${specs.length} dimension(s), model expects ${responseDim}`);
  }
  return specs;
}

function bandwidthArg(bandwidth: Bandwidth): string {
  if (bandwidth === "adaptive") return "adaptive";
  if (typeof bandwidth === "number") return String(bandwidth);
  return bandwidth.map((v) => String(v)).join(",");
}

/**
 * Conditional density estimates: one row per query, one column per grid
 * point (row-major over the grid lattice, last dimension fastest).
 */
export function predict(
  forest: BoundForest,
  xNew: number[][] | number[],
  zGrid: GridSpec[] | GridSpec | number[],
  bandwidth: Bandwidth,
): number[][] {
  const queries = toMatrix(xNew, "xNew");
  const specs = toGridSpecs(zGrid, forest.responseDim);
  const queryPath = forest.scratch("queries.csv");
  writeCsv(
    queryPath,
    Array.from({ length: queries[0].length }, (_, i) => `x${i + 1}`),
    queries,
  );
  const outPath = forest.scratch("predict.csv");
  const args = ["predict", "--model", forest.modelPath, "--data", queryPath,
                "--bandwidth", bandwidthArg(bandwidth), "--out", outPath];
  for (const s of specs) args.push(`--grid=${s.min}:${s.max}:${s.steps}`);
  forest.run(args);

  const { rows } = parseCsv(outPath);
  const out: number[][] = queries.map(() => []);
  for (const row of rows) {
    out[row[0]].push(row[row.length - 1]);
  }
  return out;
}

/** Forest weight vectors: one row per query, one column per training row. */
export function weights(forest: BoundForest, xNew: number[][] | number[]): number[][] {
  const queries = toMatrix(xNew, "xNew");
  const queryPath = forest.scratch("queries.csv");
  writeCsv(
    queryPath,
    Array.from({ length: queries[0].length }, (_, i) => `x${i + 1}`),
    queries,
  );
  const outPath = forest.scratch("weights.csv");
  forest.run(["weights", "--model", forest.modelPath, "--data", queryPath,
              "--out", outPath]);
  const { rows } = parseCsv(outPath);
  const out: number[][] = queries.map(() => []);
  for (const row of rows) {
    out[row[0]][row[1]] = row[2];
  }
  return out;
}
