/** The preparation pipeline: subsample, UMAP-reduce, rescale, write CSVs. */

import { writeFileSync, mkdirSync, renameSync } from "node:fs";
import { dirname, join } from "node:path";
import { UMAP } from "umap-js";

import type { MnistSplit } from "./mnist.js";
import { mulberry32, shuffledIndices } from "./rng.js";

export interface PrepConfig {
  outDir: string;
  dim: number; // target dimensionality (default 7)
  fraction: number; // stratified subsample fraction (default 0.10)
  seed: number;
  nNeighbors?: number;
  minDist?: number;
}

export interface PrepResult {
  trainCsv: string;
  testCsv: string;
  trainRows: number;
  testRows: number;
}

export function validateConfig(cfg: PrepConfig): void {
  if (!(cfg.fraction > 0 && cfg.fraction <= 1)) {
    throw new Error("fraction must lie in (0, 1]");
  }
  if (!(Number.isInteger(cfg.dim) && cfg.dim >= 2)) {
    throw new Error("dim must be an integer >= 2");
  }
}

/** Per-class sampling keeping round(fraction * classCount) of each class. */
export function stratifiedSubsample(
  labels: number[],
  fraction: number,
  rand: () => number,
): number[] {
  if (fraction >= 1) {
    return labels.map((_, i) => i);
  }
  const byClass = new Map<number, number[]>();
  labels.forEach((label, i) => {
    const bucket = byClass.get(label) ?? [];
    bucket.push(i);
    byClass.set(label, bucket);
  });
  const chosen: number[] = [];
  for (const [, idx] of [...byClass.entries()].sort((a, b) => a[0] - b[0])) {
    const take = Math.round(fraction * idx.length);
    const order = shuffledIndices(idx.length, rand);
    for (let k = 0; k < take; k++) {
      chosen.push(idx[order[k]]);
    }
  }
  return chosen.sort((a, b) => a - b);
}

/** Column-wise min-max from the training embedding; test values clipped. */
export class MinMaxScaler {
  private mins: number[] = [];
  private ranges: number[] = [];

  fit(rows: number[][]): this {
    const d = rows[0].length;
    this.mins = Array(d).fill(Infinity);
    const maxs = Array(d).fill(-Infinity);
    for (const row of rows) {
      for (let j = 0; j < d; j++) {
        if (row[j] < this.mins[j]) this.mins[j] = row[j];
        if (row[j] > maxs[j]) maxs[j] = row[j];
      }
    }
    this.ranges = maxs.map((m, j) => {
      const r = m - this.mins[j];
      return r > 1e-12 ? r : 1;
    });
    return this;
  }

  transform(rows: number[][]): number[][] {
    return rows.map((row) =>
      row.map((v, j) =>
        Math.min(1, Math.max(0, (v - this.mins[j]) / this.ranges[j])),
      ),
    );
  }
}

export function writeHarnessCsv(
  path: string,
  features: number[][],
  labels: number[],
): void {
  const d = features[0].length;
  const header = [...Array.from({ length: d }, (_, i) => `f${i}`), "label"];
  const lines = [header.join(",")];
  features.forEach((row, i) => {
    lines.push([...row.map((v) => v.toPrecision(10)), String(labels[i])].join(","));
  });
  // write to a temp name then rename: no partial files on failure
  mkdirSync(dirname(path), { recursive: true });
  const tmp = `${path}.tmp`;
  writeFileSync(tmp, lines.join("\n") + "\n");
  renameSync(tmp, path);
}

export interface Reducer {
  fit(train: number[][]): number[][];
  transform(test: number[][]): number[][];
}

export function umapReducer(cfg: PrepConfig): Reducer {
  const rand = mulberry32(cfg.seed);
  const umap = new UMAP({
    nComponents: cfg.dim,
    nNeighbors: cfg.nNeighbors ?? 15,
    minDist: cfg.minDist ?? 0.1,
    // euclidean is the library default metric
    random: rand,
  });
  return {
    fit: (train) => umap.fit(train),
    transform: (test) => umap.transform(test),
  };
}

export function prepare(
  cfg: PrepConfig,
  data: { train: MnistSplit; test: MnistSplit },
  reducer?: Reducer,
): PrepResult {
  validateConfig(cfg);
  const rand = mulberry32(cfg.seed ^ 0x9e3779b9);
  const trainIdx = stratifiedSubsample(data.train.labels, cfg.fraction, rand);
  const testIdx = stratifiedSubsample(data.test.labels, cfg.fraction, rand);

  const trainX = trainIdx.map((i) => Array.from(data.train.images[i]));
  const trainY = trainIdx.map((i) => data.train.labels[i]);
  const testX = testIdx.map((i) => Array.from(data.test.images[i]));
  const testY = testIdx.map((i) => data.test.labels[i]);

  const red = reducer ?? umapReducer(cfg);
  // fit on train only; the test set is transformed, never fit
  const trainEmb = red.fit(trainX);
  const testEmb = red.transform(testX);
  for (const [name, emb] of [["train", trainEmb], ["test", testEmb]] as const) {
    if (emb.some((row) => row.some((v) => !Number.isFinite(v)))) {
      throw new Error(
        `UMAP produced non-finite values in the ${name} embedding ` +
          `(degenerate input, e.g. duplicate rows?); nothing was written`,
      );
    }
  }

  const scaler = new MinMaxScaler().fit(trainEmb);
  const trainScaled = scaler.transform(trainEmb);
  const testScaled = scaler.transform(testEmb);

  const trainCsv = join(cfg.outDir, "train.csv");
  const testCsv = join(cfg.outDir, "test.csv");
  writeHarnessCsv(trainCsv, trainScaled, trainY);
  writeHarnessCsv(testCsv, testScaled, testY);
  return {
    trainCsv,
    testCsv,
    trainRows: trainScaled.length,
    testRows: testScaled.length,
  };
}
