import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  buildIdxImages,
  buildIdxLabels,
  loadMnist,
  parseIdxImages,
  parseIdxLabels,
} from "../src/mnist.js";
import {
  MinMaxScaler,
  prepare,
  stratifiedSubsample,
  umapReducer,
  writeHarnessCsv,
} from "../src/prep.js";
import { mulberry32 } from "../src/rng.js";

function syntheticSplit(n: number, seed: number) {
  // class-structured fake digits: class k lights a distinct pixel block
  const rand = mulberry32(seed);
  const images: Uint8Array[] = [];
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    const label = i % 10;
    const img = new Uint8Array(784);
    for (let p = 0; p < 784; p++) {
      img[p] = Math.floor(rand() * 40);
    }
    for (let p = label * 70; p < label * 70 + 60; p++) {
      img[p] = 200 + Math.floor(rand() * 55);
    }
    images.push(img);
    labels.push(label);
  }
  return { images, labels };
}

function writeSyntheticDataDir(nTrain: number, nTest: number): string {
  const dir = mkdtempSync(join(tmpdir(), "mnist-"));
  const train = syntheticSplit(nTrain, 1);
  const test = syntheticSplit(nTest, 2);
  writeFileSync(join(dir, "train-images-idx3-ubyte"), buildIdxImages(train.images));
  writeFileSync(join(dir, "train-labels-idx1-ubyte"), buildIdxLabels(train.labels));
  writeFileSync(join(dir, "t10k-images-idx3-ubyte"), buildIdxImages(test.images));
  writeFileSync(join(dir, "t10k-labels-idx1-ubyte"), buildIdxLabels(test.labels));
  return dir;
}

describe("idx parsing", () => {
  it("round-trips images and labels", () => {
    const { images, labels } = syntheticSplit(20, 3);
    const parsed = parseIdxImages(buildIdxImages(images));
    expect(parsed.length).toBe(20);
    expect(parsed[0].length).toBe(784);
    expect(parsed[3][5]).toBeCloseTo(images[3][5] / 255, 10);
    expect(parseIdxLabels(buildIdxLabels(labels))).toEqual(labels);
  });

  it("rejects wrong magic numbers", () => {
    expect(() => parseIdxLabels(buildIdxImages(syntheticSplit(2, 0).images))).toThrow(
      /IDX label/,
    );
  });
});

describe("stratified subsampling", () => {
  it("keeps per-class counts within rounding of the fraction", () => {
    const labels = Array.from({ length: 1000 }, (_, i) => i % 10);
    const idx = stratifiedSubsample(labels, 0.1, mulberry32(0));
    expect(idx.length).toBe(100);
    const counts = new Map<number, number>();
    idx.forEach((i) => counts.set(labels[i], (counts.get(labels[i]) ?? 0) + 1));
    for (const c of counts.values()) {
      expect(c).toBe(10);
    }
  });

  it("is deterministic for a fixed seed", () => {
    const labels = Array.from({ length: 300 }, (_, i) => i % 3);
    const a = stratifiedSubsample(labels, 0.2, mulberry32(7));
    const b = stratifiedSubsample(labels, 0.2, mulberry32(7));
    expect(a).toEqual(b);
  });
});

describe("min-max scaling", () => {
  it("maps the training range onto [0,1] and clips test overshoot", () => {
    const scaler = new MinMaxScaler().fit([
      [0, 10],
      [4, 30],
    ]);
    expect(scaler.transform([[2, 20]])[0]).toEqual([0.5, 0.5]);
    expect(scaler.transform([[-5, 99]])[0]).toEqual([0, 1]);
  });
});

describe("harness CSV schema", () => {
  it("writes the f0..f{d-1},label header and parsable rows", () => {
    const dir = mkdtempSync(join(tmpdir(), "csv-"));
    const path = join(dir, "out.csv");
    writeHarnessCsv(path, [[0.25, 0.5, 1.0]], [7]);
    const lines = readFileSync(path, "utf8").trim().split("\n");
    expect(lines[0]).toBe("f0,f1,f2,label");
    const cells = lines[1].split(",");
    expect(cells).toHaveLength(4);
    expect(Number(cells[0])).toBeCloseTo(0.25, 9);
    expect(cells[3]).toBe("7");
  });
});

describe("prepare pipeline", () => {
  it("produces fraction-sized CSVs with values in [0,1]", async () => {
    const dataDir = writeSyntheticDataDir(400, 100);
    const data = await loadMnist(dataDir);
    const outDir = mkdtempSync(join(tmpdir(), "prep-"));
    const result = prepare(
      { outDir, dim: 7, fraction: 0.1, seed: 0 },
      data,
      umapReducer({ outDir, dim: 7, fraction: 0.1, seed: 0, nNeighbors: 10 }),
    );
    expect(result.trainRows).toBe(40);
    expect(result.testRows).toBe(10);
    const lines = readFileSync(result.trainCsv, "utf8").trim().split("\n");
    expect(lines[0]).toBe("f0,f1,f2,f3,f4,f5,f6,label");
    expect(lines).toHaveLength(41);
    for (const line of lines.slice(1)) {
      const cells = line.split(",").map(Number);
      expect(cells).toHaveLength(8);
      for (const v of cells.slice(0, 7)) {
        expect(v).toBeGreaterThanOrEqual(0);
        expect(v).toBeLessThanOrEqual(1);
      }
      expect(Number.isInteger(cells[7])).toBe(true);
    }
  }, 120_000);

  it("keeps per-class counts near balance", async () => {
    const dataDir = writeSyntheticDataDir(400, 100);
    const data = await loadMnist(dataDir);
    const outDir = mkdtempSync(join(tmpdir(), "prep-"));
    const result = prepare(
      { outDir, dim: 3, fraction: 0.25, seed: 1 },
      data,
      umapReducer({ outDir, dim: 3, fraction: 0.25, seed: 1, nNeighbors: 10 }),
    );
    const lines = readFileSync(result.trainCsv, "utf8").trim().split("\n").slice(1);
    const counts = new Map<number, number>();
    for (const line of lines) {
      const label = Number(line.split(",").at(-1));
      counts.set(label, (counts.get(label) ?? 0) + 1);
    }
    const values = [...counts.values()];
    const mean = values.reduce((a, b) => a + b, 0) / values.length;
    for (const c of values) {
      expect(Math.abs(c - mean) / mean).toBeLessThanOrEqual(0.02 + 1 / mean);
    }
  }, 120_000);

  it("rejects bad configs", () => {
    expect(() =>
      prepare({ outDir: "/tmp/x", dim: 1, fraction: 0.1, seed: 0 }, {
        train: { images: [], labels: [] },
        test: { images: [], labels: [] },
      }),
    ).toThrow(/dim/);
    expect(() =>
      prepare({ outDir: "/tmp/x", dim: 7, fraction: 0, seed: 0 }, {
        train: { images: [], labels: [] },
        test: { images: [], labels: [] },
      }),
    ).toThrow(/fraction/);
  });

  it("fails with a clear message when no data and no network", async () => {
    const empty = mkdtempSync(join(tmpdir(), "nodata-"));
    await expect(loadMnist(join(empty, "missing"))).rejects.toThrow(
      /download failed|Place/,
    );
  }, 60_000);
});
