/** MNIST IDX loading: local files (optionally gzipped) or HTTP download. */

import { createHash } from "node:crypto";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { get as httpsGet } from "node:https";
import { join } from "node:path";
import { gunzipSync } from "node:zlib";

export interface MnistSplit {
  /** row-major pixels in [0,1], one Float64Array(784) per image */
  images: Float64Array[];
  labels: number[];
}

export const FILES = {
  trainImages: "train-images-idx3-ubyte",
  trainLabels: "train-labels-idx1-ubyte",
  testImages: "t10k-images-idx3-ubyte",
  testLabels: "t10k-labels-idx1-ubyte",
} as const;

const MIRROR = "https://storage.googleapis.com/cvdf-datasets/mnist/";

function maybeGunzip(buf: Buffer): Buffer {
  if (buf.length >= 2 && buf[0] === 0x1f && buf[1] === 0x8b) {
    return gunzipSync(buf);
  }
  return buf;
}

export function parseIdxImages(raw: Buffer): Float64Array[] {
  const buf = maybeGunzip(raw);
  const magic = buf.readUInt32BE(0);
  if (magic !== 0x00000803) {
    throw new Error(`not an IDX image file (magic ${magic.toString(16)})`);
  }
  const count = buf.readUInt32BE(4);
  const rows = buf.readUInt32BE(8);
  const cols = buf.readUInt32BE(12);
  const size = rows * cols;
  if (buf.length < 16 + count * size) {
    throw new Error("truncated IDX image file");
  }
  const images: Float64Array[] = [];
  for (let i = 0; i < count; i++) {
    const img = new Float64Array(size);
    const base = 16 + i * size;
    for (let p = 0; p < size; p++) {
      img[p] = buf[base + p] / 255;
    }
    images.push(img);
  }
  return images;
}

export function parseIdxLabels(raw: Buffer): number[] {
  const buf = maybeGunzip(raw);
  const magic = buf.readUInt32BE(0);
  if (magic !== 0x00000801) {
    throw new Error(`not an IDX label file (magic ${magic.toString(16)})`);
  }
  const count = buf.readUInt32BE(4);
  if (buf.length < 8 + count) {
    throw new Error("truncated IDX label file");
  }
  return Array.from(buf.subarray(8, 8 + count));
}

function readLocal(dir: string, name: string): Buffer | null {
  for (const candidate of [join(dir, name), join(dir, `${name}.gz`)]) {
    if (existsSync(candidate)) {
      return readFileSync(candidate);
    }
  }
  return null;
}

function download(url: string): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    httpsGet(url, (res) => {
      if (res.statusCode !== 200) {
        reject(new Error(`HTTP ${res.statusCode} for ${url}`));
        return;
      }
      const chunks: Buffer[] = [];
      res.on("data", (c) => chunks.push(c));
      res.on("end", () => resolve(Buffer.concat(chunks)));
      res.on("error", reject);
    }).on("error", reject);
  });
}

async function fetchFile(dataDir: string, name: string): Promise<Buffer> {
  const local = readLocal(dataDir, name);
  if (local !== null) {
    return local;
  }
  const url = `${MIRROR}${name}.gz`;
  let raw: Buffer;
  try {
    raw = await download(url);
  } catch (err) {
    throw new Error(
      `MNIST download failed (${(err as Error).message}). ` +
        `Place ${name}[.gz] in ${dataDir} and re-run.`,
    );
  }
  mkdirSync(dataDir, { recursive: true });
  writeFileSync(join(dataDir, `${name}.gz`), raw);
  return raw;
}

export async function loadMnist(
  dataDir: string,
): Promise<{ train: MnistSplit; test: MnistSplit }> {
  const [trImg, trLab, teImg, teLab] = await Promise.all([
    fetchFile(dataDir, FILES.trainImages),
    fetchFile(dataDir, FILES.trainLabels),
    fetchFile(dataDir, FILES.testImages),
    fetchFile(dataDir, FILES.testLabels),
  ]);
  const train = { images: parseIdxImages(trImg), labels: parseIdxLabels(trLab) };
  const test = { images: parseIdxImages(teImg), labels: parseIdxLabels(teLab) };
  if (train.images.length !== train.labels.length) {
    throw new Error("train images/labels length mismatch");
  }
  if (test.images.length !== test.labels.length) {
    throw new Error("test images/labels length mismatch");
  }
  return { train, test };
}

/** Build an IDX image buffer (used by tests to fabricate tiny datasets). */
export function buildIdxImages(images: Uint8Array[], rows = 28, cols = 28): Buffer {
  const head = Buffer.alloc(16);
  head.writeUInt32BE(0x00000803, 0);
  head.writeUInt32BE(images.length, 4);
  head.writeUInt32BE(rows, 8);
  head.writeUInt32BE(cols, 12);
  return Buffer.concat([head, ...images.map((i) => Buffer.from(i))]);
}

export function buildIdxLabels(labels: number[]): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(0x00000801, 0);
  head.writeUInt32BE(labels.length, 4);
  return Buffer.concat([head, Buffer.from(labels)]);
}

export function sha256(buf: Buffer): string {
  return createHash("sha256").update(buf).digest("hex");
}
