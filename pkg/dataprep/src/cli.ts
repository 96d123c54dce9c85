#!/usr/bin/env node
/** dataprep --out-dir DIR [--dim 7] [--fraction 0.1] [--seed 0] [--data-dir DIR] */

import { loadMnist } from "./mnist.js";
import { prepare } from "./prep.js";

function parseArgs(argv: string[]) {
  const opts = {
    outDir: "",
    dim: 7,
    fraction: 0.1,
    seed: 0,
    dataDir: "mnist-raw",
  };
  for (let i = 0; i < argv.length; i++) {
    const key = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`missing value for ${key}`);
      return argv[i];
    };
    switch (key) {
      case "--out-dir":
        opts.outDir = next();
        break;
      case "--dim":
        opts.dim = Number(next());
        break;
      case "--fraction":
        opts.fraction = Number(next());
        break;
      case "--seed":
        opts.seed = Number(next());
        break;
      case "--data-dir":
        opts.dataDir = next();
        break;
      case "--help":
        console.log(
          "dataprep --out-dir DIR [--dim 7] [--fraction 0.1] [--seed 0] [--data-dir DIR]",
        );
        process.exit(0);
        break;
      default:
        throw new Error(`unknown argument ${key}`);
    }
  }
  if (!opts.outDir) throw new Error("--out-dir is required");
  return opts;
}

async function main() {
  const opts = parseArgs(process.argv.slice(2));
  const data = await loadMnist(opts.dataDir);
  console.log(
    `loaded MNIST: ${data.train.labels.length} train / ${data.test.labels.length} test`,
  );
  const result = prepare(
    {
      outDir: opts.outDir,
      dim: opts.dim,
      fraction: opts.fraction,
      seed: opts.seed,
    },
    data,
  );
  console.log(
    `wrote ${result.trainCsv} (${result.trainRows} rows) and ` +
      `${result.testCsv} (${result.testRows} rows)`,
  );
}

main().catch((err) => {
  console.error(`dataprep: ${(err as Error).message}`);
  process.exit(1);
});
