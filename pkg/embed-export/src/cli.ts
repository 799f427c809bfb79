#!/usr/bin/env node

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportEmbeddings, Mode } from "./export";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .usage("embed-export --in tweets_clean.csv --out embeddings.bin --mode encoder|hash")
    .option("in", { type: "string", demandOption: true, describe: "input CSV (tweet_id, cleaned_text)" })
    .option("out", { type: "string", demandOption: true, describe: "output EMB1 binary" })
    .option("mode", { choices: ["encoder", "hash"] as const, default: "hash" as Mode })
    .option("model", { type: "string", describe: "encoder model identifier" })
    .option("seed", { type: "string", default: "0", describe: "hash-mode seed" })
    .option("batch-size", { type: "number", default: 64, describe: "encoder batch size (no effect on values)" })
    .strict()
    .parse();

  try {
    const manifest = await exportEmbeddings(argv.in, argv.out, {
      mode: argv.mode as Mode,
      model: argv.model,
      seed: BigInt(argv.seed),
      batchSize: argv["batch-size"],
    });
    console.log(
      `wrote ${manifest.count} vectors (dim ${manifest.dim}, model ${manifest.model}) to ${argv.out}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
