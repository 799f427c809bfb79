/** Core export operation: CSV of cleaned tweets in, EMB1 binary out. */

import * as crypto from "crypto";
import * as fs from "fs";

import Papa from "papaparse";

import { DEFAULT_DIM, embedText } from "./hash";
import { EmbeddingRow, encodeEmbeddings, writeFileAtomic } from "./binary";

export interface ExportManifest {
  model: string;
  dim: number;
  count: number;
  input_sha256: string;
  created_with_fallback: boolean;
}

export interface InputRow {
  tweetId: bigint;
  text: string;
}

export type Mode = "encoder" | "hash";

export interface ExportOptions {
  mode: Mode;
  model?: string;
  seed?: bigint;
  batchSize?: number;
}

export class EmptyTextError extends Error {
  constructor(public readonly row: number) {
    super(`row ${row}: cleaned_text is empty`);
  }
}

export function parseInputCsv(csvText: string): InputRow[] {
  const parsed = Papa.parse<Record<string, string>>(csvText, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`CSV parse error at row ${e.row}: ${e.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  if (!fields.includes("tweet_id") || !fields.includes("cleaned_text")) {
    throw new Error("CSV must have tweet_id and cleaned_text columns");
  }
  return parsed.data.map((rec, i) => {
    const text = rec.cleaned_text ?? "";
    if (text.length === 0) {
      throw new EmptyTextError(i + 1);
    }
    let tweetId: bigint;
    try {
      tweetId = BigInt(rec.tweet_id);
    } catch {
      throw new Error(`row ${i + 1}: tweet_id ${rec.tweet_id!} is not an integer`);
    }
    if (tweetId < 0n || tweetId > 0xffffffffffffffffn) {
      throw new Error(`row ${i + 1}: tweet_id out of u64 range`);
    }
    return { tweetId, text };
  });
}

/**
 * Neural-encoder rows. The concrete encoder is resolved at runtime; when
 * no encoder backend is installed this fails with a clear message rather
 * than silently degrading (use --mode hash for the deterministic path).
 */
async function encodeWithModel(
  rows: InputRow[],
  model: string,
  batchSize: number,
): Promise<{ rows: EmbeddingRow[]; dim: number }> {
  let pipeline: any;
  try {
    // optional dependency; not installed in minimal deployments
    const transformers = await import("@xenova/transformers" as string);
    pipeline = await transformers.pipeline("feature-extraction", model);
  } catch (err) {
    throw new Error(
      `encoder mode needs the @xenova/transformers package and the model ` +
        `"${model}" available locally (${(err as Error).message}); ` +
        `use --mode hash for the deterministic fallback`,
    );
  }
  const out: EmbeddingRow[] = [];
  let dim = 0;
  for (let start = 0; start < rows.length; start += batchSize) {
    const batch = rows.slice(start, start + batchSize);
    const embedded = await pipeline(
      batch.map((r) => r.text),
      { pooling: "mean", normalize: true },
    );
    const [n, d] = embedded.dims.slice(-2);
    dim = d;
    const data: Float32Array = embedded.data;
    for (let i = 0; i < n; i++) {
      out.push({
        tweetId: batch[i].tweetId,
        vector: new Float32Array(data.subarray(i * d, (i + 1) * d)),
      });
    }
  }
  return { rows: out, dim };
}

export async function exportEmbeddings(
  inPath: string,
  outPath: string,
  options: ExportOptions,
): Promise<ExportManifest> {
  const raw = fs.readFileSync(inPath);
  const inputRows = parseInputCsv(raw.toString("utf-8"));
  const checksum = crypto.createHash("sha256").update(raw).digest("hex");

  let rows: EmbeddingRow[];
  let dim: number;
  let model: string;
  if (options.mode === "hash") {
    dim = DEFAULT_DIM;
    model = "fnv1a64-trigram-256";
    rows = inputRows.map((r) => ({
      tweetId: r.tweetId,
      vector: embedText(r.text, dim, options.seed ?? 0n),
    }));
  } else {
    model = options.model ?? "sentence-transformers/paraphrase-multilingual-MiniLM-L12-v2";
    const encoded = await encodeWithModel(
      inputRows,
      model,
      options.batchSize ?? 64,
    );
    rows = encoded.rows;
    dim = encoded.dim;
  }

  const payload = encodeEmbeddings(rows, dim);
  try {
    writeFileAtomic(outPath, payload);
  } catch (err) {
    throw new Error(`write failure: ${(err as Error).message}`);
  }
  const manifest: ExportManifest = {
    model,
    dim,
    count: rows.length,
    input_sha256: checksum,
    created_with_fallback: options.mode === "hash",
  };
  writeFileAtomic(
    `${outPath}.manifest.json`,
    JSON.stringify(manifest, null, 2) + "\n",
  );
  return manifest;
}
