/**
 * EMB1 binary container: magic "EMB1", u32-LE dim, u64-LE row count,
 * then per row a u64-LE tweet id followed by dim little-endian float32s.
 * Rows are written sorted by tweet id.
 */

import * as fs from "fs";
import * as path from "path";

export interface EmbeddingRow {
  tweetId: bigint;
  vector: Float32Array;
}

export const MAGIC = "EMB1";

export function encodeEmbeddings(rows: EmbeddingRow[], dim: number): Buffer {
  for (const row of rows) {
    if (row.vector.length !== dim) {
      throw new Error(
        `vector for tweet ${row.tweetId} has dim ${row.vector.length}, expected ${dim}`,
      );
    }
  }
  const sorted = [...rows].sort((a, b) =>
    a.tweetId < b.tweetId ? -1 : a.tweetId > b.tweetId ? 1 : 0,
  );
  const record = 8 + 4 * dim;
  const buf = Buffer.alloc(16 + record * sorted.length);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(dim, 4);
  buf.writeBigUInt64LE(BigInt(sorted.length), 8);
  let off = 16;
  for (const row of sorted) {
    buf.writeBigUInt64LE(row.tweetId, off);
    off += 8;
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(row.vector[i], off);
      off += 4;
    }
  }
  return buf;
}

export function decodeEmbeddings(buf: Buffer): { dim: number; rows: EmbeddingRow[] } {
  if (buf.length < 16 || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("missing EMB1 header");
  }
  const dim = buf.readUInt32LE(4);
  const count = Number(buf.readBigUInt64LE(8));
  const record = 8 + 4 * dim;
  if (buf.length !== 16 + record * count) {
    throw new Error("payload length does not match header");
  }
  const rows: EmbeddingRow[] = [];
  let off = 16;
  for (let r = 0; r < count; r++) {
    const tweetId = buf.readBigUInt64LE(off);
    off += 8;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = buf.readFloatLE(off);
      off += 4;
    }
    rows.push({ tweetId, vector });
  }
  return { dim, rows };
}

/** Write atomically: temp file in the same directory, then rename. */
export function writeFileAtomic(filePath: string, data: Buffer | string): void {
  const dir = path.dirname(filePath);
  const tmp = path.join(dir, `.${path.basename(filePath)}.tmp-${process.pid}`);
  try {
    fs.writeFileSync(tmp, data);
    fs.renameSync(tmp, filePath);
  } catch (err) {
    try {
      fs.unlinkSync(tmp);
    } catch {
      // best effort cleanup
    }
    throw err;
  }
}
