/**
 * Deterministic hashed character-trigram embedder.
 *
 * This is a fixed cross-tool contract shared with the analysis toolkit's
 * test embedder and must stay bit-compatible with it:
 *
 *  - trigrams are contiguous windows of 3 Unicode code points; texts
 *    shorter than 3 code points contribute themselves as a single token
 *  - tokens are hashed with 64-bit FNV-1a over their UTF-8 bytes
 *  - bucket = hash mod dim, sign = +1 for even hashes, -1 for odd ones
 *  - bucket counts are L2-normalized and rounded to float32
 *
 * Counts are small integers, so the squared norm is exact in float64 and
 * the normalized float32 vector is identical across implementations.
 */

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;

export const DEFAULT_DIM = 256;

const utf8 = new TextEncoder();

export function fnv1a64(data: Uint8Array, seed: bigint = 0n): bigint {
  let h = (FNV_OFFSET ^ (seed & MASK64)) & MASK64;
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

function* tokens(text: string): Generator<string> {
  const points = Array.from(text);
  if (points.length < 3) {
    yield text;
    return;
  }
  for (let i = 0; i + 3 <= points.length; i++) {
    yield points[i] + points[i + 1] + points[i + 2];
  }
}

export function embedText(
  text: string,
  dim: number = DEFAULT_DIM,
  seed: bigint = 0n,
): Float32Array {
  if (text.length === 0) {
    throw new Error("cannot embed empty text");
  }
  const counts = new Float64Array(dim);
  const big_dim = BigInt(dim);
  for (const token of tokens(text)) {
    const h = fnv1a64(utf8.encode(token), seed);
    const sign = (h & 1n) === 0n ? 1 : -1;
    counts[Number(h % big_dim)] += sign;
  }
  let sumSquares = 0;
  for (let i = 0; i < dim; i++) {
    sumSquares += counts[i] * counts[i];
  }
  let norm = Math.sqrt(sumSquares);
  if (norm === 0) {
    // all-cancelling signs; deterministic one-hot fallback
    const h = fnv1a64(utf8.encode(text), seed);
    counts[Number(h % big_dim)] = 1;
    norm = 1;
  }
  const out = new Float32Array(dim);
  for (let i = 0; i < dim; i++) {
    out[i] = Math.fround(counts[i] / norm);
  }
  return out;
}
