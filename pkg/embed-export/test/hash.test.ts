import { describe, expect, it } from "vitest";

import { DEFAULT_DIM, embedText, fnv1a64 } from "../src/hash";

const utf8 = new TextEncoder();

describe("fnv1a64", () => {
  it("matches published test vectors", () => {
    expect(fnv1a64(new Uint8Array())).toBe(0xcbf29ce484222325n);
    expect(fnv1a64(utf8.encode("a"))).toBe(0xaf63dc4c8601ec8cn);
    expect(fnv1a64(utf8.encode("foobar"))).toBe(0x85944171f73967e8n);
  });
});

describe("embedText", () => {
  it("produces a unit float32 vector", () => {
    const v = embedText("the quick brown fox");
    expect(v.length).toBe(DEFAULT_DIM);
    let norm = 0;
    for (const x of v) norm += x * x;
    expect(Math.abs(Math.sqrt(norm) - 1)).toBeLessThan(1e-6);
  });

  it("is deterministic", () => {
    expect(embedText("modi rocks")).toEqual(embedText("modi rocks"));
  });

  it("hashes short texts as a single token", () => {
    const v = embedText("ab");
    const nonzero = v.filter((x) => x !== 0);
    expect(nonzero.length).toBe(1);
    const h = fnv1a64(utf8.encode("ab"));
    const sign = (h & 1n) === 0n ? 1 : -1;
    expect(v[Number(h % 256n)]).toBe(Math.fround(sign));
  });

  it("uses code points, not UTF-16 units", () => {
    // three astral-plane emoji are exactly one trigram
    const v = embedText("\u{1f600}\u{1f600}\u{1f600}");
    expect(v.filter((x) => x !== 0).length).toBe(1);
  });

  it("rejects empty text", () => {
    expect(() => embedText("")).toThrow();
  });

  it("changes with the seed", () => {
    expect(embedText("hello world", DEFAULT_DIM, 0n)).not.toEqual(
      embedText("hello world", DEFAULT_DIM, 1n),
    );
  });
});
