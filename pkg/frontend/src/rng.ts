/** Deterministic PRNG (mulberry32) and a string hash for seeding. */

export function hashString(text: string): number {
  let h = 2166136261 >>> 0;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return h >>> 0;
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Deterministic unit-scale vector derived from a string key. */
export function seededVector(key: string, dim: number): Float64Array {
  const rand = mulberry32(hashString(key));
  const out = new Float64Array(dim);
  for (let i = 0; i < dim; i++) {
    out[i] = rand() * 2 - 1;
  }
  return out;
}
