/**
 * Encoder backends. Every backend receives whole sentences (lists of
 * the core toolkit's token texts) and returns one vector per token, or
 * null where the token cannot be aligned to any subword piece.
 *
 * The built-in "hashed" encoder needs no model weights: piece vectors
 * are pseudo-random functions of the piece string, layer 1 mixes each
 * piece with its neighbors (so identical tokens in different contexts
 * get different vectors), and per-token vectors are the mean of the
 * covering pieces. All arithmetic is forced through float32, so output
 * bytes are identical across runs and platforms.
 */

import { splitSentence } from './subword.js';

export interface Encoder {
  readonly dim: number;
  /** number of layers; layer indexes are 0..layers-1, -1 meaning last */
  readonly layers: number;
  encodeBatch(sentences: string[][], layer: number): Promise<(Float32Array | null)[][]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function splitmix32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x9e3779b9) | 0;
    let t = a ^ (a >>> 16);
    t = Math.imul(t, 0x21f0aaad);
    t = t ^ (t >>> 15);
    t = Math.imul(t, 0x735a2d97);
    t = t ^ (t >>> 15);
    return (t >>> 0) / 4294967296;
  };
}

export class HashedEncoder implements Encoder {
  readonly layers = 2;
  private cache = new Map<string, Float32Array>();

  constructor(readonly dim: number) {
    if (dim <= 0) throw new Error(`dim must be positive, got ${dim}`);
  }

  private pieceVector(piece: string): Float32Array {
    const cached = this.cache.get(piece);
    if (cached) return cached;
    const next = splitmix32(fnv1a(piece));
    const vec = new Float32Array(this.dim);
    for (let j = 0; j < this.dim; j++) {
      vec[j] = Math.fround(2 * next() - 1);
    }
    this.cache.set(piece, vec);
    return vec;
  }

  private contextualize(vectors: Float32Array[]): Float32Array[] {
    const out: Float32Array[] = [];
    for (let i = 0; i < vectors.length; i++) {
      const mixed = new Float32Array(this.dim);
      const left = vectors[i - 1];
      const right = vectors[i + 1];
      for (let j = 0; j < this.dim; j++) {
        let value = Math.fround(0.6 * vectors[i][j]);
        if (left) value = Math.fround(value + Math.fround(0.2 * left[j]));
        if (right) value = Math.fround(value + Math.fround(0.2 * right[j]));
        mixed[j] = value;
      }
      out.push(mixed);
    }
    return out;
  }

  async encodeBatch(
    sentences: string[][],
    layer: number,
  ): Promise<(Float32Array | null)[][]> {
    const resolved = layer === -1 ? this.layers - 1 : layer;
    if (resolved < 0 || resolved >= this.layers) {
      throw new Error(`layer ${layer} outside 0..${this.layers - 1}`);
    }
    const results: (Float32Array | null)[][] = [];
    for (const tokens of sentences) {
      const { pieces, coverage } = splitSentence(tokens);
      let vectors = pieces.map((p) => this.pieceVector(p));
      if (resolved >= 1) vectors = this.contextualize(vectors);
      const perToken: (Float32Array | null)[] = [];
      for (const indexes of coverage) {
        if (indexes.length === 0) {
          perToken.push(null);
          continue;
        }
        const mean = new Float32Array(this.dim);
        for (const index of indexes) {
          for (let j = 0; j < this.dim; j++) {
            mean[j] = Math.fround(mean[j] + vectors[index][j]);
          }
        }
        const scale = Math.fround(1 / indexes.length);
        for (let j = 0; j < this.dim; j++) {
          mean[j] = Math.fround(mean[j] * scale);
        }
        perToken.push(mean);
      }
      results.push(perToken);
    }
    return results;
  }
}

/**
 * Pick a backend from a model spec: "hashed:<dim>" (or "hashed") for
 * the built-in encoder, anything else is treated as a pretrained model
 * name/path for the transformers backend.
 */
export async function createEncoder(model: string): Promise<Encoder> {
  if (model === 'hashed' || model.startsWith('hashed:')) {
    const dim = model === 'hashed' ? 64 : Number.parseInt(model.split(':')[1], 10);
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new Error(`bad hashed encoder spec "${model}"`);
    }
    return new HashedEncoder(dim);
  }
  const { createTransformersEncoder } = await import('./transformersEncoder.js');
  return createTransformersEncoder(model);
}
