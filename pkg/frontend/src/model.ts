/**
 * Compact deterministic encoder-decoder with multi-head cross-attention.
 *
 * Decoding is lexicon-driven (word-for-word, unknown words copied), which
 * keeps outputs deterministic and fixture-stable. The cross-attention is the
 * real computation: per layer and head, queries from decoder states against
 * keys from encoder states, softmax over source positions. The served matrix
 * aggregates heads according to the configured recipe (default: mean over
 * heads of the last decoder layer) and is renormalized row-wise before
 * emission.
 */

import { ModelSpec } from "./lexicon.js";
import { seededVector } from "./rng.js";
import { Piece, detokenize, tokenize } from "./tokenizer.js";

const DIM = 32;
const HEADS = 4;
const LAYERS = 2;

export type Aggregation = { kind: "last-mean" } | { kind: "layer"; layer: number };

export function parseAggregation(text: string): Aggregation {
  if (text === "last-mean") {
    return { kind: "last-mean" };
  }
  const match = /^layer:(\d+)$/.exec(text);
  if (match) {
    const layer = Number(match[1]);
    if (layer >= 1 && layer <= LAYERS) {
      return { kind: "layer", layer };
    }
    throw new Error(`layer out of range 1..${LAYERS}: ${text}`);
  }
  throw new Error(`unknown aggregation ${text}; use last-mean or layer:k`);
}

export interface WireResponse {
  src_tokens: string[];
  tgt_tokens: string[];
  tgt_text: string;
  attention: number[][] | null;
}

function projection(name: string): Float64Array[] {
  const rows: Float64Array[] = [];
  const scale = 1 / Math.sqrt(DIM);
  for (let r = 0; r < DIM; r++) {
    const row = seededVector(`${name}:${r}`, DIM);
    for (let i = 0; i < DIM; i++) {
      row[i] *= scale;
    }
    rows.push(row);
  }
  return rows;
}

function apply(matrix: Float64Array[], v: Float64Array): Float64Array {
  const out = new Float64Array(DIM);
  for (let r = 0; r < DIM; r++) {
    let acc = 0;
    const row = matrix[r];
    for (let i = 0; i < DIM; i++) {
      acc += row[i] * v[i];
    }
    out[r] = acc;
  }
  return out;
}

function dot(a: Float64Array, b: Float64Array): number {
  let acc = 0;
  for (let i = 0; i < DIM; i++) {
    acc += a[i] * b[i];
  }
  return acc;
}

function softmax(scores: number[]): number[] {
  const max = Math.max(...scores);
  const exps = scores.map((s) => Math.exp(s - max));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}

const PLACEHOLDER = /^[A-Z]+_\d+$/;

export class TranslationModel {
  // One projection per (layer, head), shared between queries and keys: the
  // score takes the Gram form (Wq).(Wk') which peaks when the word-identity
  // components of decoder and encoder states match, so attention lands on
  // the translated word.
  private readonly proj: Float64Array[][][] = [];

  constructor(readonly spec: ModelSpec, readonly agg: Aggregation) {
    for (let layer = 0; layer < LAYERS; layer++) {
      this.proj.push([]);
      for (let head = 0; head < HEADS; head++) {
        this.proj[layer].push(projection(`qk:${layer}:${head}`));
      }
    }
  }

  private translateWord(word: string): string {
    if (PLACEHOLDER.test(word) || word === '"') {
      return word;
    }
    return this.spec.lexicon[word.toLowerCase()] ?? word;
  }

  translate(text: string, returnAttention: boolean): WireResponse {
    const srcPieces = tokenize(text);
    if (srcPieces.length === 0) {
      throw new Error("empty input after tokenization");
    }
    const srcWords = [...new Set(srcPieces.map((p) => p.wordIndex))].map(
      (i) => srcPieces.find((p) => p.wordIndex === i)!.word,
    );
    const tgtWords = srcWords.map((w) => this.translateWord(w));
    const tgtPieces = tokenize(tgtWords.join(" "));
    const tgtText = detokenize(tgtPieces.map((p) => p.text));

    let attention: number[][] | null = null;
    if (returnAttention) {
      attention = this.crossAttention(srcPieces, tgtPieces);
    }
    return {
      src_tokens: srcPieces.map((p) => p.text),
      tgt_tokens: tgtPieces.map((p) => p.text),
      tgt_text: tgtText,
      attention,
    };
  }

  /** Encoder state: piece identity, position, and word identity. */
  private encoderState(piece: Piece, position: number): Float64Array {
    const e = seededVector(`piece:${piece.text}`, DIM);
    const pos = seededVector(`pos:${position}`, DIM);
    const word = seededVector(`word:${piece.word}:${piece.wordIndex}`, DIM);
    const out = new Float64Array(DIM);
    for (let i = 0; i < DIM; i++) {
      out[i] = e[i] * 0.4 + pos[i] * 0.2 + word[i] * 1.2;
    }
    return out;
  }

  /** Decoder state is keyed by the source word this target word translates. */
  private decoderState(piece: Piece, position: number, srcWords: string[]): Float64Array {
    const e = seededVector(`piece:${piece.text}`, DIM);
    const pos = seededVector(`pos:${position}`, DIM);
    const aligned = seededVector(`word:${srcWords[piece.wordIndex]}:${piece.wordIndex}`, DIM);
    const out = new Float64Array(DIM);
    for (let i = 0; i < DIM; i++) {
      out[i] = e[i] * 0.4 + pos[i] * 0.2 + aligned[i] * 1.2;
    }
    return out;
  }

  private crossAttention(srcPieces: Piece[], tgtPieces: Piece[]): number[][] {
    const srcWords = [...new Set(srcPieces.map((p) => p.wordIndex))].map(
      (i) => srcPieces.find((p) => p.wordIndex === i)!.word,
    );
    const encoder = srcPieces.map((p, s) => this.encoderState(p, s));
    let decoder = tgtPieces.map((p, t) => this.decoderState(p, t, srcWords));

    const perLayerMeans: number[][][] = [];
    for (let layer = 0; layer < LAYERS; layer++) {
      const layerMean: number[][] = tgtPieces.map(() => new Array(srcPieces.length).fill(0));
      const nextDecoder: Float64Array[] = [];
      for (let t = 0; t < decoder.length; t++) {
        const context = new Float64Array(DIM);
        for (let head = 0; head < HEADS; head++) {
          const q = apply(this.proj[layer][head], decoder[t]);
          const scores = encoder.map((e) => dot(q, apply(this.proj[layer][head], e)) / Math.sqrt(DIM));
          const weights = softmax(scores);
          for (let s = 0; s < weights.length; s++) {
            layerMean[t][s] += weights[s] / HEADS;
            for (let i = 0; i < DIM; i++) {
              context[i] += (weights[s] * encoder[s][i]) / HEADS;
            }
          }
        }
        const merged = new Float64Array(DIM);
        for (let i = 0; i < DIM; i++) {
          merged[i] = decoder[t][i] + context[i] * 0.5;
        }
        nextDecoder.push(merged);
      }
      perLayerMeans.push(layerMean);
      decoder = nextDecoder;
    }

    const chosen =
      this.agg.kind === "last-mean" ? perLayerMeans[LAYERS - 1] : perLayerMeans[this.agg.layer - 1];
    return chosen.map((row) => {
      const total = row.reduce((a, b) => a + b, 0);
      return row.map((w) => w / total);
    });
  }
}
