/**
 * Orchestration: token stream in, PEMB file out.
 *
 * Sentences are encoded in batches, per-token vectors come back from
 * the selected backend (mean of covering subword pieces), unalignable
 * tokens get zero vectors and are counted, and the run aborts when the
 * alignment failure rate exceeds 5%.
 */

import { readFileSync } from 'node:fs';

import { createEncoder, Encoder } from './encoder.js';
import { PembRecord, writePemb } from './pemb.js';
import { groupSentences, parseTokenStream, SentenceTokens } from './tokenStream.js';

export interface ExportOptions {
  model?: string;
  layer?: number;
  batchSize?: number;
}

export interface ExportStats {
  tokens: number;
  sentences: number;
  unalignable: number;
  dim: number;
}

export const MAX_UNALIGNABLE_RATE = 0.05;

export async function exportEmbeddings(
  tokensPath: string,
  outPath: string,
  options: ExportOptions = {},
): Promise<ExportStats> {
  const records = parseTokenStream(readFileSync(tokensPath, 'utf-8'));
  const sentences = groupSentences(records);
  const encoder = await createEncoder(options.model ?? 'hashed:64');
  const layer = options.layer ?? -1;
  const batchSize = options.batchSize ?? 16;
  const out: PembRecord[] = [];
  const failed: string[] = [];
  let dim = encoder.dim;
  for (let i = 0; i < sentences.length; i += batchSize) {
    const batch = sentences.slice(i, i + batchSize);
    const encoded = await encoder.encodeBatch(
      batch.map((s) => s.tokens.map((t) => t.text)),
      layer,
    );
    dim = encoder.dim || dim;
    for (let k = 0; k < batch.length; k++) {
      collectSentence(batch[k], encoded[k], dim, out, failed);
    }
  }
  if (records.length > 0 && failed.length / records.length > MAX_UNALIGNABLE_RATE) {
    const sample = failed.slice(0, 10).join(', ');
    throw new Error(
      `alignment failure rate ${(failed.length / records.length).toFixed(3)} ` +
        `exceeds ${MAX_UNALIGNABLE_RATE} (${failed.length}/${records.length}; ` +
        `e.g. ${sample})`,
    );
  }
  writePemb(outPath, dim, out);
  return {
    tokens: records.length,
    sentences: sentences.length,
    unalignable: failed.length,
    dim,
  };
}

function collectSentence(
  sentence: SentenceTokens,
  vectors: (Float32Array | null)[],
  dim: number,
  out: PembRecord[],
  failed: string[],
): void {
  if (vectors.length !== sentence.tokens.length) {
    throw new Error(
      `encoder returned ${vectors.length} vectors for ` +
        `${sentence.tokens.length} tokens (article ${sentence.articleId} ` +
        `sentence ${sentence.sentenceIndex})`,
    );
  }
  for (let i = 0; i < sentence.tokens.length; i++) {
    const token = sentence.tokens[i];
    let vector = vectors[i];
    if (vector === null) {
      failed.push(
        `article ${token.articleId} sentence ${token.sentenceIndex} ` +
          `token ${token.tokenIndex} (${JSON.stringify(token.text)})`,
      );
      vector = new Float32Array(dim);
    }
    out.push({
      articleId: token.articleId,
      sentenceIndex: token.sentenceIndex,
      tokenIndex: token.tokenIndex,
      vector,
    });
  }
}
