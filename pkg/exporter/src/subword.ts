/**
 * Deterministic subword splitting for the built-in hashed encoder.
 *
 * Tokens are case-folded and broken into pieces: runs of encodable
 * letters/digits are chunked four characters at a time (continuation
 * chunks get a "##" prefix, so "invasion" -> ["inva", "##sion"]), and
 * encodable punctuation becomes single-character pieces. Characters
 * outside the vocabulary (emoji, rare scripts) are dropped; a token
 * with no surviving piece is unalignable.
 */

const MAX_CODE_POINT = 0x024f; // Basic Latin through Latin Extended-B
const CHUNK = 4;

function encodable(ch: string): boolean {
  const code = ch.codePointAt(0)!;
  return code >= 0x20 && code <= MAX_CODE_POINT;
}

function isAlnum(ch: string): boolean {
  return /[\p{L}\p{N}]/u.test(ch);
}

export function splitToken(text: string): string[] {
  const pieces: string[] = [];
  let run = '';
  const flushRun = () => {
    for (let i = 0; i < run.length; i += CHUNK) {
      const chunk = run.slice(i, i + CHUNK);
      pieces.push(i === 0 ? chunk : `##${chunk}`);
    }
    run = '';
  };
  for (const ch of text.toLowerCase()) {
    if (!encodable(ch)) {
      flushRun();
      continue;
    }
    if (isAlnum(ch)) {
      run += ch;
    } else {
      flushRun();
      pieces.push(ch);
    }
  }
  flushRun();
  return pieces;
}

export interface SentencePieces {
  /** flat piece sequence for the whole sentence */
  pieces: string[];
  /** for each token: indexes into `pieces` covering it (empty = unalignable) */
  coverage: number[][];
}

export function splitSentence(tokens: string[]): SentencePieces {
  const pieces: string[] = [];
  const coverage: number[][] = [];
  for (const token of tokens) {
    const own = splitToken(token);
    const indexes: number[] = [];
    for (const piece of own) {
      indexes.push(pieces.length);
      pieces.push(piece);
    }
    coverage.push(indexes);
  }
  return { pieces, coverage };
}
