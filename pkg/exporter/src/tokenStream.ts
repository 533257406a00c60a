/**
 * Reader for the core toolkit's token-stream export: one JSON record per
 * token with (article_id, sentence_index, token_index, text, start, end).
 * Records are regrouped into sentences and validated for contiguous
 * token indexes so downstream alignment can trust positions.
 */

export interface TokenRecord {
  articleId: number;
  sentenceIndex: number;
  tokenIndex: number;
  text: string;
  start: number;
  end: number;
}

export interface SentenceTokens {
  articleId: number;
  sentenceIndex: number;
  tokens: TokenRecord[];
}

function asInt(value: unknown, field: string, line: number): number {
  if (typeof value !== 'number' || !Number.isInteger(value) || value < 0) {
    throw new Error(`line ${line}: field ${field} must be a non-negative integer`);
  }
  return value;
}

export function parseTokenStream(content: string): TokenRecord[] {
  const records: TokenRecord[] = [];
  const lines = content.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`line ${i + 1}: invalid JSON record (${(err as Error).message})`);
    }
    if (typeof obj.text !== 'string') {
      throw new Error(`line ${i + 1}: field text must be a string`);
    }
    records.push({
      articleId: asInt(obj.article_id, 'article_id', i + 1),
      sentenceIndex: asInt(obj.sentence_index, 'sentence_index', i + 1),
      tokenIndex: asInt(obj.token_index, 'token_index', i + 1),
      text: obj.text,
      start: asInt(obj.start, 'start', i + 1),
      end: asInt(obj.end, 'end', i + 1),
    });
  }
  return records;
}

export function groupSentences(records: TokenRecord[]): SentenceTokens[] {
  const byKey = new Map<string, TokenRecord[]>();
  for (const record of records) {
    const key = `${record.articleId}:${record.sentenceIndex}`;
    let bucket = byKey.get(key);
    if (!bucket) {
      bucket = [];
      byKey.set(key, bucket);
    }
    bucket.push(record);
  }
  const sentences: SentenceTokens[] = [];
  for (const bucket of byKey.values()) {
    bucket.sort((a, b) => a.tokenIndex - b.tokenIndex);
    bucket.forEach((record, i) => {
      if (record.tokenIndex !== i) {
        throw new Error(
          `article ${record.articleId} sentence ${record.sentenceIndex}: ` +
            `token indexes are not contiguous from 0`,
        );
      }
    });
    sentences.push({
      articleId: bucket[0].articleId,
      sentenceIndex: bucket[0].sentenceIndex,
      tokens: bucket,
    });
  }
  sentences.sort(
    (a, b) => a.articleId - b.articleId || a.sentenceIndex - b.sentenceIndex,
  );
  return sentences;
}
