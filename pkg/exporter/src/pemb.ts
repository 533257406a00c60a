/**
 * PEMB binary writer/reader (little-endian):
 *   "PEMB" | version u16=1 | dim u32 | count u64 |
 *   count * ( article u32 | sentence u32 | token u32 | dim * float32 )
 *
 * Records are written in (article, sentence, token) key order so a
 * re-run over identical inputs produces a byte-identical file.
 */

import { writeFileSync, readFileSync } from 'node:fs';

export const PEMB_VERSION = 1;
const MAGIC = Buffer.from('PEMB', 'ascii');
const HEADER_SIZE = 4 + 2 + 4 + 8;

export interface PembRecord {
  articleId: number;
  sentenceIndex: number;
  tokenIndex: number;
  vector: Float32Array;
}

export function encodePemb(dim: number, records: PembRecord[]): Buffer {
  if (dim <= 0) throw new Error(`dim must be positive, got ${dim}`);
  const recordSize = 12 + 4 * dim;
  const buffer = Buffer.alloc(HEADER_SIZE + records.length * recordSize);
  MAGIC.copy(buffer, 0);
  buffer.writeUInt16LE(PEMB_VERSION, 4);
  buffer.writeUInt32LE(dim, 6);
  buffer.writeBigUInt64LE(BigInt(records.length), 10);
  const sorted = [...records].sort(
    (a, b) =>
      a.articleId - b.articleId ||
      a.sentenceIndex - b.sentenceIndex ||
      a.tokenIndex - b.tokenIndex,
  );
  let offset = HEADER_SIZE;
  for (const record of sorted) {
    if (record.vector.length !== dim) {
      throw new Error(
        `record (${record.articleId},${record.sentenceIndex},${record.tokenIndex}) ` +
          `has ${record.vector.length} floats, want ${dim}`,
      );
    }
    buffer.writeUInt32LE(record.articleId, offset);
    buffer.writeUInt32LE(record.sentenceIndex, offset + 4);
    buffer.writeUInt32LE(record.tokenIndex, offset + 8);
    offset += 12;
    for (let j = 0; j < dim; j++) {
      buffer.writeFloatLE(record.vector[j], offset);
      offset += 4;
    }
  }
  return buffer;
}

export function writePemb(path: string, dim: number, records: PembRecord[]): void {
  writeFileSync(path, encodePemb(dim, records));
}

export interface PembFile {
  dim: number;
  records: PembRecord[];
}

export function readPemb(path: string): PembFile {
  const data = readFileSync(path);
  if (data.length < HEADER_SIZE || !data.subarray(0, 4).equals(MAGIC)) {
    throw new Error(`${path}: bad magic at byte offset 0`);
  }
  const version = data.readUInt16LE(4);
  if (version !== PEMB_VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const dim = data.readUInt32LE(6);
  if (dim <= 0) throw new Error(`${path}: non-positive dim at byte offset 6`);
  const count = Number(data.readBigUInt64LE(10));
  const recordSize = 12 + 4 * dim;
  if (data.length !== HEADER_SIZE + count * recordSize) {
    throw new Error(`${path}: size mismatch for ${count} records of dim ${dim}`);
  }
  const records: PembRecord[] = [];
  const seen = new Set<string>();
  let offset = HEADER_SIZE;
  for (let i = 0; i < count; i++) {
    const articleId = data.readUInt32LE(offset);
    const sentenceIndex = data.readUInt32LE(offset + 4);
    const tokenIndex = data.readUInt32LE(offset + 8);
    const key = `${articleId}:${sentenceIndex}:${tokenIndex}`;
    if (seen.has(key)) throw new Error(`${path}: duplicate key ${key} at offset ${offset}`);
    seen.add(key);
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = data.readFloatLE(offset + 12 + 4 * j);
    }
    records.push({ articleId, sentenceIndex, tokenIndex, vector });
    offset += recordSize;
  }
  return { dim, records };
}
