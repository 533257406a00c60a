#!/usr/bin/env node
/**
 * pemb-export --tokens <tokens.jsonl> --out <vectors.pemb>
 *             [--model hashed:64 | <pretrained model name/path>]
 *             [--layer -1] [--batch-size 16]
 *
 * Reads the core toolkit's token-stream export, encodes every token,
 * and writes a PEMB embedding file. Stats go to stderr as key=value
 * lines; exit code 1 is usage, 2 any export failure.
 */

import { exportEmbeddings } from './exporter.js';

interface CliArgs {
  tokens: string;
  out: string;
  model: string;
  layer: number;
  batchSize: number;
}

function parseArgs(argv: string[]): CliArgs {
  const args: Partial<CliArgs> = { model: 'hashed:64', layer: -1, batchSize: 16 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case '--tokens':
        args.tokens = value;
        i++;
        break;
      case '--out':
        args.out = value;
        i++;
        break;
      case '--model':
        args.model = value;
        i++;
        break;
      case '--layer':
        args.layer = Number.parseInt(value, 10);
        i++;
        break;
      case '--batch-size':
        args.batchSize = Number.parseInt(value, 10);
        i++;
        break;
      case '--help':
      case '-h':
        console.error('usage: pemb-export --tokens FILE --out FILE [--model SPEC] [--layer N] [--batch-size N]');
        process.exit(0);
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  if (!args.tokens || !args.out) {
    throw new UsageError('--tokens and --out are required');
  }
  if (!Number.isInteger(args.layer!)) throw new UsageError('--layer must be an integer');
  if (!Number.isInteger(args.batchSize!) || args.batchSize! <= 0) {
    throw new UsageError('--batch-size must be a positive integer');
  }
  return args as CliArgs;
}

class UsageError extends Error {}

async function main(): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 1;
  }
  try {
    const stats = await exportEmbeddings(args.tokens, args.out, {
      model: args.model,
      layer: args.layer,
      batchSize: args.batchSize,
    });
    console.error(`tokens=${stats.tokens}`);
    console.error(`sentences=${stats.sentences}`);
    console.error(`dim=${stats.dim}`);
    console.error(`unalignable=${stats.unalignable}`);
    return 0;
  } catch (err) {
    console.error(`export failed: ${(err as Error).message}`);
    return 2;
  }
}

main().then((code) => {
  process.exitCode = code;
});
