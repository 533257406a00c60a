/**
 * Pretrained-model backend built on @huggingface/transformers.
 *
 * Each core token is tokenized separately into subword ids and the
 * concatenated sequence is run through the model once per sentence, so
 * hidden-state positions map back to core tokens exactly (no offset
 * arithmetic). Per-token vectors are the mean of the covering subword
 * states from the selected hidden layer (default: last). Tokens whose
 * text produces no subword ids are unalignable.
 *
 * The package is imported lazily: it is an optional dependency, and the
 * model weights must already be available locally (or downloadable in
 * the deployment environment). Inference runs with no dropout, so the
 * output is deterministic for fixed weights.
 */

import type { Encoder } from './encoder.js';

interface TransformersModule {
  AutoTokenizer: { from_pretrained(name: string): Promise<any> };
  AutoModel: { from_pretrained(name: string, options?: object): Promise<any> };
}

export async function createTransformersEncoder(model: string): Promise<Encoder> {
  let transformers: TransformersModule;
  try {
    transformers = (await import('@huggingface/transformers' as string)) as TransformersModule;
  } catch {
    throw new Error(
      `model "${model}" needs the transformers backend; install it with ` +
        `"npm install @huggingface/transformers" (or use the built-in ` +
        `"hashed:<dim>" encoder, which needs no weights)`,
    );
  }
  const tokenizer = await transformers.AutoTokenizer.from_pretrained(model);
  const net = await transformers.AutoModel.from_pretrained(model, {
    output_hidden_states: true,
  });

  const tokenIds = (text: string): number[] =>
    Array.from(tokenizer.encode(text, { add_special_tokens: false }), Number);

  return {
    dim: 0, // resolved lazily from the first hidden state below
    layers: -1,

    async encodeBatch(sentences: string[][], layer: number) {
      const results: (Float32Array | null)[][] = [];
      for (const tokens of sentences) {
        const coverage: number[][] = [];
        const ids: number[] = [];
        for (const token of tokens) {
          const own = tokenIds(token);
          coverage.push(own.map((_, k) => ids.length + k));
          ids.push(...own);
        }
        if (ids.length === 0) {
          results.push(tokens.map(() => null));
          continue;
        }
        const output = await net({
          input_ids: toTensor(transformers, ids),
          attention_mask: onesTensor(transformers, ids.length),
        });
        const states = pickLayer(output, layer);
        const [, seqLen, dim] = states.dims as [number, number, number];
        (this as { dim: number }).dim = dim;
        const data = states.data as Float32Array;
        const perToken: (Float32Array | null)[] = [];
        for (const indexes of coverage) {
          if (indexes.length === 0) {
            perToken.push(null);
            continue;
          }
          const mean = new Float32Array(dim);
          for (const index of indexes) {
            if (index >= seqLen) continue;
            for (let j = 0; j < dim; j++) mean[j] += data[index * dim + j];
          }
          for (let j = 0; j < dim; j++) mean[j] = Math.fround(mean[j] / indexes.length);
          perToken.push(mean);
        }
        results.push(perToken);
      }
      return results;
    },
  };
}

function toTensor(transformers: any, ids: number[]) {
  const { Tensor } = transformers;
  return new Tensor('int64', BigInt64Array.from(ids.map(BigInt)), [1, ids.length]);
}

function onesTensor(transformers: any, length: number) {
  const { Tensor } = transformers;
  return new Tensor('int64', BigInt64Array.from({ length }, () => 1n), [1, length]);
}

function pickLayer(output: any, layer: number) {
  if (layer === -1) {
    if (output.last_hidden_state) return output.last_hidden_state;
    const states = output.hidden_states;
    return states[states.length - 1];
  }
  if (!output.hidden_states) {
    throw new Error('model output has no hidden_states; only --layer -1 is supported');
  }
  return output.hidden_states[layer];
}
