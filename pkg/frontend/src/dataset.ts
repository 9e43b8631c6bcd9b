/**
 * Loads manifest-described frame datasets into tensors.
 *
 * Consumes the pipeline's external formats only: manifest JSON plus PGM
 * frames, exactly as `ffdkit synth --mode frames` writes them.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';

import { readPgm } from './pgm.js';

/** Class codes fixed by the score-vector convention. */
export const CLASS_CODES: Record<string, number> = {
  alcohol: 0,
  control: 1,
  drug: 2,
  sleepiness: 3,
};
export const NUM_CLASSES = 4;

export interface ManifestEntry {
  sequence_id: string;
  subject_id: string;
  condition: string;
  device: string;
  split: 'train' | 'validation' | 'test';
  frame_paths: string[];
  frame_timestamps_ms?: number[];
}

export interface Manifest {
  version: number;
  entries: ManifestEntry[];
}

export function loadManifest(manifestPath: string): { manifest: Manifest; baseDir: string } {
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8')) as Manifest;
  if (manifest.version !== 1) {
    throw new Error(`unsupported manifest version ${manifest.version}`);
  }
  return { manifest, baseDir: path.dirname(manifestPath) };
}

export interface SplitData {
  /** [N, size, size, 3] float32 in [0, 1], gray replicated to 3 channels. */
  images: tf.Tensor4D;
  /** [N, 4] one-hot labels in class-code order. */
  labels: tf.Tensor2D;
  classCounts: number[];
}

export function loadSplit(
  manifest: Manifest,
  baseDir: string,
  split: ManifestEntry['split'],
  inputSize: number,
): SplitData {
  const frames: Float32Array[] = [];
  const codes: number[] = [];
  const classCounts = new Array(NUM_CLASSES).fill(0);
  for (const entry of manifest.entries) {
    if (entry.split !== split) continue;
    const code = CLASS_CODES[entry.condition];
    if (code === undefined) {
      throw new Error(`unknown condition '${entry.condition}' in ${entry.sequence_id}`);
    }
    for (const rel of entry.frame_paths) {
      const image = readPgm(path.join(baseDir, rel));
      if (image.width !== inputSize || image.height !== inputSize) {
        throw new Error(
          `frame ${rel} is ${image.width}x${image.height}, expected ${inputSize}x${inputSize}`,
        );
      }
      const values = new Float32Array(inputSize * inputSize * 3);
      for (let i = 0; i < image.pixels.length; i++) {
        const v = image.pixels[i] / 255;
        values[3 * i] = v;
        values[3 * i + 1] = v;
        values[3 * i + 2] = v;
      }
      frames.push(values);
      codes.push(code);
      classCounts[code] += 1;
    }
  }
  const n = frames.length;
  const flat = new Float32Array(n * inputSize * inputSize * 3);
  frames.forEach((f, i) => flat.set(f, i * f.length));
  const images = tf.tensor4d(flat, [n, inputSize, inputSize, 3]);
  const labels = tf.oneHot(tf.tensor1d(codes, 'int32'), NUM_CLASSES) as tf.Tensor2D;
  return { images, labels, classCounts };
}

/** weight_i = total / (numClasses * count_i); balances unequal class counts
 * in the loss, matching the pipeline's class-weight rule. */
export function classWeights(counts: number[]): Record<number, number> {
  const total = counts.reduce((a, b) => a + b, 0);
  const weights: Record<number, number> = {};
  counts.forEach((count, code) => {
    if (count <= 0) {
      throw new Error(`class code ${code} has no samples; cannot weight the loss`);
    }
    weights[code] = total / (counts.length * count);
  });
  return weights;
}

/** Deterministic in-place permutation driven by a 32-bit seeded generator. */
export function seededShuffle(n: number, seed: number): number[] {
  const rand = mulberry32(seed);
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
