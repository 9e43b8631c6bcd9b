/**
 * End-to-end contract with the Python engine: synthetic frames come from the
 * pipeline CLI, the toy model trains here, the exported FFDW bundle is loaded
 * by the pipeline's CNN scorer, and the two forward passes must agree.
 */

import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { bundleChecksum, writeBundleFile } from '../src/bundle.js';
import { readScoreCsv, runPrimary } from '../src/primary.js';
import { saveSpec, toySpec } from '../src/spec.js';
import { trainToy } from '../src/train.js';
import { writePgm } from '../src/pgm.js';

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'ffd-roundtrip-'));
const dataDir = path.join(tmp, 'data');

beforeAll(() => {
  runPrimary([
    'synth', '--mode', 'frames', '--out', dataDir,
    '--subjects', '28', '--frames', '4', '--size', '64', '--seed', '3',
  ]);
});

afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function seededBytes(seed: number, n: number): Uint8Array {
  let state = seed >>> 0;
  const out = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    state = (state * 1664525 + 1013904223) >>> 0;
    out[i] = state >>> 24;
  }
  return out;
}

describe('toy training and FFDW round-trip', () => {
  it('trained toy bundle matches the engine forward pass within 1e-4', async () => {
    const result = await trainToy({ dataDir, epochs: 6, seed: 7, quiet: true });
    // smoke bar, not a benchmark: four visually distinct pupil-ratio bands
    expect(result.testAccuracy).toBeGreaterThan(0.5);

    const bundlePath = path.join(tmp, 'toy.ffdw');
    const specPath = path.join(tmp, 'toy.spec.json');
    writeBundleFile(bundlePath, result.bundle);
    saveSpec(specPath, result.spec);

    // ten random probe frames, written in the pipeline's frame format
    const probeDir = path.join(tmp, 'probe');
    fs.mkdirSync(path.join(probeDir, 'frames'), { recursive: true });
    const size = result.spec.input_size;
    const entries = [];
    const inputs: Float32Array[] = [];
    for (let i = 0; i < 10; i++) {
      const pixels = seededBytes(1000 + i, size * size);
      const rel = `frames/probe_${String(i).padStart(2, '0')}.pgm`;
      writePgm(path.join(probeDir, rel), { width: size, height: size, pixels });
      entries.push({
        sequence_id: `probe${String(i).padStart(2, '0')}`,
        subject_id: `p${i}`,
        condition: 'control',
        device: 'probe',
        split: 'test',
        frame_paths: [rel],
      });
      const values = new Float32Array(size * size * 3);
      for (let p = 0; p < pixels.length; p++) {
        const v = pixels[p] / 255;
        values[3 * p] = v;
        values[3 * p + 1] = v;
        values[3 * p + 2] = v;
      }
      inputs.push(values);
    }
    fs.writeFileSync(
      path.join(probeDir, 'manifest.json'),
      JSON.stringify({ version: 1, entries }),
    );

    const scoresPath = path.join(tmp, 'probe_scores.csv');
    runPrimary([
      'score', path.join(probeDir, 'manifest.json'), '--source', 'cnn',
      '--spec', specPath, '--weights', bundlePath, '--out', scoresPath,
    ]);
    const rows = readScoreCsv(scoresPath);
    expect(rows).toHaveLength(10);

    let worst = 0;
    for (const row of rows) {
      const i = parseInt(row.sequenceId.slice(5), 10);
      const input = tf.tensor4d(inputs[i], [1, size, size, 3]);
      const probs = await (result.model.predict(input) as tf.Tensor).data();
      input.dispose();
      // model outputs class-code order; the CSV carries control first
      const expected = [probs[1], probs[0], probs[2], probs[3]];
      row.probs.forEach((p, k) => {
        worst = Math.max(worst, Math.abs(p - expected[k]));
      });
    }
    expect(worst).toBeLessThanOrEqual(1e-4);
  });

  it('epochs=0 stays near chance accuracy', async () => {
    const result = await trainToy({ dataDir, epochs: 0, seed: 7, quiet: true });
    expect(result.testAccuracy).toBeLessThanOrEqual(0.55);
  });

  it('identical seeds export identical bundle checksums', async () => {
    const a = await trainToy({ dataDir, epochs: 1, seed: 5, quiet: true });
    const b = await trainToy({ dataDir, epochs: 1, seed: 5, quiet: true });
    expect(bundleChecksum(a.bundle)).toBe(bundleChecksum(b.bundle));
    const c = await trainToy({ dataDir, epochs: 1, seed: 6, quiet: true });
    expect(bundleChecksum(c.bundle)).not.toBe(bundleChecksum(a.bundle));
  });
});
