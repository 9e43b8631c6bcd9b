/** Helpers for driving the Python pipeline CLI (the primary engine). */

import { spawnSync } from 'node:child_process';
import * as fs from 'node:fs';

const PYTHON = process.env.FFDKIT_PYTHON ?? 'python3';

export function runPrimary(args: string[]): string {
  const result = spawnSync(PYTHON, ['-m', 'ffdkit', ...args], {
    encoding: 'utf8',
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    throw result.error;
  }
  if (result.status !== 0) {
    throw new Error(`ffdkit ${args[0]} failed (${result.status}): ${result.stderr}`);
  }
  return result.stdout;
}

export interface ScoreRow {
  sequenceId: string;
  frameIndex: number;
  /** (p_control, p_alcohol, p_drug, p_sleep), the score CSV column order. */
  probs: [number, number, number, number];
}

export function readScoreCsv(path: string): ScoreRow[] {
  const lines = fs.readFileSync(path, 'utf8').trim().split('\n');
  const header = lines.shift();
  if (header !== 'sequence_id,frame_index,p_control,p_alcohol,p_drug,p_sleep') {
    throw new Error(`unexpected score CSV header: ${header}`);
  }
  return lines.map((line) => {
    const [seq, idx, c, a, d, s] = line.split(',');
    return {
      sequenceId: seq,
      frameIndex: parseInt(idx, 10),
      probs: [parseFloat(c), parseFloat(a), parseFloat(d), parseFloat(s)],
    };
  });
}
