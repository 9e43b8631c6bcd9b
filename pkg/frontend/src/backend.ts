/**
 * Backend selection: prefer the WASM kernels (much faster than plain-JS
 * CPU), pinned to a single thread so runs are reproducible. Falls back to
 * the JS CPU backend if WASM cannot initialize.
 */

import * as tf from '@tensorflow/tfjs';
import { setThreadsCount, setWasmPaths } from '@tensorflow/tfjs-backend-wasm';
import { createRequire } from 'node:module';
import * as path from 'node:path';

let ready: Promise<string> | undefined;

/**
 * mode 'inference' tries wasm first; 'training' always uses the JS CPU
 * backend because wasm lacks the conv backprop kernels.
 */
export function ensureBackend(mode: 'inference' | 'training' = 'inference'): Promise<string> {
  if (mode === 'training') {
    ready = undefined;
    return tf.setBackend('cpu').then(async () => {
      await tf.ready();
      return 'cpu';
    });
  }
  if (!ready) {
    ready = (async () => {
      try {
        const require = createRequire(import.meta.url);
        const wasmBinary = require.resolve(
          '@tensorflow/tfjs-backend-wasm/dist/tfjs-backend-wasm.wasm',
        );
        setWasmPaths(path.dirname(wasmBinary) + path.sep);
        setThreadsCount(1);
        if (await tf.setBackend('wasm')) {
          await tf.ready();
          return 'wasm';
        }
      } catch {
        // fall through to the JS CPU backend
      }
      await tf.setBackend('cpu');
      await tf.ready();
      return 'cpu';
    })();
  }
  return ready;
}
