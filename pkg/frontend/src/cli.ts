/**
 * CLI: `train-toy` trains the demo model on synthetic frames and exports an
 * FFDW bundle; `export` converts a saved tfjs LayersModel checkpoint.
 *
 *   node dist/cli.js train-toy --data DIR --epochs E --seed S --out W.ffdw
 *   node dist/cli.js export --src MODEL_DIR --layout tfjs-layers --spec SPEC.json --out W.ffdw
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import { bundleChecksum, bundleSidecar, writeBundleFile } from './bundle.js';
import { ensureBackend } from './backend.js';
import { loadModelFromDir, saveModelToDir } from './io.js';
import { exportBundle } from './exporter.js';
import { loadSpec, saveSpec } from './spec.js';
import { trainToy } from './train.js';

interface Args {
  command: string;
  flags: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new UsageError('expected a command: train-toy | export');
  }
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith('--') || i + 1 >= rest.length) {
      throw new UsageError(`malformed flag '${key}'`);
    }
    flags.set(key.slice(2), rest[i + 1]);
  }
  return { command, flags };
}

class UsageError extends Error {}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) {
    throw new UsageError(`missing required flag --${key}`);
  }
  return value;
}

function writeArtifacts(outPath: string, bundle: Parameters<typeof writeBundleFile>[1]): void {
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  writeBundleFile(outPath, bundle);
  const sidecarPath = outPath.replace(/(\.ffdw)?$/, '.sidecar.json');
  fs.writeFileSync(sidecarPath, JSON.stringify(bundleSidecar(bundle), null, 2) + '\n');
  console.log(`wrote ${outPath} (${bundle.tensors.size} tensors, sha256 ${bundleChecksum(bundle)})`);
  console.log(`wrote ${sidecarPath}`);
}

async function cmdTrainToy(flags: Map<string, string>): Promise<number> {
  const result = await trainToy({
    dataDir: need(flags, 'data'),
    epochs: parseInt(flags.get('epochs') ?? '8', 10),
    seed: parseInt(flags.get('seed') ?? '0', 10),
    batchSize: flags.has('batch-size') ? parseInt(flags.get('batch-size')!, 10) : undefined,
  });
  const out = need(flags, 'out');
  writeArtifacts(out, result.bundle);
  const specOut = flags.get('spec-out') ?? out.replace(/(\.ffdw)?$/, '.spec.json');
  saveSpec(specOut, result.spec);
  console.log(`wrote ${specOut}`);
  if (flags.has('model-out')) {
    await saveModelToDir(result.model, flags.get('model-out')!);
    console.log(`wrote tfjs checkpoint to ${flags.get('model-out')}`);
  }
  console.log(`held-out accuracy: ${result.testAccuracy.toFixed(3)} (chance 0.25)`);
  if (result.trainedEpochs > 0 && result.testAccuracy <= 0.25) {
    console.log('warning: training did not beat chance; try more epochs or another seed');
  }
  return 0;
}

async function cmdExport(flags: Map<string, string>): Promise<number> {
  const layout = flags.get('layout') ?? 'tfjs-layers';
  if (layout !== 'tfjs-layers') {
    throw new UsageError(`unsupported source layout '${layout}' (only tfjs-layers)`);
  }
  await ensureBackend();
  const spec = loadSpec(need(flags, 'spec'));
  const model = await loadModelFromDir(path.resolve(need(flags, 'src')));
  const bundle = exportBundle(model, spec);
  writeArtifacts(need(flags, 'out'), bundle);
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  try {
    const { command, flags } = parseArgs(argv);
    if (command === 'train-toy') return await cmdTrainToy(flags);
    if (command === 'export') return await cmdExport(flags);
    throw new UsageError(`unknown command '${command}'`);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] && path.resolve(process.argv[1]) === new URL(import.meta.url).pathname;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
