/**
 * Toy training on synthetic frames. The model is deliberately tiny; its only
 * purpose is an honest end-to-end demo bundle, not any accuracy claim.
 */

import * as tf from '@tensorflow/tfjs';

import { ensureBackend } from './backend.js';
import { WeightBundle } from './bundle.js';
import { classWeights, loadManifest, loadSplit, seededShuffle } from './dataset.js';
import { buildModel } from './model.js';
import { exportBundle } from './exporter.js';
import { NetworkSpec, toySpec } from './spec.js';

export interface TrainOptions {
  dataDir: string;
  epochs: number;
  seed: number;
  batchSize?: number;
  learningRate?: number;
  quiet?: boolean;
}

export interface TrainResult {
  model: tf.LayersModel;
  spec: NetworkSpec;
  bundle: WeightBundle;
  testAccuracy: number;
  trainedEpochs: number;
}

export async function trainToy(options: TrainOptions): Promise<TrainResult> {
  await ensureBackend('training');
  const spec = toySpec();
  const { manifest, baseDir } = loadManifest(`${options.dataDir}/manifest.json`);
  const train = loadSplit(manifest, baseDir, 'train', spec.input_size);
  const val = loadSplit(manifest, baseDir, 'validation', spec.input_size);
  const test = loadSplit(manifest, baseDir, 'test', spec.input_size);

  const model = buildModel(spec, options.seed);
  model.compile({
    optimizer: tf.train.adam(options.learningRate ?? 3e-3),
    loss: 'categoricalCrossentropy',
    metrics: ['accuracy'],
  });

  if (options.epochs > 0) {
    // deterministic shuffle once up front; fit() itself runs with shuffle off
    const order = seededShuffle(train.images.shape[0], options.seed);
    const indices = tf.tensor1d(order, 'int32');
    const images = train.images.gather(indices);
    const labels = train.labels.gather(indices);
    await model.fit(images, labels, {
      epochs: options.epochs,
      batchSize: options.batchSize ?? 16,
      shuffle: false,
      classWeight: classWeights(train.classCounts),
      validationData: [val.images, val.labels],
      verbose: 0,
      callbacks: options.quiet
        ? []
        : [
            new tf.CustomCallback({
              onEpochEnd: async (epoch, logs) => {
                const loss = logs?.loss?.toFixed(4);
                const acc = (logs?.acc ?? logs?.accuracy)?.toFixed(3);
                const valAcc = (logs?.val_acc ?? logs?.val_accuracy)?.toFixed(3);
                console.log(`epoch ${epoch + 1}/${options.epochs} loss ${loss} acc ${acc} val_acc ${valAcc}`);
              },
            }),
          ],
    });
    tf.dispose([indices, images, labels]);
  }

  const evalResult = model.evaluate(test.images, test.labels, { batchSize: 32 }) as tf.Scalar[];
  const testAccuracy = (await evalResult[1].data())[0];
  tf.dispose(evalResult);
  tf.dispose([train.images, train.labels, val.images, val.labels, test.images, test.labels]);

  return {
    model,
    spec,
    bundle: exportBundle(model, spec),
    testAccuracy,
    trainedEpochs: options.epochs,
  };
}
