import * as tf from '@tensorflow/tfjs';

import { WeightBundle } from '../src/bundle.js';
import { exportBundle } from '../src/exporter.js';
import { buildModel } from '../src/model.js';
import { NetworkSpec } from '../src/spec.js';

export function modelFor(spec: NetworkSpec, seed: number): tf.LayersModel {
  return buildModel(spec, seed);
}

export function exporter(model: tf.LayersModel, spec: NetworkSpec): WeightBundle {
  return exportBundle(model, spec);
}
