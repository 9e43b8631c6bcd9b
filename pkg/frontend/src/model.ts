/**
 * Builds the trainable model from a NetworkSpec so the architecture and the
 * exported spec JSON cannot drift apart. Layer names follow the bundle's
 * tensor paths ('/' replaced by '_' to satisfy layer-name rules).
 */

import * as tf from '@tensorflow/tfjs';

import { NetworkSpec, blockPlans, headChannels, widthScaledChannels } from './spec.js';

export const BN_EPSILON = 1e-3;

export function layerNameFor(tensorBase: string): string {
  return tensorBase.replace(/\//g, '_');
}

export function buildModel(spec: NetworkSpec, seed: number): tf.LayersModel {
  let nextSeed = seed;
  const takeSeed = () => nextSeed++;
  const conv = (x: tf.SymbolicTensor, base: string, filters: number, kernel: number, stride: number) =>
    tf.layers
      .conv2d({
        name: `${layerNameFor(base)}_conv`,
        filters,
        kernelSize: kernel,
        strides: stride,
        padding: 'same',
        useBias: false,
        kernelInitializer: tf.initializers.heNormal({ seed: takeSeed() }),
      })
      .apply(x) as tf.SymbolicTensor;
  const bn = (x: tf.SymbolicTensor, base: string) =>
    tf.layers
      .batchNormalization({ name: `${layerNameFor(base)}_bn`, epsilon: BN_EPSILON, momentum: 0.8 })
      .apply(x) as tf.SymbolicTensor;
  const relu6 = (x: tf.SymbolicTensor, name: string) =>
    tf.layers.reLU({ name, maxValue: 6 }).apply(x) as tf.SymbolicTensor;

  const input = tf.input({ shape: [spec.input_size, spec.input_size, 3], name: 'frame' });

  const stemCh = widthScaledChannels(spec.alpha, spec.stem.out_ch);
  let x = conv(input, 'stem', stemCh, spec.stem.kernel, spec.stem.stride);
  x = relu6(bn(x, 'stem'), 'stem_relu');

  for (const plan of blockPlans(spec)) {
    let y = x;
    if (plan.expand) {
      y = conv(y, `${plan.name}/expand`, plan.hiddenCh, 1, 1);
      y = relu6(bn(y, `${plan.name}/expand`), `${plan.name}_expand_relu`);
    }
    y = tf.layers
      .depthwiseConv2d({
        name: `${layerNameFor(plan.name)}_dw_conv`,
        kernelSize: 3,
        strides: plan.stride,
        padding: 'same',
        useBias: false,
        depthwiseInitializer: tf.initializers.heNormal({ seed: takeSeed() }),
      })
      .apply(y) as tf.SymbolicTensor;
    y = relu6(bn(y, `${plan.name}/dw`), `${plan.name}_dw_relu`);
    y = conv(y, `${plan.name}/project`, plan.outCh, 1, 1);
    y = bn(y, `${plan.name}/project`); // linear bottleneck: no activation
    x =
      plan.stride === 1 && plan.inCh === plan.outCh
        ? (tf.layers.add({ name: `${plan.name}_residual` }).apply([x, y]) as tf.SymbolicTensor)
        : y;
  }

  x = conv(x, 'head', headChannels(spec), 1, 1);
  x = relu6(bn(x, 'head'), 'head_relu');
  x =
    spec.head.pooling === 'global_average'
      ? (tf.layers.globalAveragePooling2d({ name: 'pool' }).apply(x) as tf.SymbolicTensor)
      : (tf.layers.flatten({ name: 'flatten' }).apply(x) as tf.SymbolicTensor);
  const output = tf.layers
    .dense({
      name: 'classifier',
      units: spec.head.classes,
      activation: 'softmax',
      kernelInitializer: tf.initializers.glorotUniform({ seed: takeSeed() }),
    })
    .apply(x) as tf.SymbolicTensor;

  return tf.model({ inputs: input, outputs: output, name: 'ffd_toy' });
}
