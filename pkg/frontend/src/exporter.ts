/**
 * Maps a trained tfjs LayersModel onto the FFDW tensor layout.
 *
 * tfjs conv kernels are already (kh, kw, in, out) and dense kernels
 * (in, out); the only documented transposition is squeezing the depthwise
 * kernel's trailing depth-multiplier axis: (kh, kw, C, 1) -> (kh, kw, C).
 * Every spec tensor must resolve exactly once; anything missing or
 * mis-shaped aborts the export with the offending names listed.
 */

import * as tf from '@tensorflow/tfjs';

import { BundleTensor, WeightBundle } from './bundle.js';
import { layerNameFor, BN_EPSILON } from './model.js';
import { NetworkSpec, blockPlans, requiredTensors } from './spec.js';

const BN_PARAM_ORDER = ['gamma', 'beta', 'mean', 'var'] as const;

function tensorFrom(weights: tf.Tensor, reshapeTo?: number[]): BundleTensor {
  const shaped = reshapeTo ? weights.reshape(reshapeTo) : weights;
  return {
    shape: shaped.shape.slice(),
    data: new Float32Array(shaped.dataSync()),
  };
}

function collectModelTensors(model: tf.LayersModel, spec: NetworkSpec): Map<string, BundleTensor> {
  const out = new Map<string, BundleTensor>();
  const layer = (name: string) => {
    try {
      return model.getLayer(name);
    } catch {
      return undefined;
    }
  };
  const takeConv = (base: string) => {
    const conv = layer(`${layerNameFor(base)}_conv`);
    if (conv) {
      out.set(`${base}/kernel`, tensorFrom(conv.getWeights()[0]));
    }
  };
  const takeDepthwise = (base: string) => {
    const conv = layer(`${layerNameFor(base)}_dw_conv`);
    if (conv) {
      const kernel = conv.getWeights()[0]; // (kh, kw, C, multiplier=1)
      out.set(`${base}/dw/kernel`, tensorFrom(kernel, kernel.shape.slice(0, 3)));
    }
  };
  const takeBn = (base: string) => {
    const bn = layer(`${layerNameFor(base)}_bn`);
    if (bn) {
      const weights = bn.getWeights(); // gamma, beta, movingMean, movingVariance
      BN_PARAM_ORDER.forEach((param, i) => out.set(`${base}/${param}`, tensorFrom(weights[i])));
    }
  };

  takeConv('stem');
  takeBn('stem');
  for (const plan of blockPlans(spec)) {
    if (plan.expand) {
      takeConv(`${plan.name}/expand`);
      takeBn(`${plan.name}/expand`);
    }
    takeDepthwise(plan.name);
    takeBn(`${plan.name}/dw`);
    takeConv(`${plan.name}/project`);
    takeBn(`${plan.name}/project`);
  }
  takeConv('head');
  takeBn('head');
  const classifier = layer('classifier');
  if (classifier) {
    const [kernel, bias] = classifier.getWeights();
    out.set('classifier/weight', tensorFrom(kernel));
    out.set('classifier/bias', tensorFrom(bias));
  }
  return out;
}

export function exportBundle(model: tf.LayersModel, spec: NetworkSpec): WeightBundle {
  const available = collectModelTensors(model, spec);
  const required = requiredTensors(spec);
  const missing: string[] = [];
  const mismatched: string[] = [];
  const tensors = new Map<string, BundleTensor>();
  for (const [name, shape] of required) {
    const tensor = available.get(name);
    if (!tensor) {
      missing.push(name);
      continue;
    }
    if (tensor.shape.length !== shape.length || tensor.shape.some((d, i) => d !== shape[i])) {
      mismatched.push(`${name}: model [${tensor.shape}] vs spec [${shape}]`);
      continue;
    }
    tensors.set(name, tensor);
  }
  if (missing.length > 0) {
    throw new Error(`unresolved spec tensors: ${missing.join(', ')}`);
  }
  if (mismatched.length > 0) {
    throw new Error(`shape mismatches: ${mismatched.join('; ')}`);
  }
  return { epsilon: BN_EPSILON, tensors };
}
