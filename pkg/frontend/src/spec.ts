/**
 * Network-spec JSON (the inference engine's architecture description) and
 * the tensor-shape manifest derived from it. Mirrors the engine's channel
 * rounding so exported bundles validate before they ever reach Python.
 */

import * as fs from 'node:fs';

export interface BlockDef {
  t: number;
  c: number;
  n: number;
  s: number;
}

export interface NetworkSpec {
  version: number;
  alpha: number;
  input_size: number;
  stem: { out_ch: number; kernel: number; stride: number };
  blocks: BlockDef[];
  head: { conv_ch: number; pooling: 'flatten' | 'global_average'; classes: number };
}

/** Round alpha*base to a multiple of 8, never below 8, bumping one step if
 * rounding lost more than 10% of the scaled value. */
export function widthScaledChannels(alpha: number, base: number): number {
  const v = alpha * base;
  let scaled = Math.max(8, Math.floor((v + 4) / 8) * 8);
  if (scaled < 0.9 * v) {
    scaled += 8;
  }
  return scaled;
}

export interface BlockPlan {
  name: string;
  inCh: number;
  hiddenCh: number;
  outCh: number;
  stride: number;
  expand: boolean;
}

export function blockPlans(spec: NetworkSpec): BlockPlan[] {
  const plans: BlockPlan[] = [];
  let inCh = widthScaledChannels(spec.alpha, spec.stem.out_ch);
  let index = 0;
  for (const block of spec.blocks) {
    const outCh = widthScaledChannels(spec.alpha, block.c);
    for (let repeat = 0; repeat < block.n; repeat++) {
      const hiddenCh = inCh * block.t;
      plans.push({
        name: `block${String(index).padStart(2, '0')}`,
        inCh,
        hiddenCh,
        outCh,
        stride: repeat === 0 ? block.s : 1,
        expand: hiddenCh !== inCh,
      });
      inCh = outCh;
      index += 1;
    }
  }
  return plans;
}

export function headChannels(spec: NetworkSpec): number {
  return spec.alpha > 1.0
    ? widthScaledChannels(spec.alpha, spec.head.conv_ch)
    : spec.head.conv_ch;
}

export function featureMapSize(spec: NetworkSpec): number {
  let size = Math.ceil(spec.input_size / spec.stem.stride);
  for (const plan of blockPlans(spec)) {
    size = Math.ceil(size / plan.stride);
  }
  return size;
}

export function featureCount(spec: NetworkSpec): number {
  const head = headChannels(spec);
  if (spec.head.pooling === 'global_average') {
    return head;
  }
  const side = featureMapSize(spec);
  return side * side * head;
}

/** Tensor name -> expected shape, in serialization order. */
export function requiredTensors(spec: NetworkSpec): Map<string, number[]> {
  const shapes = new Map<string, number[]>();
  const bn = (base: string, ch: number) => {
    for (const p of ['gamma', 'beta', 'mean', 'var']) {
      shapes.set(`${base}/${p}`, [ch]);
    }
  };
  const stemCh = widthScaledChannels(spec.alpha, spec.stem.out_ch);
  const k = spec.stem.kernel;
  shapes.set('stem/kernel', [k, k, 3, stemCh]);
  bn('stem', stemCh);
  const plans = blockPlans(spec);
  for (const plan of plans) {
    if (plan.expand) {
      shapes.set(`${plan.name}/expand/kernel`, [1, 1, plan.inCh, plan.hiddenCh]);
      bn(`${plan.name}/expand`, plan.hiddenCh);
    }
    shapes.set(`${plan.name}/dw/kernel`, [3, 3, plan.hiddenCh]);
    bn(`${plan.name}/dw`, plan.hiddenCh);
    shapes.set(`${plan.name}/project/kernel`, [1, 1, plan.hiddenCh, plan.outCh]);
    bn(`${plan.name}/project`, plan.outCh);
  }
  const last = plans.length > 0 ? plans[plans.length - 1].outCh : stemCh;
  shapes.set('head/kernel', [1, 1, last, headChannels(spec)]);
  bn('head', headChannels(spec));
  shapes.set('classifier/weight', [featureCount(spec), spec.head.classes]);
  shapes.set('classifier/bias', [spec.head.classes]);
  return shapes;
}

export function loadSpec(path: string): NetworkSpec {
  const spec = JSON.parse(fs.readFileSync(path, 'utf8')) as NetworkSpec;
  if (spec.version !== 1) {
    throw new Error(`unsupported network spec version ${spec.version}`);
  }
  return spec;
}

export function saveSpec(path: string, spec: NetworkSpec): void {
  fs.writeFileSync(path, JSON.stringify(spec, null, 2) + '\n');
}

/** The deliberately tiny demo architecture: 3 inverted-residual instances
 * on a 64x64 input, flatten head. */
export function toySpec(): NetworkSpec {
  return {
    version: 1,
    alpha: 1.0,
    input_size: 64,
    stem: { out_ch: 8, kernel: 3, stride: 2 },
    blocks: [
      { t: 1, c: 8, n: 1, s: 2 },
      { t: 6, c: 16, n: 2, s: 2 },
    ],
    head: { conv_ch: 32, pooling: 'flatten', classes: 4 },
  };
}
