/**
 * FFDW weight-bundle serialization.
 *
 * Layout (little-endian, no padding between records):
 *   magic "FFDW" | version u32 | epsilon f32 | tensor count u32
 *   per tensor: name length u16, UTF-8 name, ndim u8, dims u32 each,
 *   raw float32 values in C order.
 */

import * as crypto from 'node:crypto';
import * as fs from 'node:fs';

export const BUNDLE_MAGIC = 'FFDW';
export const BUNDLE_VERSION = 1;

export interface BundleTensor {
  shape: number[];
  data: Float32Array;
}

export interface WeightBundle {
  epsilon: number;
  /** Insertion order is the serialization order. */
  tensors: Map<string, BundleTensor>;
}

function tensorByteLength(name: string, t: BundleTensor): number {
  return 2 + Buffer.byteLength(name, 'utf8') + 1 + 4 * t.shape.length + 4 * t.data.length;
}

export function serializeBundle(bundle: WeightBundle): Buffer {
  let total = 4 + 4 + 4 + 4;
  for (const [name, tensor] of bundle.tensors) {
    const count = tensor.shape.reduce((a, b) => a * b, 1);
    if (count !== tensor.data.length) {
      throw new Error(
        `tensor '${name}': shape [${tensor.shape}] holds ${count} values, data has ${tensor.data.length}`,
      );
    }
    total += tensorByteLength(name, tensor);
  }
  const buf = Buffer.alloc(total);
  let pos = buf.write(BUNDLE_MAGIC, 0, 'ascii');
  pos = buf.writeUInt32LE(BUNDLE_VERSION, pos);
  pos = buf.writeFloatLE(bundle.epsilon, pos);
  pos = buf.writeUInt32LE(bundle.tensors.size, pos);
  for (const [name, tensor] of bundle.tensors) {
    const nameBytes = Buffer.from(name, 'utf8');
    pos = buf.writeUInt16LE(nameBytes.length, pos);
    pos += nameBytes.copy(buf, pos);
    pos = buf.writeUInt8(tensor.shape.length, pos);
    for (const dim of tensor.shape) {
      pos = buf.writeUInt32LE(dim, pos);
    }
    for (const value of tensor.data) {
      pos = buf.writeFloatLE(value, pos);
    }
  }
  return buf;
}

export function deserializeBundle(buf: Buffer): WeightBundle {
  if (buf.subarray(0, 4).toString('ascii') !== BUNDLE_MAGIC) {
    throw new Error(`bad magic '${buf.subarray(0, 4).toString('ascii')}'`);
  }
  let pos = 4;
  const version = buf.readUInt32LE(pos);
  pos += 4;
  if (version !== BUNDLE_VERSION) {
    throw new Error(`unsupported bundle version ${version}`);
  }
  const epsilon = buf.readFloatLE(pos);
  pos += 4;
  const count = buf.readUInt32LE(pos);
  pos += 4;
  const tensors = new Map<string, BundleTensor>();
  for (let i = 0; i < count; i++) {
    const nameLen = buf.readUInt16LE(pos);
    pos += 2;
    const name = buf.subarray(pos, pos + nameLen).toString('utf8');
    pos += nameLen;
    const ndim = buf.readUInt8(pos);
    pos += 1;
    const shape: number[] = [];
    for (let d = 0; d < ndim; d++) {
      shape.push(buf.readUInt32LE(pos));
      pos += 4;
    }
    const n = shape.reduce((a, b) => a * b, 1);
    const data = new Float32Array(n);
    for (let v = 0; v < n; v++) {
      data[v] = buf.readFloatLE(pos);
      pos += 4;
    }
    tensors.set(name, { shape, data });
  }
  if (pos !== buf.length) {
    throw new Error(`${buf.length - pos} trailing bytes after last tensor`);
  }
  return { epsilon, tensors };
}

export function writeBundleFile(path: string, bundle: WeightBundle): void {
  fs.writeFileSync(path, serializeBundle(bundle));
}

export function readBundleFile(path: string): WeightBundle {
  return deserializeBundle(fs.readFileSync(path));
}

export interface SidecarEntry {
  shape: number[];
  sha256: string;
}

/** Tensor names, shapes, and checksums; written next to the bundle. */
export function bundleSidecar(bundle: WeightBundle): Record<string, unknown> {
  const tensors: Record<string, SidecarEntry> = {};
  for (const [name, tensor] of bundle.tensors) {
    const bytes = Buffer.alloc(4 * tensor.data.length);
    tensor.data.forEach((v, i) => bytes.writeFloatLE(v, 4 * i));
    tensors[name] = {
      shape: tensor.shape,
      sha256: crypto.createHash('sha256').update(bytes).digest('hex'),
    };
  }
  return { epsilon: bundle.epsilon, tensor_count: bundle.tensors.size, tensors };
}

export function bundleChecksum(bundle: WeightBundle): string {
  return crypto.createHash('sha256').update(serializeBundle(bundle)).digest('hex');
}
