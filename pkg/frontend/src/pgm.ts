/** Binary PGM (P5) reading and writing, the frame format of the pipeline. */

import * as fs from 'node:fs';

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major 8-bit intensities, length width*height. */
  pixels: Uint8Array;
}

export function decodePgm(data: Buffer): GrayImage {
  if (data.subarray(0, 2).toString('ascii') !== 'P5') {
    throw new Error('not a binary PGM (P5) file');
  }
  const tokens: number[] = [];
  let pos = 2;
  while (tokens.length < 3) {
    while (pos < data.length && isWhitespace(data[pos])) pos++;
    if (data[pos] === 0x23) {
      // '#' comment runs to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isWhitespace(data[pos])) pos++;
    if (start === pos) throw new Error('truncated PGM header');
    tokens.push(parseInt(data.subarray(start, pos).toString('ascii'), 10));
  }
  pos += 1; // single whitespace after maxval
  const [width, height, maxval] = tokens;
  if (maxval > 255) throw new Error(`16-bit PGM not supported (maxval ${maxval})`);
  const raster = data.subarray(pos, pos + width * height);
  if (raster.length !== width * height) throw new Error('PGM raster truncated');
  return { width, height, pixels: new Uint8Array(raster) };
}

export function readPgm(path: string): GrayImage {
  return decodePgm(fs.readFileSync(path));
}

export function writePgm(path: string, image: GrayImage): void {
  const header = Buffer.from(`P5\n${image.width} ${image.height}\n255\n`, 'ascii');
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(image.pixels)]));
}

function isWhitespace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}
