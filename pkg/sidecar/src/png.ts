/**
 * Minimal PNG support for echo-mode responses: enough to read the
 * dimensions of an incoming 8-bit PNG and to emit solid-color or
 * binary-mask PNGs, without pulling in an image library.
 */

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(tag: string, payload: Buffer): Buffer {
  const body = Buffer.concat([Buffer.from(tag, "ascii"), payload]);
  const out = Buffer.alloc(body.length + 8);
  out.writeUInt32BE(payload.length, 0);
  body.copy(out, 4);
  out.writeUInt32BE(crc32(body), body.length + 4);
  return out;
}

export interface PngInfo {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
}

/** Parse the IHDR header of a PNG buffer; throws on malformed input. */
export function pngInfo(data: Buffer): PngInfo {
  if (data.length < 29 || !data.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("payload is not a PNG");
  }
  if (data.toString("ascii", 12, 16) !== "IHDR") {
    throw new Error("PNG is missing its IHDR chunk");
  }
  const width = data.readUInt32BE(16);
  const height = data.readUInt32BE(20);
  const bitDepth = data.readUInt8(24);
  const colorType = data.readUInt8(25);
  if (width < 1 || height < 1) {
    throw new Error("PNG has degenerate dimensions");
  }
  return { width, height, bitDepth, colorType };
}

function encode(width: number, height: number, colorType: number, raw: Buffer): Buffer {
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr.writeUInt8(8, 8); // bit depth
  ihdr.writeUInt8(colorType, 9);
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", zlib.deflateSync(raw, { level: 6 })),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

/** Solid 8-bit RGB PNG. */
export function solidRgbPng(width: number, height: number, r: number, g: number, b: number): Buffer {
  const stride = 1 + width * 3;
  const raw = Buffer.alloc(stride * height);
  for (let y = 0; y < height; y++) {
    const row = y * stride;
    for (let x = 0; x < width; x++) {
      raw[row + 1 + 3 * x] = r;
      raw[row + 2 + 3 * x] = g;
      raw[row + 3 + 3 * x] = b;
    }
  }
  return encode(width, height, 2, raw);
}

/** 8-bit grayscale PNG from a per-pixel value callback. */
export function grayPng(
  width: number,
  height: number,
  value: (x: number, y: number) => number,
): Buffer {
  const stride = 1 + width;
  const raw = Buffer.alloc(stride * height);
  for (let y = 0; y < height; y++) {
    const row = y * stride;
    for (let x = 0; x < width; x++) {
      raw[row + 1 + x] = value(x, y);
    }
  }
  return encode(width, height, 0, raw);
}

/** Centered rectangle mask covering the middle half of each axis. */
export function centerMaskPng(width: number, height: number): Buffer {
  const x0 = Math.floor(width / 4);
  const x1 = width - Math.floor(width / 4);
  const y0 = Math.floor(height / 4);
  const y1 = height - Math.floor(height / 4);
  return grayPng(width, height, (x, y) => (x >= x0 && x < x1 && y >= y0 && y < y1 ? 255 : 0));
}
