/**
 * Slot implementations. Echo mode is fully functional without any model
 * downloads: responses are deterministic functions of the request, which
 * is what the cross-component protocol tests exercise. Bindings to real
 * model identifiers are accepted in the config but stay unloaded here
 * (their routes answer 503), since actual model runtimes are a deployment
 * concern outside this repository.
 */

import { createHash } from "node:crypto";

import { centerMaskPng, pngInfo, PngInfo, solidRgbPng } from "./png";
import { GenerateRequest, KEYPOINT_VALUES, PayloadError, decodeB64 } from "./protocol";

export const EMBED_DIM = 64;

export interface SlotBinding {
  model: string;
  loaded: boolean;
}

function parsePng(pngB64: string, where: string): PngInfo {
  try {
    return pngInfo(decodeB64(pngB64, where));
  } catch (err) {
    if (err instanceof PayloadError) {
      throw err;
    }
    throw new PayloadError(`${where}: ${err instanceof Error ? err.message : String(err)}`);
  }
}

export function echoGenerate(req: GenerateRequest): { png_b64: string } {
  if (req.init_image) {
    parsePng(req.init_image.png_b64, "init_image");
    if (req.mask) {
      parsePng(req.mask.png_b64, "mask");
    }
    // Protocol test mode: the init image comes back unchanged.
    return { png_b64: req.init_image.png_b64 };
  }
  return {
    png_b64: solidRgbPng(req.width, req.height, 128, 128, 128).toString("base64"),
  };
}

export function echoSegment(pngB64: string): { png_b64: string } {
  const { width, height } = parsePng(pngB64, "png_b64");
  return { png_b64: centerMaskPng(width, height).toString("base64") };
}

export function echoPose(pngB64: string): { keypoints: number[] } {
  const { width, height } = parsePng(pngB64, "png_b64");
  const keypoints: number[] = [];
  for (let k = 0; k < KEYPOINT_VALUES / 3; k++) {
    keypoints.push(width / 2, ((k + 1) * height) / 19, 1.0);
  }
  return { keypoints };
}

/** Deterministic unit vector from a byte payload (hash-expanded). */
export function hashVector(payload: Buffer, dim: number = EMBED_DIM): number[] {
  const values: number[] = [];
  let counter = 0;
  while (values.length < dim) {
    const digest = createHash("sha256")
      .update(payload)
      .update(Buffer.from([counter++]))
      .digest();
    for (let i = 0; i + 4 <= digest.length && values.length < dim; i += 4) {
      // Map 32 bits to (-1, 1).
      values.push((digest.readUInt32BE(i) / 0xffffffff) * 2 - 1);
    }
  }
  const norm = Math.sqrt(values.reduce((acc, v) => acc + v * v, 0));
  return values.map((v) => v / norm);
}

export function echoEmbedImage(pngB64: string): { vector: number[] } {
  parsePng(pngB64, "png_b64");
  return { vector: hashVector(Buffer.from(pngB64, "ascii")) };
}

export function echoEmbedText(text: string): { vector: number[] } {
  return { vector: hashVector(Buffer.from(text, "utf-8")) };
}

export function echoCaption(pngB64: string): { text: string } {
  parsePng(pngB64, "png_b64");
  const digest = createHash("sha256").update(pngB64).digest("hex").slice(0, 10);
  return { text: `echo caption ${digest}` };
}

export function echoRefine(text: string): { text: string } {
  return { text };
}
