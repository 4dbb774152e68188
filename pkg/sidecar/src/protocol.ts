/**
 * Request schemas for every route, mirroring the primary component's wire
 * format: JSON everywhere, images as base64 PNGs in png_b64 fields, poses
 * as flat [x0,y0,c0,...,x17,y17,c17] keypoint lists.
 */

import { z } from "zod";

export const KEYPOINT_VALUES = 18 * 3;

const imageField = z.object({ png_b64: z.string().min(1) });

export const generateRequest = z.object({
  prompt: z.string(),
  negative_prompt: z.string().optional().default(""),
  pose: z.object({ keypoints: z.array(z.number()).length(KEYPOINT_VALUES) }).nullish(),
  prev_frame: imageField.nullish(),
  init_image: imageField.nullish(),
  mask: imageField.nullish(),
  guidance_scale: z.number().positive().optional().default(7.5),
  steps: z.number().int().min(1).optional().default(25),
  seed: z.number().int().optional().default(0),
  width: z.number().int().min(8).optional().default(512),
  height: z.number().int().min(8).optional().default(512),
});

export const segmentRequest = z.object({
  png_b64: z.string().min(1),
  hint_png_b64: z.string().optional(),
});

export const imageRequest = z.object({ png_b64: z.string().min(1) });

export const textRequest = z.object({ text: z.string() });

export type GenerateRequest = z.infer<typeof generateRequest>;

export const SLOT_ROUTES: Record<string, string> = {
  generate: "/v1/generate",
  inpaint: "/v1/inpaint",
  segment: "/v1/segment",
  pose: "/v1/pose",
  embed_image: "/v1/embed_image",
  embed_text: "/v1/embed_text",
  caption: "/v1/caption",
  refine_prompt: "/v1/refine_prompt",
};

export const ALL_SLOTS = Object.keys(SLOT_ROUTES);

/** Raised when a syntactically valid JSON body carries an undecodable payload. */
export class PayloadError extends Error {}

export function decodeB64(field: string, where: string): Buffer {
  if (!/^[A-Za-z0-9+/]*={0,2}$/.test(field) || field.length % 4 !== 0) {
    throw new PayloadError(`${where}: invalid base64 payload`);
  }
  return Buffer.from(field, "base64");
}
