/**
 * HTTP model-serving sidecar speaking the avatarforge wire protocol.
 *
 * Routes: POST /v1/{generate,inpaint,segment,pose,embed_image,embed_text,
 * caption,refine_prompt} plus GET /v1/health. Requests and responses are
 * JSON; images travel as base64 PNGs. Slots listed in the config with the
 * "echo" model are served by the deterministic echo implementations; any
 * other binding stays unloaded and its route answers 503.
 */

import * as fs from "node:fs";

import express, { Express, Request, Response } from "express";
import { ZodType } from "zod";

import {
  ALL_SLOTS,
  PayloadError,
  SLOT_ROUTES,
  generateRequest,
  imageRequest,
  segmentRequest,
  textRequest,
} from "./protocol";
import {
  EMBED_DIM,
  SlotBinding,
  echoCaption,
  echoEmbedImage,
  echoEmbedText,
  echoGenerate,
  echoPose,
  echoRefine,
  echoSegment,
} from "./slots";

export interface SidecarConfig {
  port: number;
  slots: Record<string, string>;
}

export const BODY_LIMIT = "48mb";

export function configFromFile(path: string): SidecarConfig {
  const doc = JSON.parse(fs.readFileSync(path, "utf-8"));
  return {
    port: doc.port ?? 8601,
    slots: doc.slots ?? {},
  };
}

export function echoConfig(port: number = 0): SidecarConfig {
  const slots: Record<string, string> = {};
  for (const slot of ALL_SLOTS) {
    slots[slot] = "echo";
  }
  return { port, slots };
}

function bindings(config: SidecarConfig): Record<string, SlotBinding> {
  const out: Record<string, SlotBinding> = {};
  for (const slot of ALL_SLOTS) {
    const model = config.slots[slot];
    if (model === undefined) {
      out[slot] = { model: "", loaded: false };
    } else {
      // Only the echo model ships with the sidecar; other identifiers are
      // accepted in the config but have no loader in this build.
      out[slot] = { model, loaded: model === "echo" };
    }
  }
  return out;
}

export function buildApp(config: SidecarConfig): Express {
  const app = express();
  app.use(express.json({ limit: BODY_LIMIT }));
  const slotState = bindings(config);

  app.get("/v1/health", (_req: Request, res: Response) => {
    const slots: Record<string, { model: string; loaded: boolean }> = {};
    for (const [name, binding] of Object.entries(slotState)) {
      slots[name] = { model: binding.model, loaded: binding.loaded };
    }
    res.json({ slots, embed_dim: EMBED_DIM });
  });

  function route<T>(slot: string, schema: ZodType<T, any, any>, handler: (body: T) => unknown): void {
    app.post(SLOT_ROUTES[slot], (req: Request, res: Response) => {
      if (!slotState[slot].loaded) {
        res.status(503).json({ error: `slot ${slot} is not loaded` });
        return;
      }
      const parsed = schema.safeParse(req.body);
      if (!parsed.success) {
        res.status(400).json({ error: `schema violation: ${parsed.error.message}` });
        return;
      }
      try {
        res.json(handler(parsed.data));
      } catch (err) {
        const message = err instanceof Error ? err.message : String(err);
        if (err instanceof PayloadError) {
          res.status(400).json({ error: message });
        } else {
          res.status(500).json({ error: message });
        }
      }
    });
  }

  route("generate", generateRequest, (body) => echoGenerate(body));
  route("inpaint", generateRequest, (body) => {
    if (!body.init_image || !body.mask) {
      throw new PayloadError("inpaint requests need both init_image and mask");
    }
    return echoGenerate(body);
  });
  route("segment", segmentRequest, (body) => echoSegment(body.png_b64));
  route("pose", imageRequest, (body) => echoPose(body.png_b64));
  route("embed_image", imageRequest, (body) => echoEmbedImage(body.png_b64));
  route("embed_text", textRequest, (body) => echoEmbedText(body.text));
  route("caption", imageRequest, (body) => echoCaption(body.png_b64));
  route("refine_prompt", textRequest, (body) => echoRefine(body.text));

  // Body-parser rejections (bad JSON, too large) come through here.
  app.use((err: Error & { status?: number }, _req: Request, res: Response, next: (e?: Error) => void) => {
    if (res.headersSent) {
      next(err);
      return;
    }
    res.status(err.status && err.status >= 400 ? err.status : 400).json({ error: err.message });
  });

  return app;
}

function parseArgs(argv: string[]): SidecarConfig {
  let config: SidecarConfig | undefined;
  let port: number | undefined;
  let echo = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--config") {
      config = configFromFile(argv[++i]);
    } else if (arg === "--port") {
      port = Number(argv[++i]);
    } else if (arg === "--echo") {
      echo = true;
    } else {
      throw new Error(`unknown argument ${arg}`);
    }
  }
  if (config === undefined) {
    config = echo ? echoConfig() : { port: 8601, slots: {} };
  }
  if (echo && config.slots && Object.keys(config.slots).length === 0) {
    config = { ...echoConfig(), port: config.port };
  }
  if (port !== undefined) {
    config.port = port;
  }
  return config;
}

export function main(argv: string[] = process.argv.slice(2)): void {
  const config = parseArgs(argv);
  const app = buildApp(config);
  const server = app.listen(config.port, () => {
    const address = server.address();
    const actualPort = typeof address === "object" && address ? address.port : config.port;
    console.log(`sidecar listening on port ${actualPort}`);
  });
  server.on("error", (err) => {
    console.error(`startup failure: ${err.message}`);
    process.exit(1);
  });
}

if (require.main === module) {
  main();
}
