/** Express app implementing the translation wire protocol. */

import express, { Express } from "express";
import { z } from "zod";

import { TranslationModel } from "./model.js";

export const requestSchema = z.object({
  src_lang: z.string(),
  tgt_lang: z.string(),
  text: z.string(),
  return_attention: z.boolean().optional().default(false),
});

export interface ModelHolder {
  model: TranslationModel | null;
}

export function createApp(holder: ModelHolder): Express {
  const app = express();
  app.use(express.json({ limit: "1mb" }));

  app.get("/health", (_req, res) => {
    if (!holder.model) {
      res.status(503).json({ ok: false, model: null });
      return;
    }
    res.json({ ok: true, model: holder.model.spec.id });
  });

  app.post("/translate", (req, res) => {
    if (!holder.model) {
      res.status(503).json({ error: "model still loading" });
      return;
    }
    const parsed = requestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(422).json({ error: parsed.error.message });
      return;
    }
    const { text, return_attention } = parsed.data;
    if (text.trim().length === 0) {
      res.status(422).json({ error: "empty text" });
      return;
    }
    try {
      res.json(holder.model.translate(text, return_attention));
    } catch (err) {
      res.status(500).json({ error: err instanceof Error ? err.message : String(err) });
    }
  });

  return app;
}
