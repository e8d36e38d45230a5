/**
 * Adapter entry point.
 *
 *   serve           --model toy-en-it --port 8077 --agg last-mean|layer:k
 *   record-fixtures --model toy-en-it --agg last-mean --out fixtures/adapter_fixtures.json
 */

import { writeFileSync } from "node:fs";

import { resolveModel } from "./lexicon.js";
import { TranslationModel, parseAggregation } from "./model.js";
import { ModelHolder, createApp } from "./server.js";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad flag pair near ${argv[i]}`);
    }
    flags[argv[i].slice(2)] = argv[i + 1];
  }
  return flags;
}

const FIXTURE_TEXTS: Array<{ text: string; return_attention: boolean }> = [
  { text: 'i am looking for a " burger " place near " woodland pond "', return_attention: true },
  { text: 'find a " pizza " restaurant in " times square "', return_attention: true },
  { text: 'show hotels like " sea breeze " at " TIME_0 "', return_attention: true },
  { text: "where is the restaurant", return_attention: true },
  { text: "book a table for sushi food at TIME_0", return_attention: true },
  { text: "i want a hotel near times square", return_attention: false },
  { text: 'find " noodle " food please', return_attention: true },
  { text: "a b c", return_attention: true },
];

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  const flags = parseFlags(rest);
  const modelId = flags.model ?? "toy-en-it";
  const agg = parseAggregation(flags.agg ?? "last-mean");

  if (command === "serve") {
    const holder: ModelHolder = { model: null };
    const app = createApp(holder);
    const port = Number(flags.port ?? 8077);
    app.listen(port, () => {
      // Model construction is synchronous here, but health reports 503 until
      // it finishes, matching real loading behavior.
      holder.model = new TranslationModel(resolveModel(modelId), agg);
      console.log(`adapter serving ${modelId} on :${port} (agg ${flags.agg ?? "last-mean"})`);
    });
    return;
  }

  if (command === "record-fixtures") {
    const model = new TranslationModel(resolveModel(modelId), agg);
    const out = flags.out ?? "fixtures/adapter_fixtures.json";
    const pairs = FIXTURE_TEXTS.map(({ text, return_attention }) => ({
      request: {
        src_lang: model.spec.srcLang,
        tgt_lang: model.spec.tgtLang,
        text,
        return_attention,
      },
      response: model.translate(text, return_attention),
    }));
    writeFileSync(out, JSON.stringify(pairs, null, 2) + "\n");
    console.log(`recorded ${pairs.length} fixture pairs to ${out}`);
    return;
  }

  console.error("usage: cli.js <serve|record-fixtures> [--model id] [--port n] [--agg last-mean|layer:k] [--out path]");
  process.exit(2);
}

main();
