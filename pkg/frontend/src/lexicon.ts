/** Word-level lexicons for the toy language pairs the adapter can serve. */

const EN_IT: Record<string, string> = {
  i: "io", am: "sono", looking: "cercando", for: "per", a: "un",
  place: "posto", near: "vicino", find: "trova", restaurant: "ristorante",
  in: "dentro", show: "mostra", hotels: "alberghi", like: "come",
  at: "alle", book: "prenota", table: "tavolo", food: "cibo",
  where: "dove", is: "sta", please: "prego", me: "mi", that: "che",
  with: "con", and: "e", the: "il", burger: "hamburger", pizza: "pizzetta",
  sushi: "susci", noodle: "spaghetto", woodland: "boschetto", pond: "stagno",
  times: "tempi", square: "piazza", reviews: "recensioni", want: "voglio",
  hotel: "albergo", has: "ha", least: "meno", open: "aperto",
};

function invert(map: Record<string, string>): Record<string, string> {
  const out: Record<string, string> = {};
  for (const [key, value] of Object.entries(map)) {
    out[value] = key;
  }
  return out;
}

export interface ModelSpec {
  id: string;
  srcLang: string;
  tgtLang: string;
  lexicon: Record<string, string>;
}

const MODELS: Record<string, ModelSpec> = {
  "toy-en-it": { id: "toy-en-it", srcLang: "en", tgtLang: "it", lexicon: EN_IT },
  "toy-it-en": { id: "toy-it-en", srcLang: "it", tgtLang: "en", lexicon: invert(EN_IT) },
  identity: { id: "identity", srcLang: "*", tgtLang: "*", lexicon: {} },
};

export function resolveModel(id: string): ModelSpec {
  const spec = MODELS[id];
  if (!spec) {
    throw new Error(`unknown model ${id}; available: ${Object.keys(MODELS).join(", ")}`);
  }
  return spec;
}
