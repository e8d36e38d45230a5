"""Deterministic toy corpora and catalogs shared by the test suite."""

from __future__ import annotations

import random

import numpy as np

from splocal.core import Dataset, EntitySpan, Example, Provenance, Split, byte_len, parse_logical_form
from splocal.ontology import EntityValue, Ontology

EN_CUISINES = ["burger", "pizza", "sushi", "taco", "curry", "kebab", "noodle", "bagel"]
EN_LOCATIONS = [
    "woodland pond", "times square", "castle hill", "river park",
    "union station", "maple court",
]
EN_HOTELS = ["grand plaza", "sea breeze", "royal crown", "cedar lodge"]

IT_CUISINES = [
    "lasagna", "focaccia", "risotto", "gnocchi", "polenta", "carbonara",
    "tiramisu", "arancini", "caprese", "ribollita", "panzanella", "cannoli",
]
IT_LOCATIONS = [
    "via del corso", "mercerie", "lago di como", "piazza navona",
    "trastevere", "ponte vecchio", "via garibaldi", "campo dei fiori",
    "porta nuova", "borgo antico", "lungarno pacinotti", "vicolo stretto",
]
IT_HOTELS = [
    "albergo fiore", "casa bella", "villa rosa", "corte reale",
    "palazzo verde", "locanda sole", "hotel laguna", "residenza colle",
    "tenuta olivo", "dimora antica", "rifugio monte", "ostello centrale",
]

PREFIXES = ["", "please ", "hey ", "kindly ", "quickly ", "now ", "also ", "next "]
SUFFIXES = ["", " thanks", " please", " right now", " today"]


def _assemble(eid: str, lang: str, parts, lf_text: str,
              provenance=Provenance.SYNTHESIZED) -> Example:
    """Build an example from literal pieces and (value, param_type[, placeholder]) spans."""
    text = []
    spans = []
    offset = 0
    for part in parts:
        if isinstance(part, str):
            text.append(part)
            offset += byte_len(part)
            continue
        value, param_type, *rest = part
        is_placeholder = bool(rest and rest[0])
        spans.append(EntitySpan(offset, offset + byte_len(value), param_type, value, is_placeholder))
        text.append(value)
        offset += byte_len(value)
    return Example(
        id=eid,
        lang=lang,
        utterance="".join(text),
        logical_form=parse_logical_form(lf_text),
        spans=tuple(spans),
        provenance=provenance,
    )


def _templates(rng: random.Random, cuisines, locations, hotels):
    c = rng.choice(cuisines)
    l = rng.choice(locations)
    h = rng.choice(hotels)
    return [
        (
            ["i am looking for a ", (c, "cuisine"), " place near ", (l, "location")],
            f'@restaurant filter cuisine == " {c} " and location == " {l} "',
        ),
        (
            ["find a ", (c, "cuisine"), " restaurant in ", (l, "location")],
            f'@restaurant filter cuisine == " {c} " and location == " {l} "',
        ),
        (
            [
                "show hotels like ", (h, "hotel_name"), " near ", (l, "location"),
                " at ", ("TIME_0", "TIME", True),
            ],
            f'@hotel filter id == " {h} " and location == " {l} " and checkin == TIME_0',
        ),
        (
            ["book a table for ", (c, "cuisine"), " food at ", ("TIME_0", "TIME", True)],
            f'@restaurant filter cuisine == " {c} " and open == TIME_0',
        ),
        (
            ["where is ", (h, "hotel_name")],
            f'@hotel filter id == " {h} "',
        ),
    ]


def make_source_dataset(n: int = 200, seed: int = 7, lang: str = "en") -> Dataset:
    """n examples, all distinct after masking (prefix/suffix/template vary)."""
    rng = random.Random(seed)
    examples = []
    combo = 0
    while len(examples) < n:
        prefix = PREFIXES[combo % len(PREFIXES)]
        suffix = SUFFIXES[(combo // len(PREFIXES)) % len(SUFFIXES)]
        t_idx = (combo // (len(PREFIXES) * len(SUFFIXES))) % 5
        combo += 1
        parts, lf = _templates(rng, EN_CUISINES, EN_LOCATIONS, EN_HOTELS)[t_idx]
        if prefix:
            parts = [prefix] + parts
        if suffix:
            parts = parts + [suffix]
        examples.append(_assemble(f"toy-{len(examples):04d}", lang, parts, lf))
    return Dataset(tuple(examples), split=Split.TRAIN)


def make_target_dataset(n: int = 40, seed: int = 11) -> Dataset:
    """Italian-side test set with localized entities (for backtranslation)."""
    rng = random.Random(seed)
    examples = []
    combo = 0
    templates = [
        (
            lambda c, l, h: (["trova un ristorante ", (c, "cuisine"), " vicino a ", (l, "location")],
                             f'@restaurant filter cuisine == " {c} " and location == " {l} "'),
        ),
        (
            lambda c, l, h: (["cerco ", (c, "cuisine"), " a ", (l, "location")],
                             f'@restaurant filter cuisine == " {c} " and location == " {l} "'),
        ),
        (
            lambda c, l, h: (["mostra ", (h, "hotel_name"), " vicino a ", (l, "location")],
                             f'@hotel filter id == " {h} " and location == " {l} "'),
        ),
        (
            lambda c, l, h: (["dove si trova ", (h, "hotel_name")],
                             f'@hotel filter id == " {h} "'),
        ),
    ]
    while len(examples) < n:
        c = rng.choice(IT_CUISINES)
        l = rng.choice(IT_LOCATIONS)
        h = rng.choice(IT_HOTELS)
        prefix = PREFIXES[combo % len(PREFIXES)]
        maker = templates[combo % len(templates)][0]
        combo += 1
        parts, lf = maker(c, l, h)
        if prefix:
            parts = [prefix] + parts
        examples.append(_assemble(f"it-{len(examples):04d}", "it", parts, lf))
    return Dataset(tuple(examples), split=Split.TEST)


def make_it_ontology() -> Ontology:
    return Ontology(
        lang="it",
        entries={
            "cuisine": tuple(EntityValue(v) for v in IT_CUISINES),
            "location": tuple(EntityValue(v) for v in IT_LOCATIONS),
            "hotel_name": tuple(EntityValue(v) for v in IT_HOTELS),
        },
    )


def random_alignment_instance(seed: int, max_side: int = 12):
    """Random row-stochastic matrix plus token lists for oracle equivalence.

    Returns (src_tokens, tgt_tokens, weights, quote_pairs). Half the seeds
    keep exactly 2 * n_spans quote tokens in the target (quote-retained
    branch); the rest keep fewer (fallback branch).
    """
    rng = np.random.default_rng(seed)
    n_spans = int(rng.integers(1, 4))
    n_src = int(rng.integers(2 * n_spans + 1, max_side + 1))
    n_tgt = int(rng.integers(max(1, 2 * n_spans), max_side + 1))

    src_quote_positions = sorted(rng.choice(n_src, size=2 * n_spans, replace=False).tolist())
    quote_pairs = [
        (src_quote_positions[i], src_quote_positions[i + 1])
        for i in range(0, 2 * n_spans, 2)
    ]
    src_tokens = [f"s{i}" for i in range(n_src)]
    for pos in src_quote_positions:
        src_tokens[pos] = '"'

    retained = bool(rng.integers(0, 2)) and n_tgt >= 2 * n_spans
    tgt_quote_count = 2 * n_spans if retained else int(rng.integers(0, 2 * n_spans))
    tgt_quote_count = min(tgt_quote_count, n_tgt)
    tgt_tokens = [f"t{j}" for j in range(n_tgt)]
    for pos in rng.choice(n_tgt, size=tgt_quote_count, replace=False).tolist():
        tgt_tokens[pos] = '"'

    weights = rng.random((n_tgt, n_src)) + 1e-9
    weights = weights / weights.sum(axis=1, keepdims=True)
    return src_tokens, tgt_tokens, weights, quote_pairs


def en_it_dictionary() -> dict[str, str]:
    """Word-for-word pseudo-Italian, covering filler and entity words."""
    mapping = {
        "i": "io", "am": "sono", "looking": "cercando", "for": "per", "a": "un",
        "place": "posto", "near": "vicino", "find": "trova", "restaurant": "ristorante",
        "in": "dentro", "show": "mostra", "hotels": "alberghi", "like": "come",
        "at": "alle", "book": "prenota", "table": "tavolo", "food": "cibo",
        "where": "dove", "is": "sta", "please": "prego", "hey": "ciao",
        "kindly": "gentilmente", "quickly": "subito", "now": "adesso",
        "also": "anche", "next": "poi", "thanks": "grazie", "right": "proprio",
        "today": "oggi",
        "burger": "hamburger", "pizza": "pizzetta", "sushi": "susci",
        "taco": "tacos", "curry": "carri", "kebab": "kebabbo",
        "noodle": "spaghetto", "bagel": "ciambella",
        "woodland": "boschetto", "pond": "stagno", "times": "tempi",
        "square": "piazza", "castle": "castello", "hill": "collina",
        "river": "fiume", "park": "parco", "union": "unione",
        "station": "stazione", "maple": "acero", "court": "corte",
        "grand": "grande", "plaza": "piazzale", "sea": "mare",
        "breeze": "brezza", "royal": "reale", "crown": "corona",
        "cedar": "cedro", "lodge": "rifugio",
    }
    return mapping


def it_en_dictionary() -> dict[str, str]:
    """Italian-to-English word map that also rewrites localized entity words."""
    mapping = {
        "trova": "find", "un": "a", "ristorante": "restaurant", "vicino": "near",
        "a": "at", "cerco": "seeking", "mostra": "show", "dove": "where",
        "si": "it", "prego": "please", "ciao": "hey", "gentilmente": "kindly",
        "subito": "quickly", "adesso": "now", "anche": "also", "poi": "next",
        "lasagna": "lasagne", "focaccia": "flatbread", "risotto": "ricedish",
        "gnocchi": "dumplings", "polenta": "cornmeal", "carbonara": "baconpasta",
        "tiramisu": "liftcake", "arancini": "riceballs", "caprese": "caprisalad",
        "ribollita": "twicecooked", "panzanella": "breadsalad", "cannoli": "creamtubes",
        "via": "street", "del": "delle", "corso": "course", "mercerie": "haberdashery",
        "lago": "lake", "di": "of", "como": "comolake", "piazza": "square",
        "navona": "navone", "trastevere": "crosstiber", "ponte": "bridge",
        "vecchio": "old", "garibaldi": "garibald", "campo": "field",
        "dei": "ofthe", "fiori": "flowers", "porta": "gate", "nuova": "new",
        "borgo": "village", "antico": "ancient", "lungarno": "riverside",
        "pacinotti": "pacinot", "vicolo": "alley", "stretto": "narrow",
        "albergo": "inn", "fiore": "flower", "casa": "house", "bella": "pretty",
        "villa": "mansion", "rosa": "rose", "corte": "court", "reale": "royal",
        "palazzo": "palace", "verde": "green", "locanda": "tavern", "sole": "sun",
        "hotel": "lodging", "laguna": "lagoon", "residenza": "residence",
        "colle": "knoll", "tenuta": "estate", "olivo": "olive", "dimora": "abode",
        "antica": "aged", "rifugio": "shelter", "monte": "mount",
        "ostello": "hostel", "centrale": "central",
    }
    return mapping
