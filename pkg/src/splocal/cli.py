"""Command-line pipeline orchestration.

Every run merges an optional TOML/JSON config file with CLI flags (flags
win), executes one mode, and writes a manifest recording the merged config,
its hash, all seeds, and sha256 digests of every input and output file, so
any run is replayable. Exit codes: 0 success, 1 pipeline failure, 2 config
error. Scores are data, not errors: evaluate/similarity exit 0 regardless of
the numbers.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import augment, metrics, ontology as onto, ptrgen
from .align import align_spans
from .align_oracle import oracle_align_spans
from .core import (
    Dataset,
    DatasetError,
    Split,
    read_dataset,
    validate_example,
    write_dataset,
)
from .nmt import AttentionMatrix, HttpBackend, make_mock_backend
from .preproc import RulePack, builtin_rulepack, load_rulepack

BACKEND_URL_ENV = "SPL_BACKEND_URL"


class ConfigError(Exception):
    pass


class PipelineFailure(Exception):
    pass


def _load_config_file(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _require(config: dict, key: str):
    value = config.get(key)
    if value in (None, ""):
        raise ConfigError(f"missing required config key: {key}")
    return value


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_manifest(path: str, mode: str, config: dict, inputs: list[str],
                    outputs: list[str], counts: dict) -> None:
    manifest = {
        "mode": mode,
        "config": config,
        "config_hash": _config_hash(config),
        "seeds": {k: v for k, v in config.items() if "seed" in k},
        "inputs": {p: _sha256(p) for p in sorted(set(inputs)) if p and os.path.exists(p)},
        "outputs": {p: _sha256(p) for p in sorted(set(outputs)) if p and os.path.exists(p)},
        "counts": counts,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")


def _build_backend(config: dict):
    mock = config.get("mock")
    if mock:
        dictionary = {}
        if config.get("mock_dict"):
            with open(config["mock_dict"], encoding="utf-8") as fh:
                dictionary = json.load(fh)
        return make_mock_backend(
            mock,
            seed=int(config.get("mock_seed", config.get("seed", 0))),
            dictionary=dictionary,
            quote_drop_p=float(config.get("quote_drop_p", 0.3)),
            delete_tokens=config.get("delete_tokens", "").split(",") if config.get("delete_tokens") else (),
        )
    url = config.get("backend_url") or os.environ.get(BACKEND_URL_ENV)
    if not url:
        raise ConfigError(f"missing required config key: backend_url (or {BACKEND_URL_ENV} or --mock)")
    return HttpBackend(url)


def _build_rulepack(config: dict, lang: str) -> RulePack:
    if config.get("rulepack"):
        return load_rulepack(config["rulepack"])
    return builtin_rulepack(lang)


def _build_ontology(config: dict) -> onto.Ontology:
    path = _require(config, "ontology")
    catalog = onto.load_ontology(path, config.get("tgt_lang", ""))
    side = config.get("split_side", "full")
    if side == "full":
        return catalog
    if side not in ("train", "eval"):
        raise ConfigError(f"split_side must be train, eval, or full, got {side!r}")
    split = onto.split_ontology(catalog, float(config.get("overlap", 0.45)), int(config.get("seed", 0)))
    return split.train if side == "train" else split.eval


def _manifest_path(config: dict, primary_output: str) -> str:
    return config.get("manifest") or primary_output + ".manifest.json"


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def mode_localize(config: dict) -> tuple[list[str], list[str], dict]:
    input_path = _require(config, "input")
    output_path = _require(config, "output")
    if config.get("bootstrap"):
        return mode_bootstrap(config)
    backend = _build_backend(config)
    cfg = augment.LocalizationConfig(
        tgt_lang=_require(config, "tgt_lang"),
        backend=backend,
        ontology=_build_ontology(config),
        rulepack=_build_rulepack(config, config["tgt_lang"]),
        k_augment=int(config.get("k", 10)),
        seed=int(config.get("seed", 0)),
        strategy=config.get("strategy"),
        parallel_width=int(config.get("width", 8)),
    )
    dataset = read_dataset(input_path)
    quarantine = config.get("quarantine", output_path + ".quarantine.jsonl")
    result = augment.localize_dataset(dataset, cfg, quarantine_path=quarantine)
    write_dataset(result, output_path)
    counts = {k: v for k, v in result.meta.items() if k.startswith("localize_")}
    print(json.dumps(counts, sort_keys=True))
    return [input_path, config["ontology"]], [output_path, quarantine], counts


def mode_bootstrap(config: dict) -> tuple[list[str], list[str], dict]:
    input_path = _require(config, "input")
    output_path = _require(config, "output")
    backend = _build_backend(config)
    dataset = read_dataset(input_path)
    quarantine = config.get("quarantine", output_path + ".quarantine.jsonl")
    result = augment.build_bootstrap_dataset(
        dataset, backend, _require(config, "tgt_lang"), quarantine_path=quarantine
    )
    write_dataset(result, output_path)
    counts = {"outputs": str(len(result)), "quarantined": result.meta["bootstrap_quarantined"]}
    print(json.dumps(counts, sort_keys=True))
    return [input_path], [output_path, quarantine], counts


def mode_backtranslate(config: dict) -> tuple[list[str], list[str], dict]:
    input_path = _require(config, "input")
    output_path = _require(config, "output")
    src_lang = _require(config, "src_lang")
    backend = _build_backend(config)
    dataset = read_dataset(input_path)
    quarantined = 0
    outputs = []
    if config.get("align"):
        rulepack = _build_rulepack(config, src_lang)
        for e in dataset:
            try:
                outputs.append(augment.translate_aligned(e, backend, src_lang, rulepack))
            except augment.StageFailure:
                quarantined += 1
    else:
        bootstrap = augment.build_bootstrap_dataset(dataset, backend, src_lang)
        outputs = list(bootstrap.examples)
        quarantined = int(bootstrap.meta["bootstrap_quarantined"])
    result = Dataset(tuple(outputs), split=dataset.split,
                     meta={"backtranslate_align": str(bool(config.get("align"))).lower()})
    write_dataset(result, output_path)
    counts = {"outputs": str(len(outputs)), "quarantined": str(quarantined)}
    print(json.dumps(counts, sort_keys=True))
    return [input_path], [output_path], counts


def mode_mix_fewshot(config: dict) -> tuple[list[str], list[str], dict]:
    train = read_dataset(_require(config, "train"))
    human_dev = read_dataset(_require(config, "human_dev"), split=Split.DEV)
    machine_dev = read_dataset(_require(config, "machine_dev"), split=Split.DEV)
    out_train = _require(config, "out_train")
    out_dev = _require(config, "out_dev")
    mixed_train, mixed_dev = augment.mix_fewshot(train, human_dev, machine_dev)
    write_dataset(mixed_train, out_train)
    write_dataset(mixed_dev, out_dev)
    counts = {
        "train": str(len(mixed_train)),
        "dev": str(len(mixed_dev)),
        "human_share": mixed_train.meta["fewshot_human_share"],
    }
    print(json.dumps(counts, sort_keys=True))
    return [config["train"], config["human_dev"], config["machine_dev"]], [out_train, out_dev], counts


def _read_predictions(path: str) -> dict[str, str]:
    preds = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            preds[record["id"]] = record["logical_form"]
    return preds


def mode_evaluate(config: dict) -> tuple[list[str], list[str], dict]:
    preds_path = _require(config, "predictions")
    golds_path = _require(config, "golds")
    report_path = config.get("report", preds_path + ".eval.json")
    csv_path = config.get("csv", preds_path + ".eval.csv")
    report = metrics.evaluate_run(_read_predictions(preds_path), read_dataset(golds_path), csv_path=csv_path)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(json.dumps(report.as_dict(), sort_keys=True))
    return [preds_path, golds_path], [report_path, csv_path], report.as_dict()


def _read_corpus(path: str) -> list[str]:
    if path.endswith(".jsonl"):
        dataset = read_dataset(path)
        return [e.utterance for e in dataset]
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def mode_similarity(config: dict) -> tuple[list[str], list[str], dict]:
    cands_path = _require(config, "candidates")
    refs_path = _require(config, "references")
    report_path = config.get("report", cands_path + ".similarity.json")
    csv_path = config.get("csv", cands_path + ".similarity.csv")
    report = metrics.similarity_report(
        _read_corpus(cands_path), _read_corpus(refs_path),
        char_level=bool(config.get("char_level")),
    )
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    import csv as csv_module

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv_module.writer(fh)
        writer.writerow(["pair", "ter"])
        for i, value in enumerate(report.per_sentence_ter):
            writer.writerow([i, f"{value:.6f}"])
    print(json.dumps(report.as_dict(), sort_keys=True))
    return [cands_path, refs_path], [report_path, csv_path], report.as_dict()


def mode_split_ontology(config: dict) -> tuple[list[str], list[str], dict]:
    path = _require(config, "ontology")
    out_train = _require(config, "out_train")
    out_eval = _require(config, "out_eval")
    catalog = onto.load_ontology(path, config.get("lang", ""))
    split = onto.split_ontology(catalog, float(_require(config, "overlap")), int(config.get("seed", 0)))
    onto.write_ontology(split.train, out_train)
    onto.write_ontology(split.eval, out_eval)
    counts = {
        pt: f"{len(split.train.entries.get(pt, ()))}+{len(split.eval.entries.get(pt, ()))}"
        for pt in catalog.entries
    }
    print(json.dumps(counts, sort_keys=True))
    return [path], [out_train, out_eval], counts


def mode_ptrgen_check(config: dict) -> tuple[list[str], list[str], dict]:
    instances = int(config.get("instances", 100))
    tolerance = float(config.get("tolerance", 1e-4))
    worst = ptrgen.gradient_check_suite(instances=instances, seed=int(config.get("seed", 0)))
    counts = {"instances": str(instances), "max_relative_error": f"{worst:.3e}"}
    print(f"gradient check: {instances} instances, max relative error {worst:.3e}")
    if worst >= tolerance:
        raise PipelineFailure(f"gradient check failed: {worst:.3e} >= {tolerance:.1e}")
    return [], [], counts


def mode_validate(config: dict) -> tuple[list[str], list[str], dict]:
    input_path = _require(config, "input")
    dataset = read_dataset(input_path)
    violations = 0
    for e in dataset:
        problems = validate_example(e)
        if problems:
            violations += 1
            print(f"{e.id}: {'; '.join(problems)}")
    counts = {"examples": str(len(dataset)), "violations": str(violations)}
    print(json.dumps(counts, sort_keys=True))
    if violations:
        raise PipelineFailure(f"{violations} of {len(dataset)} examples violate alignment invariants")
    return [input_path], [], counts


def mode_align(config: dict) -> tuple[list[str], list[str], dict]:
    input_path = _require(config, "input")
    output_path = _require(config, "output")
    use_oracle = bool(config.get("oracle"))
    disagreements = 0
    rows = 0
    with open(input_path, encoding="utf-8") as fh, open(output_path, "w", encoding="utf-8") as out:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            rows += 1
            attention = AttentionMatrix(np.asarray(record["attention"], dtype=np.float64))
            spans = [tuple(pair) for pair in record["spans"]]
            alignments = align_spans(record["src_tokens"], record["tgt_tokens"], attention, spans)
            doc = {
                "alignments": [
                    {
                        "span": a.source_span_index,
                        "start_tok": a.start_tok,
                        "end_tok": a.end_tok,
                        "method": a.method,
                        "score": a.score,
                    }
                    for a in alignments
                ]
            }
            if use_oracle:
                reference = oracle_align_spans(
                    record["src_tokens"], record["tgt_tokens"], record["attention"], spans
                )
                same = [
                    (a.start_tok, a.end_tok, a.method) for a in alignments
                ] == [(o.start_tok, o.end_tok, o.method) for o in reference]
                doc["oracle_agrees"] = same
                if not same:
                    disagreements += 1
            out.write(json.dumps(doc, ensure_ascii=False, sort_keys=True))
            out.write("\n")
    counts = {"rows": str(rows), "disagreements": str(disagreements)}
    print(json.dumps(counts, sort_keys=True))
    if use_oracle and disagreements:
        raise PipelineFailure(f"{disagreements} oracle disagreements")
    return [input_path], [output_path], counts


MODES = {
    "localize": mode_localize,
    "bootstrap": mode_bootstrap,
    "backtranslate": mode_backtranslate,
    "mix-fewshot": mode_mix_fewshot,
    "evaluate": mode_evaluate,
    "similarity": mode_similarity,
    "split-ontology": mode_split_ontology,
    "ptrgen-check": mode_ptrgen_check,
    "validate": mode_validate,
    "align": mode_align,
}


def run_mode(mode: str, config: dict) -> int:
    """Execute one pipeline mode; returns the process exit code."""
    handler = MODES.get(mode)
    if handler is None:
        print(f"error: unknown mode {mode!r}", file=sys.stderr)
        return 2
    try:
        inputs, outputs, counts = handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PipelineFailure, DatasetError, OSError, json.JSONDecodeError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 1
    if outputs:
        _write_manifest(_manifest_path(config, outputs[0]), mode, config, inputs, outputs, counts)
    return 0


def _add_backend_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--backend-url", dest="backend_url")
    sub.add_argument("--mock", choices=["identity", "dictionary", "reversal", "quote-drop", "placeholder-delete"])
    sub.add_argument("--mock-dict", dest="mock_dict")
    sub.add_argument("--mock-seed", dest="mock_seed", type=int)
    sub.add_argument("--quote-drop-p", dest="quote_drop_p", type=float)
    sub.add_argument("--delete-tokens", dest="delete_tokens")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splocal", description=__doc__)
    parser.add_argument("--config", help="TOML or JSON config file; flags override its keys")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("localize", help="translate, align, and augment a dataset")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--src-lang", dest="src_lang")
    p.add_argument("--tgt-lang", dest="tgt_lang")
    p.add_argument("--ontology")
    p.add_argument("--split-side", dest="split_side", choices=["train", "eval", "full"])
    p.add_argument("--overlap", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strategy", choices=["align", "placeholder"])
    p.add_argument("--rulepack")
    p.add_argument("--quarantine")
    p.add_argument("--width", type=int)
    p.add_argument("--bootstrap", action="store_const", const=True)
    p.add_argument("--manifest")
    _add_backend_flags(p)

    p = sub.add_parser("bootstrap", help="directly translate utterances, keep logical forms")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--tgt-lang", dest="tgt_lang")
    p.add_argument("--quarantine")
    p.add_argument("--manifest")
    _add_backend_flags(p)

    p = sub.add_parser("backtranslate", help="translate a target-language test set back to the source")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--src-lang", dest="src_lang")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--align", dest="align", action="store_const", const=True)
    group.add_argument("--no-align", dest="align", action="store_const", const=False)
    p.add_argument("--rulepack")
    p.add_argument("--manifest")
    _add_backend_flags(p)

    p = sub.add_parser("mix-fewshot", help="mix human-translated dev data into training")
    p.add_argument("--train")
    p.add_argument("--human-dev", dest="human_dev")
    p.add_argument("--machine-dev", dest="machine_dev")
    p.add_argument("--out-train", dest="out_train")
    p.add_argument("--out-dev", dest="out_dev")
    p.add_argument("--manifest")

    p = sub.add_parser("evaluate", help="score predictions with exact match and structure match")
    p.add_argument("--predictions")
    p.add_argument("--golds")
    p.add_argument("--report")
    p.add_argument("--csv")
    p.add_argument("--manifest")

    p = sub.add_parser("similarity", help="corpus BLEU and TER between two corpora")
    p.add_argument("--candidates")
    p.add_argument("--references")
    p.add_argument("--report")
    p.add_argument("--csv")
    p.add_argument("--char-level", dest="char_level", action="store_const", const=True)
    p.add_argument("--manifest")

    p = sub.add_parser("split-ontology", help="split a catalog with controlled overlap")
    p.add_argument("--ontology")
    p.add_argument("--overlap", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-train", dest="out_train")
    p.add_argument("--out-eval", dest="out_eval")
    p.add_argument("--lang")
    p.add_argument("--manifest")

    p = sub.add_parser("ptrgen-check", help="run the pointer-generator gradient check suite")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("validate", help="run core invariant checks on a dataset JSONL")
    p.add_argument("--input")

    p = sub.add_parser("align", help="align a JSONL stream of token/attention records")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--oracle", action="store_const", const=True,
                   help="cross-check against the brute-force oracle")
    p.add_argument("--manifest")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config: dict = {}
    if args.config:
        try:
            config.update(_load_config_file(args.config))
        except (OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        config[key] = value
    return run_mode(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
