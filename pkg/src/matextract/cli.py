"""Command-line entry point for batch workflows.

Every subcommand is a thin wrapper over a library call. Exit codes: 0 on
success, 1 on operational errors, 2 on usage errors. Parsability failures
are measurements, not failures, so decode/score report them and exit 0.

File conventions: completion and prompt files hold one JSON-encoded string
per line (safe for multi-line English-schema completions); record files
hold plain-JSON record structures documented in the README.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import annosvc, baseline, codec, corpus, kgraph, llm, scoring
from .records import (
    DopingRecord,
    MaterialRecord,
    MofRecord,
    PromptCompletionPair,
    SchemaId,
)

SCHEMA_CHOICES = [s.value for s in SchemaId]


def read_string_lines(path) -> list[str]:
    """One JSON string per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            value = json.loads(line)
            if not isinstance(value, str):
                raise ValueError(f"{path}:{lineno}: expected a JSON string")
            out.append(value)
    return out


def write_string_lines(strings: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in strings:
            fh.write(json.dumps(s, ensure_ascii=False) + "\n")


def doping_from_dict(obj: dict) -> DopingRecord:
    return DopingRecord(
        hosts=obj.get("hosts", []),
        dopants=obj.get("dopants", []),
        links={tuple(pair) for pair in obj.get("links", [])},
        results=obj.get("results", []),
        modifiers=obj.get("modifiers", []),
    )


def entries_from_list(schema: SchemaId, items: list) -> list:
    cls = MaterialRecord if schema is SchemaId.GENERAL_JSON else MofRecord
    return [cls(**item) for item in items]


def load_samples(schema: SchemaId, path) -> list:
    """Plain-JSON samples: doping record objects, or lists of entry objects."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise ValueError("records file must hold a JSON list")
    if schema.is_doping:
        return [doping_from_dict(obj) for obj in payload]
    return [entries_from_list(schema, sample) for sample in payload]


def _write_output(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit(args, payload: dict, human: str) -> None:
    if getattr(args, "json", False):
        _write_output(args, json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        _write_output(args, human)


def cmd_encode(args) -> int:
    schema = SchemaId(args.schema)
    samples = load_samples(schema, args.infile)
    completions = [codec.encode(schema, s) for s in samples]
    _write_output(
        args, "".join(json.dumps(s, ensure_ascii=False) + "\n" for s in completions)
    )
    return 0


def cmd_decode(args) -> int:
    schema = SchemaId(args.schema)
    completions = read_string_lines(args.infile)
    outcomes = [codec.decode(schema, s) for s in completions]
    unparsable = [
        {"line": i + 1, "error": str(o.error)}
        for i, o in enumerate(outcomes)
        if not o.parsable
    ]
    payload = {
        "schema": schema.value,
        "n": len(outcomes),
        "parsable": sum(o.parsable for o in outcomes),
        "parsability_rate": (
            sum(o.parsable for o in outcomes) / len(outcomes) if outcomes else 0.0
        ),
        "unparsable": unparsable,
    }
    lines = [f"{payload['parsable']}/{payload['n']} parsable"]
    lines += [f"line {u['line']}: {u['error']}" for u in unparsable]
    _emit(args, payload, "\n".join(lines))
    return 0


def _decoded_or_empty(schema: SchemaId, completion: str):
    out = codec.decode(schema, completion)
    if out.parsable:
        return out.record
    return DopingRecord() if schema.is_doping else []


def cmd_score(args) -> int:
    schema = SchemaId(args.schema)
    gold = read_string_lines(args.gold)
    pred = read_string_lines(args.pred)
    if len(gold) != len(pred):
        raise ValueError(
            f"gold has {len(gold)} completions but pred has {len(pred)}"
        )
    bins = [int(x) for x in args.bins.split(",")] if args.bins else None
    report = scoring.sequence_report(schema, list(zip(gold, pred)), bin_edges=bins)
    true_samples = [codec.decode(schema, g).record for g in gold]
    pred_samples = [_decoded_or_empty(schema, p) for p in pred]
    relations = scoring.nerre_prf(
        true_samples, pred_samples, scoring.DEFAULT_RELATIONS[schema]
    )
    fields = (
        ["host", "dopant", "result", "modifier"]
        if schema.is_doping
        else (
            [k for k in codec.GENERAL_KEYS]
            if schema is SchemaId.GENERAL_JSON
            else [k for k in codec.MOF_KEYS]
        )
    )
    ner = {
        f: scoring.ner_prf(true_samples, pred_samples, f).to_dict() for f in fields
    }
    payload = {
        "schema": schema.value,
        "sequence": report.to_dict(),
        "nerre": {label: prf.to_dict() for label, prf in relations.items()},
        "ner": ner,
    }
    lines = [
        f"exact match        {report.exact_match_accuracy:.3f}",
        f"mean similarity    {report.mean_similarity:.3f}",
        f"parsability        {report.parsability_rate:.3f}",
    ]
    for label, prf in relations.items():
        lines.append(
            f"{label}: P={prf.precision:.3f} R={prf.recall:.3f} F1={prf.f1:.3f}"
        )
    _emit(args, payload, "\n".join(lines))
    return 0


def _make_backend(args) -> llm.CompletionBackend:
    if args.backend == "replay":
        if not args.store:
            raise ValueError("--store is required with --backend replay")
        return llm.ReplayBackend.load(args.store)
    if not args.endpoint or not args.model:
        raise ValueError("--endpoint and --model are required with --backend live")
    return llm.HttpBackend(args.endpoint, model=args.model)


def cmd_extract(args) -> int:
    schema = SchemaId(args.schema)
    backend = _make_backend(args)
    prompts = read_string_lines(args.infile)
    params = llm.default_inference_params(schema)
    if args.max_tokens:
        params = llm.InferenceParams(
            max_tokens=args.max_tokens, stop=params.stop
        )
    results = []
    for prompt in prompts:
        out = llm.extract_records(prompt, schema, backend, params)
        entry = {
            "parsable": out.parsable,
            "truncated": out.truncated,
            "error": str(out.error) if out.error else None,
        }
        if out.parsable:
            entry["completion"] = codec.encode(schema, out.record)
        results.append(entry)
    payload = {
        "schema": schema.value,
        "n": len(results),
        "results": results,
    }
    _emit(
        args,
        payload,
        "\n".join(
            f"{i + 1}: " + (r["completion"] if r["parsable"] else f"UNPARSABLE ({r['error']})")
            for i, r in enumerate(results)
        ),
    )
    return 0


def cmd_dataset_filter(args) -> int:
    cfg = (
        corpus.KeywordConfig.from_file(args.config)
        if args.config
        else corpus.KeywordConfig.builtin(args.task)
    )
    abstracts = corpus.load_abstracts(args.infile)
    kept = corpus.filter_abstracts(abstracts, cfg)
    corpus.save_abstracts(kept, args.out)
    print(f"kept {len(kept)} of {len(abstracts)} abstracts", file=sys.stderr)
    return 0


def cmd_dataset_build(args) -> int:
    pairs = corpus.load_pairs(args.infile)
    n = corpus.build_finetune_file(pairs, args.out)
    print(f"wrote {n} samples", file=sys.stderr)
    return 0


def cmd_split(args) -> int:
    pairs = corpus.load_pairs(args.infile)
    cfg = corpus.SplitConfig(seed=args.seed, test_fraction=args.test_fraction)
    train, test = corpus.split_dataset(pairs, cfg)
    corpus.save_pairs(train, args.out_train)
    corpus.save_pairs(test, args.out_test)
    print(f"train {len(train)} / test {len(test)}", file=sys.stderr)
    return 0


def cmd_graph_export(args) -> int:
    schema = SchemaId(args.schema)
    samples = load_samples(schema, args.infile)
    if len(samples) != 1:
        raise ValueError("graph-export expects exactly one sample in the records file")
    g = kgraph.graph_from_sample(samples[0], args.doc_id)
    kgraph.export_graph(g, args.out)
    return 0


def cmd_curve_plan(args) -> int:
    sizes = [int(x) for x in args.sizes.split(",")]
    plan = llm.learning_curve_plan(sizes, base_seed=args.seed)
    human = "\n".join(
        f"n={job['n']:>4}  epochs={job['epochs']}  seed={job['seed']}" for job in plan
    )
    _emit(args, {"jobs": plan}, human)
    return 0


def cmd_annotate_serve(args) -> int:
    import os

    import uvicorn

    backend = None
    if args.backend == "replay":
        if not args.store:
            raise ValueError("--store is required with --backend replay")
        backend = llm.ReplayBackend.load(args.store)
    elif args.backend == "live":
        backend = llm.HttpBackend(args.endpoint, model=args.model)
    service = annosvc.AnnotationService(journal_path=args.journal, backend=backend)
    app = annosvc.create_app(service, token=os.environ.get("ANNOSVC_TOKEN"))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matextract",
        description="Structured materials-text extraction around completion models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def schema_arg(p):
        p.add_argument("--schema", required=True, choices=SCHEMA_CHOICES)

    p = sub.add_parser("encode", help="records file -> completion strings")
    schema_arg(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="parsability report for completions")
    schema_arg(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="sequence + NERRE + NER score report")
    schema_arg(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--bins", help="comma-separated ascending bin lower bounds")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("extract", help="prompts -> decoded records via a backend")
    schema_arg(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--backend", choices=["replay", "live"], default="replay")
    p.add_argument("--store", help="replay store JSONL")
    p.add_argument("--endpoint", help="live completions endpoint URL")
    p.add_argument("--model", help="live model name")
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("dataset-filter", help="keyword-filter an abstract corpus")
    p.add_argument("--task", choices=["doping", "general", "mof"], default="doping")
    p.add_argument("--config", help="custom keyword config JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_filter)

    p = sub.add_parser("dataset-build", help="pairs file -> fine-tune JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_build)

    p = sub.add_parser("split", help="seeded train/test split of a pairs file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--test-fraction", type=float, required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("graph-export", help="one decoded sample -> node-link JSON")
    schema_arg(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--doc-id", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_export)

    p = sub.add_parser("curve-plan", help="learning-curve fine-tune job list")
    p.add_argument("--sizes", required=True, help="comma-separated training sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_curve_plan)

    p = sub.add_parser("annotate-serve", help="run the annotation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--journal", required=True)
    p.add_argument("--backend", choices=["replay", "live", "none"], default="none")
    p.add_argument("--store", help="replay store JSONL for suggestions")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.set_defaults(func=cmd_annotate_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
