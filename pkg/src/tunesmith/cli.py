"""Command-line entry point: ingest, prepare, and estimate.

``ingest`` scans document and code trees into a manifest, ``prepare`` turns a
manifest into dataset rows (optionally tokenized training examples), and
``estimate`` sizes a fine-tuning run against a hardware budget.

Exit codes: 0 success, 1 data error, 2 usage error, 3 infeasible estimate.
All reports go to stderr; data goes to files (the estimate table, which is
the command's output, goes to stdout).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .chunking import Chunk, ChunkSpec, RowOverflowError, TokenizedExample, build_example, pack_rows, split_chunks
from .config import AppConfig, load_config
from .dataset_io import (
    read_manifest,
    write_csv,
    write_jsonl,
    write_manifest,
    write_tokenized,
)
from .estimator import (
    BUILT_IN_MODELS,
    GB,
    EstimateError,
    HardwareProfile,
    ModelSpec,
    PRECISION_BYTES,
    ResourceEstimate,
    TuneConfig,
    load_calibration,
    resource_estimate,
)
from .ingest import IngestReport, corpus_stats, extract_code_units, ingest_documents
from .llm import LlmError
from .recipes_code import recipe_code_metadata, recipe_code_summary, recipe_code_tokenized
from .recipes_text import recipe_heading, recipe_keyword, recipe_query, recipe_raw
from .rows import DatasetRow, PromptTemplate, RecipeReport
from .tokenizer import TokenizerModel, encode, load_tokenizer

RECIPE_CHOICES = (
    "raw",
    "keyword",
    "heading",
    "query",
    "code-summary",
    "code-metadata",
    "code-tokenized",
)
ENDPOINT_RECIPES = ("query", "code-summary")


class DatasetPrepError(ValueError):
    """Input files cannot support the requested preparation."""


class ModelArgError(Exception):
    """--model value is neither a built-in name nor a JSON file."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunesmith",
        description="Prepare fine-tuning datasets and size training runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser(
        "ingest", help="scan document and code trees into a corpus manifest"
    )
    p_ingest.add_argument("--docs", help="directory of .md/.txt documents")
    p_ingest.add_argument("--code", help="repository root for function extraction")
    p_ingest.add_argument("--out", required=True, help="manifest path (JSONL)")
    p_ingest.add_argument("--config", help="key=value settings file")
    p_ingest.set_defaults(func=cmd_ingest, parser=p_ingest)

    p_prepare = sub.add_parser(
        "prepare", help="turn a manifest into dataset rows via one recipe"
    )
    p_prepare.add_argument("--manifest", required=True, help="manifest from ingest")
    p_prepare.add_argument("--recipe", required=True, choices=RECIPE_CHOICES)
    p_prepare.add_argument(
        "--tokenizer",
        required=True,
        metavar="VOCAB,MERGES",
        help="comma-separated vocab and merges file paths",
    )
    p_prepare.add_argument("--seq-len", required=True, type=int, help="training row length")
    p_prepare.add_argument("--chunk", type=int, help="chunk window in tokens")
    p_prepare.add_argument("--overlap", type=int, help="tokens repeated between windows")
    p_prepare.add_argument("--top-k", type=int, help="keyword phrases per chunk")
    p_prepare.add_argument("--queries-per-chunk", type=int, help="questions per chunk")
    p_prepare.add_argument("--endpoint", help="chat-completions base URL for LLM recipes")
    p_prepare.add_argument(
        "--response-budget",
        type=int,
        help="token cap per response; oversized blocks split, oversized functions skipped",
    )
    p_prepare.add_argument("--out", required=True, help="dataset rows output path")
    p_prepare.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p_prepare.add_argument(
        "--tokenized-out", help="also write packed and masked training examples here"
    )
    p_prepare.add_argument("--config", help="key=value settings file")
    p_prepare.set_defaults(func=cmd_prepare, parser=p_prepare)

    p_estimate = sub.add_parser(
        "estimate", help="size a fine-tuning run against a hardware budget"
    )
    p_estimate.add_argument(
        "--model",
        required=True,
        help="7b, 13b, 70b, or a JSON file with name/params/layers/hidden_dim",
    )
    p_estimate.add_argument("--method", required=True, choices=("full", "lora", "qlora"))
    p_estimate.add_argument("--precision", required=True, choices=tuple(PRECISION_BYTES))
    p_estimate.add_argument("--rank", type=int, default=8, help="adapter rank")
    p_estimate.add_argument("--alpha", type=int, default=32, help="adapter scaling")
    p_estimate.add_argument("--batch", type=int, default=1, help="micro-batch size")
    p_estimate.add_argument("--accum", type=int, default=1, help="gradient accumulation")
    p_estimate.add_argument("--seq-len", type=int, default=4096)
    p_estimate.add_argument("--rows", type=int, default=0, help="dataset rows")
    p_estimate.add_argument("--epochs", type=int, default=1)
    p_estimate.add_argument("--task", choices=("text", "code"), default="text")
    p_estimate.add_argument("--gpu", type=float, default=80.0, help="GPU memory budget, GB")
    p_estimate.add_argument("--cpu", type=float, default=170.0, help="CPU memory budget, GB")
    p_estimate.add_argument("--calibration", help="seconds-per-step table (TSV)")
    p_estimate.add_argument("--config", help="key=value settings file")
    p_estimate.set_defaults(func=cmd_estimate, parser=p_estimate)

    return parser


# ── ingest ───────────────────────────────────────────────────────────────────


def cmd_ingest(args: argparse.Namespace) -> int:
    load_config(args.config)  # fail fast on a broken settings file
    if not args.docs and not args.code:
        args.parser.error("at least one of --docs or --code is required")
    for flag, path in (("--docs", args.docs), ("--code", args.code)):
        if path and not os.path.isdir(path):
            args.parser.error(f"{flag} directory not found: {path}")

    report = IngestReport()
    documents = ingest_documents(args.docs, report) if args.docs else []
    units = extract_code_units(args.code, report=report) if args.code else []
    docs_root = os.path.abspath(args.docs) if args.docs else ""
    code_root = os.path.abspath(args.code) if args.code else ""
    count = write_manifest(args.out, documents, units, docs_root=docs_root, code_root=code_root)

    for line in report.lines():
        print(f"skipped\t{line}", file=sys.stderr)
    blocks = sum(len(doc.blocks) for doc in documents)
    stats = corpus_stats(units)
    print(f"documents: {len(documents)} ({blocks} blocks)", file=sys.stderr)
    by_language = ", ".join(f"{k}: {v}" for k, v in sorted(stats.per_language.items()))
    print(
        f"code units: {stats.function_count} ({stats.total_bytes} body bytes"
        + (f"; {by_language}" if by_language else "")
        + ")",
        file=sys.stderr,
    )
    print(f"wrote {count} manifest lines to {args.out}", file=sys.stderr)
    return 0


# ── prepare ──────────────────────────────────────────────────────────────────


def _split_tokenizer_arg(args: argparse.Namespace) -> tuple[str, str]:
    vocab, sep, merges = args.tokenizer.partition(",")
    if not sep or not vocab or not merges:
        args.parser.error("--tokenizer expects two comma-separated paths: VOCAB,MERGES")
    return vocab, merges


def _document_chunks(documents, spec: ChunkSpec, model: TokenizerModel) -> list[Chunk]:
    return [chunk for doc in documents for chunk in split_chunks(doc, spec, model)]


def cmd_prepare(args: argparse.Namespace) -> int:
    if args.seq_len < 1:
        args.parser.error(f"--seq-len must be >= 1, got {args.seq_len}")
    if args.recipe in ENDPOINT_RECIPES and not args.endpoint:
        args.parser.error(f"--endpoint is required for recipe '{args.recipe}'")

    cfg = load_config(args.config)
    vocab_path, merges_path = _split_tokenizer_arg(args)
    try:
        model = load_tokenizer(vocab_path, merges_path, cfg.special_tokens())
    except OSError as exc:
        raise OSError(f"cannot read tokenizer file: {exc}") from exc
    template = cfg.template()
    meta, documents, units = read_manifest(args.manifest)

    try:
        chunk_spec = ChunkSpec(
            chunk_tokens=args.chunk if args.chunk is not None else cfg.chunk_tokens,
            overlap_tokens=args.overlap if args.overlap is not None else cfg.overlap_tokens,
        )
    except ValueError as exc:
        args.parser.error(str(exc))
    report = RecipeReport()

    if args.recipe == "raw":
        rows = recipe_raw(_document_chunks(documents, chunk_spec, model), template)
    elif args.recipe == "keyword":
        rake_config = cfg.rake_config()
        if args.top_k is not None:
            rake_config = replace(rake_config, top_k=args.top_k)
        chunks = _document_chunks(documents, chunk_spec, model)
        rows = recipe_keyword(chunks, rake_config, template, report)
    elif args.recipe == "heading":
        rows = []
        for doc in documents:
            rows.extend(
                recipe_heading(
                    doc,
                    template,
                    model=model,
                    response_budget=args.response_budget,
                    report=report,
                )
            )
    elif args.recipe == "query":
        client = cfg.client_config(args.endpoint, cfg.temperature_query)
        per_chunk = (
            args.queries_per_chunk
            if args.queries_per_chunk is not None
            else cfg.queries_per_chunk
        )
        chunks = _document_chunks(documents, chunk_spec, model)
        rows = recipe_query(
            chunks, client, template, queries_per_chunk=per_chunk,
            report=report, in_flight=cfg.in_flight,
        )
    elif args.recipe == "code-summary":
        client = cfg.client_config(args.endpoint, cfg.temperature_summary)
        rows = recipe_code_summary(
            units, client, template, report=report, in_flight=cfg.in_flight,
            model=model, response_budget=args.response_budget,
        )
    elif args.recipe == "code-metadata":
        rows = recipe_code_metadata(units, template, report)
    else:  # code-tokenized
        code_root = meta.get("code_root", "")
        if not code_root:
            raise DatasetPrepError(
                f"manifest {args.manifest} records no code root; "
                "re-run ingest with --code to use the code-tokenized recipe"
            )
        walk_report = IngestReport()
        rows = recipe_code_tokenized(code_root, model, args.seq_len, template, walk_report)
        for path, reason in walk_report.skipped:
            report.add(path, reason)

    # Tokenize before writing anything so an overflow leaves no partial files.
    examples = None
    if args.tokenized_out:
        examples = tokenize_rows(rows, args.recipe, template, model, args.seq_len, cfg)

    if args.format == "csv":
        written = write_csv(rows, args.out)
    else:
        written = write_jsonl(rows, args.out)

    tokenized_note = ""
    if examples is not None:
        example_count = write_tokenized(examples, args.tokenized_out)
        tokenized_note = f"; {example_count} examples to {args.tokenized_out}"

    for line in report.lines():
        print(f"report\t{line}", file=sys.stderr)
    print(f"wrote {written} rows to {args.out}{tokenized_note}", file=sys.stderr)
    return 0


def tokenize_rows(
    rows: list[DatasetRow],
    recipe: str,
    template: PromptTemplate,
    model: TokenizerModel,
    seq_len: int,
    cfg: AppConfig,
) -> list[TokenizedExample]:
    """Fixed-length training examples for the rows a recipe produced.

    Raw rows are packed (several chunks per example, separated by the
    end-of-text token); code-tokenized windows are already exact token runs
    and pass through unwrapped; instruction rows become one masked example
    each.  A row that cannot fit raises with the offending row named.
    """
    bos = [model.special.bos_id] if cfg.add_bos else []
    eos = [model.special.eos_id] if cfg.add_eos else []

    if recipe == "code-tokenized":
        examples = []
        for index, row in enumerate(rows):
            window = list(row.tokens) if row.tokens is not None else encode(model, row.response)
            try:
                examples.append(build_example([], window, seq_len, model))
            except RowOverflowError as exc:
                raise RowOverflowError(f"row {index}: {exc}") from exc
        return examples

    if recipe == "raw":
        budget = seq_len - len(bos) - len(eos)
        if budget < 1:
            raise RowOverflowError(
                f"seq_len {seq_len} leaves no room for content after special tokens"
            )
        counted = []
        for row in rows:
            ids = list(row.tokens) if row.tokens is not None else encode(model, row.rendered)
            counted.append((row.rendered, ids))
        try:
            packed = pack_rows([(text, len(ids)) for text, ids in counted], budget)
        except RowOverflowError as exc:
            raise RowOverflowError(f"cannot pack raw rows at seq_len {seq_len}: {exc}") from exc
        # Greedy packing keeps input order and never splits an item, so the
        # token runs can be consumed sequentially.
        runs = iter(ids for _, ids in counted)
        examples = []
        for packed_row in packed:
            response_ids: list[int] = []
            for position in range(len(packed_row.texts)):
                if position:
                    response_ids.append(model.special.eos_id)
                response_ids.extend(next(runs))
            response_ids.extend(eos)
            examples.append(build_example(bos, response_ids, seq_len, model))
        return examples

    examples = []
    for index, row in enumerate(rows):
        prefix, response_part = template.render_parts(row.instruction, row.context, row.response)
        prompt_ids = bos + encode(model, prefix)
        response_ids = encode(model, response_part) + eos
        try:
            examples.append(build_example(prompt_ids, response_ids, seq_len, model))
        except RowOverflowError as exc:
            raise RowOverflowError(f"row {index}: {exc}") from exc
    return examples


# ── estimate ─────────────────────────────────────────────────────────────────


def load_model_spec(arg: str) -> ModelSpec:
    """A built-in size name, or a JSON file describing the architecture."""
    if arg in BUILT_IN_MODELS:
        return BUILT_IN_MODELS[arg]
    if not (arg.endswith(".json") or os.path.exists(arg)):
        raise ModelArgError(arg)
    try:
        with open(arg, encoding="utf-8") as fh:
            raw = json.load(fh)
        modules = tuple(
            (int(d_out), int(d_in)) for d_out, d_in in raw.get("target_modules", [])
        )
        return ModelSpec(
            name=str(raw["name"]),
            params=int(raw["params"]),
            layers=int(raw["layers"]),
            hidden_dim=int(raw["hidden_dim"]),
            target_modules=modules,
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        detail = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise DatasetPrepError(f"cannot load model spec {arg}: {detail}") from exc


def render_estimate(
    spec: ModelSpec, cfg: TuneConfig, est: ResourceEstimate, hardware: HardwareProfile
) -> str:
    def gb(value: float) -> str:
        return f"{value / GB:10.2f} GB"

    shape = f"{cfg.method}, {cfg.precision}"
    if cfg.method != "full":
        shape += f", rank {cfg.rank}, alpha {cfg.alpha}"
    minutes = f"{est.minutes:10.1f} min" if est.minutes is not None else "       n/a"
    lines = [
        f"model             {spec.name} ({spec.params / 1e9:g}B params, "
        f"{spec.layers} layers, hidden {spec.hidden_dim})",
        f"method            {shape}",
        f"schedule          batch {cfg.batch} x accum {cfg.grad_accum}, "
        f"seq_len {cfg.seq_len}, epochs {cfg.epochs}, rows {cfg.dataset_rows}",
        f"weights           {gb(est.weight_bytes)}",
        f"adapters          {gb(est.adapter_bytes)}",
        f"gradients         {gb(est.gradient_bytes)}",
        f"optimizer         {gb(est.optimizer_bytes)}",
        f"activations       {gb(est.activation_bytes)}",
        f"gpu total         {gb(est.gpu_total_bytes)} of {hardware.gpu_bytes / GB:g} GB",
        f"cpu offload       {gb(est.cpu_total_bytes)} of {hardware.cpu_bytes / GB:g} GB",
        f"trainable params  {est.trainable_params:,}",
        f"steps             {est.steps}",
        f"time estimate     {minutes}",
        f"feasible          {'yes' if est.feasible else 'no'}",
    ]
    return "\n".join(lines)


def cmd_estimate(args: argparse.Namespace) -> int:
    try:
        spec = load_model_spec(args.model)
    except ModelArgError:
        known = ", ".join(sorted(BUILT_IN_MODELS))
        args.parser.error(
            f"unknown model {args.model!r}; expected {known}, or a path to a JSON file"
        )
    try:
        cfg = TuneConfig(
            method=args.method,
            precision=args.precision,
            rank=args.rank,
            alpha=args.alpha,
            batch=args.batch,
            grad_accum=args.accum,
            seq_len=args.seq_len,
            epochs=args.epochs,
            dataset_rows=args.rows,
            task=args.task,
        )
        hardware = HardwareProfile(
            gpu_bytes=round(args.gpu * GB),
            cpu_bytes=round(args.cpu * GB),
            name=f"{args.gpu:g} GB GPU / {args.cpu:g} GB CPU",
        )
    except EstimateError as exc:
        args.parser.error(str(exc))
    calibration = load_calibration(args.calibration)

    est = resource_estimate(spec, cfg, hardware, calibration)
    print(render_estimate(spec, cfg, est, hardware))
    for note in est.notes:
        print(f"note: {note}", file=sys.stderr)
    return 0 if est.feasible else 3


# ── entry point ──────────────────────────────────────────────────────────────


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        # argparse exits itself on usage errors (code 2) and --help (code 0)
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    except (ValueError, OSError, LlmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
