"""Acceptance suite: one test per shipping criterion, tolerances stated inline.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion with the measured numbers next to the allowed bands.
"""

from __future__ import annotations

import random
import shutil
from fractions import Fraction

import pytest

from conftest import FIXTURES, fixture_tokenizer_paths
from oracles import (
    chunk_count_formula,
    lora_params_bruteforce,
    rake_reference,
    step_count_bruteforce,
)
from tunesmith.chunking import Chunk, ChunkSpec, build_example, pack_rows, split_chunks
from tunesmith.cli import main
from tunesmith.dataset_io import read_csv, read_jsonl, write_csv, write_jsonl
from tunesmith.estimator import (
    BUILT_IN_MODELS,
    GB,
    HardwareProfile,
    TuneConfig,
    load_calibration,
    lora_trainable_params,
    resource_estimate,
    step_count,
    weight_memory,
)
from tunesmith.ingest import Block, Document, extract_java_units
from tunesmith.llm import ClientConfig, StubServer
from tunesmith.rake import RakeConfig, ScoredPhrase, extract_keywords
from tunesmith.recipes_code import recipe_code_summary
from tunesmith.recipes_text import recipe_query
from tunesmith.rows import PromptTemplate
from tunesmith.tokenizer import decode, encode

SEED = 20260816


def report(number: int, detail: str) -> None:
    print(f"\ncriterion {number:02d} PASS: {detail}")


# ── 1. weight memory against the published quantization table ────────────────


def test_criterion_01_weight_memory():
    fp32 = weight_memory(7_000_000_000, "fp32")
    assert fp32 == 28 * GB, f"fp32 weights {fp32 / GB} GB, expected exactly 28"
    int8 = weight_memory(7_000_000_000, "int8")
    reported = 8 * GB
    deviation = abs(int8 - reported) / reported
    assert deviation <= 0.15, f"int8 weights {int8 / GB} GB off by {deviation:.1%} (> 15%)"
    report(1, f"fp32 28.00 GB exact; int8 {int8 / GB:.0f} GB within 15% of 8 GB")


# ── 2. adapter-method GPU totals within ±30% of the published rows ───────────


def test_criterion_02_adapter_memory_bands():
    hardware = HardwareProfile()
    rows = [
        ("7b", TuneConfig(method="lora", precision="fp16"), 18),
        ("13b", TuneConfig(method="lora", precision="fp16"), 26),
        ("70b", TuneConfig(method="qlora", precision="nf4"), 65),
    ]
    measured = []
    for name, cfg, reported_gb in rows:
        est = resource_estimate(BUILT_IN_MODELS[name], cfg, hardware)
        got = est.gpu_total_bytes / GB
        deviation = abs(got - reported_gb) / reported_gb
        assert deviation <= 0.30, (
            f"{name} {cfg.method}: {got:.1f} GB vs {reported_gb} GB is {deviation:.1%} off"
        )
        measured.append(f"{name} {got:.1f}/{reported_gb}")

    blocked = resource_estimate(
        BUILT_IN_MODELS["70b"], TuneConfig(method="lora", precision="fp16"), hardware
    )
    assert not blocked.feasible, "70b half-precision adapters must overflow 80 GB"
    allowed = resource_estimate(
        BUILT_IN_MODELS["70b"], TuneConfig(method="qlora", precision="nf4"), hardware
    )
    assert allowed.feasible, "70b quantized adapters must fit 80 GB"
    report(2, "GPU GB within ±30%: " + ", ".join(measured) + "; 70b lora blocked, qlora fits")


# ── 3. full fine-tuning feasibility and time within ±25% ─────────────────────

FULL_FT_ROWS = [
    # model, precision, seq_len, batch, accum, steps, minutes
    ("7b", "fp32", 4096, 1, 2, 254, 57),
    ("7b", "fp16", 4096, 2, 4, 63, 33),
    ("7b", "fp16", 2048, 4, 8, 16, 10),
    ("13b", "fp32", 4096, 1, 2, 254, 110),
    ("13b", "fp16", 4096, 2, 4, 127, 75),
    ("13b", "fp16", 2048, 4, 8, 16, 25),
]


def test_criterion_03_full_finetune_rows():
    hardware = HardwareProfile()
    calibration = load_calibration()
    summary = []
    for name, precision, seq_len, batch, accum, steps, minutes in FULL_FT_ROWS:
        cfg = TuneConfig(
            method="full",
            precision=precision,
            seq_len=seq_len,
            batch=batch,
            grad_accum=accum,
            dataset_rows=steps * batch * accum,
        )
        est = resource_estimate(BUILT_IN_MODELS[name], cfg, hardware, calibration)
        assert est.feasible, f"{name} {precision} seq {seq_len} must fit with offloading"
        assert est.steps == steps, f"expected {steps} steps, estimated {est.steps}"
        assert est.minutes is not None
        deviation = abs(est.minutes - minutes) / minutes
        assert deviation <= 0.25, (
            f"{name} {precision} seq {seq_len}: {est.minutes:.1f} min vs {minutes} "
            f"is {deviation:.1%} off"
        )
        summary.append(f"{est.minutes:.0f}/{minutes}")
    report(3, f"six rows feasible on 80 GB; minutes within ±25%: {', '.join(summary)}")


# ── 4. optimizer step arithmetic vs a simulated training loop ────────────────


def test_criterion_04_step_count_sweep():
    rng = random.Random(SEED)
    for _ in range(1000):
        rows = rng.randint(0, 4000)
        batch = rng.randint(1, 64)
        accum = rng.randint(1, 16)
        epochs = rng.randint(1, 4)
        cfg = TuneConfig(
            method="full", precision="fp32", batch=batch, grad_accum=accum,
            epochs=epochs, dataset_rows=rows,
        )
        expected = step_count_bruteforce(rows, batch, accum, epochs)
        assert step_count(cfg) == expected, (rows, batch, accum, epochs)
    report(4, "step_count matched the loop oracle on 1,000 randomized cases")


# ── 5. adapter parameter count vs per-matrix summation ───────────────────────


def test_criterion_05_lora_parameter_count():
    spec = BUILT_IN_MODELS["7b"]
    for rank in (1, 2, 4, 8, 16):
        expected = lora_params_bruteforce(spec.layers, list(spec.target_modules), rank)
        assert lora_trainable_params(spec, rank) == expected
    assert lora_trainable_params(spec, 1) == 524_288
    report(5, "ranks 1/2/4/8/16 match the summation oracle; rank 1 = 524,288 params")


# ── 6. label masking invariants on randomized triples ────────────────────────

CHARS = "abcdefghijklmnop 0123456789.,!?\n\téµ中"


def test_criterion_06_masking_invariants(model):
    rng = random.Random(SEED)
    assert model.special.pad_id == model.special.unk_id
    for _ in range(500):
        prompt = "".join(rng.choice(CHARS) for _ in range(rng.randint(0, 40)))
        response = "".join(rng.choice(CHARS) for _ in range(rng.randint(1, 60)))
        prompt_ids = ([model.special.bos_id] if rng.random() < 0.5 else []) + encode(
            model, prompt
        )
        response_ids = encode(model, response) + (
            [model.special.eos_id] if rng.random() < 0.5 else []
        )
        content = len(prompt_ids) + len(response_ids)
        seq_len = content + rng.randint(0, 30)
        example = build_example(prompt_ids, response_ids, seq_len, model)

        k = example.prompt_len
        assert k == len(prompt_ids)
        assert all(label == -100 for label in example.labels[:k])
        assert example.labels[k] != -100  # response is never empty here
        for i, attention in enumerate(example.attention_mask):
            if attention == 0:
                assert example.labels[i] == -100
                assert example.input_ids[i] == model.special.pad_id
        learned = [label for label in example.labels if label >= 0]
        assert decode(model, learned) == response
    report(6, "500 triples: leading mask, pad/unk padding, and response decode all hold")


# ── 7. chunk coverage and packing discipline over randomized corpora ──────────


def test_criterion_07_chunking_and_packing(model):
    rng = random.Random(SEED)

    for _ in range(500):
        blocks = [
            Block(
                heading_path=[],
                text="".join(rng.choice(CHARS) for _ in range(rng.randint(1, 80))),
            )
            for _ in range(rng.randint(1, 4))
        ]
        doc = Document(doc_id="doc", source_path="", blocks=blocks)
        chunk_tokens = rng.randint(2, 40)
        spec = ChunkSpec(
            chunk_tokens=chunk_tokens, overlap_tokens=rng.randint(0, chunk_tokens - 1)
        )
        chunks = split_chunks(doc, spec, model)

        glued = "\n\n".join(block.text for block in blocks)
        stream = encode(model, glued)
        total = len(stream)
        assert len(chunks) == chunk_count_formula(total, spec.chunk_tokens, spec.overlap_tokens)
        for i, chunk in enumerate(chunks):
            start = i * spec.stride
            assert chunk.tokens == stream[start : start + spec.chunk_tokens]
        # full coverage: the final window reaches the end of the stream
        last_start = (len(chunks) - 1) * spec.stride
        assert last_start + len(chunks[-1].tokens) == total

    for _ in range(500):
        budget = rng.randint(2, 50)
        counts = [rng.randint(1, budget) for _ in range(rng.randint(0, 30))]
        items = [(f"item-{i}", count) for i, count in enumerate(counts)]
        rows = pack_rows(items, budget)

        flattened = [text for row in rows for text in row.texts]
        assert flattened == [text for text, _ in items]  # no reorder, no split, no loss
        cursor = 0
        for index, row in enumerate(rows):
            row_counts = counts[cursor : cursor + len(row.texts)]
            cursor += len(row.texts)
            assert row.token_count == sum(row_counts) + len(row_counts) - 1
            assert row.token_count <= budget
            if index + 1 < len(rows):  # greedy: the next item truly did not fit
                assert row.token_count + 1 + counts[cursor] > budget
    report(7, "1,000 randomized cases: window coverage and greedy packing invariants hold")


# ── 8. keyword extraction against hand scores and a second implementation ────


def test_criterion_08_rake_oracle():
    no_stop = RakeConfig(stopwords=frozenset())
    assert extract_keywords("red apple", no_stop) == [
        ScoredPhrase("red apple", Fraction(4))
    ]
    split_config = RakeConfig(stopwords=frozenset({"is"}))
    assert extract_keywords("deep learning is deep", split_config) == [
        ScoredPhrase("deep learning", Fraction(7, 2)),
        ScoredPhrase("deep", Fraction(3, 2)),
    ]

    text = (FIXTURES / "docs" / "rake_corpus.txt").read_text(encoding="utf-8")
    assert len(text.strip().splitlines()) == 20
    config = RakeConfig()  # default stoplist, top_k=5
    ours = extract_keywords(text, config)
    theirs = rake_reference(text, set(config.stopwords), config.phrase_delimiters, 5)
    assert {p.text for p in ours} == {t for t, _ in theirs}
    report(8, "hand scores exact (4 and 7/2, 3/2); top-5 set matches the reference")


# ── 9. deterministic stub-backed fan-out ─────────────────────────────────────


def _three_chunks() -> list[Chunk]:
    texts = [
        "Connect a source before scheduling any run.",
        "Alerts fire when drift crosses the configured threshold.",
        "Exports are written as compressed archives once a day.",
    ]
    return [
        Chunk(text=text, token_count=0, source=("doc", (i,)), tokens=[])
        for i, text in enumerate(texts)
    ]


def _stub_client(base_url: str) -> ClientConfig:
    return ClientConfig(base_url=base_url, backoff_seconds=0.0)


def _query_rows():
    script = [{"content": "1. What is required first?\n2. When does it happen?", "repeat": True}]
    with StubServer(script) as server:
        return recipe_query(
            _three_chunks(), _stub_client(server.base_url), PromptTemplate(),
            queries_per_chunk=2,
        )


def _summary_rows():
    source = (FIXTURES / "code" / "src" / "TestCaseStore.java").read_text(encoding="utf-8")
    units = extract_java_units(source, "src/TestCaseStore.java")
    assert len(units) == 3
    script = [{"content": "Stores and fetches test cases.", "repeat": True}]
    with StubServer(script) as server:
        return recipe_code_summary(units, _stub_client(server.base_url), PromptTemplate())


def test_criterion_09_stub_fanout_golden(tmp_path):
    query_rows = _query_rows()
    assert len(query_rows) == 6, f"3 chunks x 2 queries must give 6 rows, got {len(query_rows)}"
    summary_rows = _summary_rows()
    assert len(summary_rows) == 3

    first = tmp_path / "first.jsonl"
    second = tmp_path / "second.jsonl"
    write_jsonl(query_rows + summary_rows, first)
    write_jsonl(_query_rows() + _summary_rows(), second)
    assert first.read_bytes() == second.read_bytes()
    report(9, "6 query rows + 3 summary rows; repeated runs byte-identical")


# ── 10. end-to-end command flow on the fixture user guide ────────────────────

HAND_LISTED_HEADING_PATHS = [
    "Getting Started",
    "Getting Started > Installation",
    "Getting Started > First Project",
    "Data Pipelines",
    "Data Pipelines > Connecting Sources",
    "Data Pipelines > Scheduling Runs",
    "Model Monitoring",
    "Model Monitoring > Alert Policies",
]


def test_criterion_10_end_to_end_cli(tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    shutil.copy(FIXTURES / "docs" / "userguide.md", docs / "userguide.md")
    manifest = tmp_path / "manifest.jsonl"
    assert main(["ingest", "--docs", str(docs), "--out", str(manifest)]) == 0

    vocab_path, merges_path = fixture_tokenizer_paths()
    jsonl_path = tmp_path / "rows.jsonl"
    csv_path = tmp_path / "rows.csv"
    base = [
        "prepare", "--manifest", str(manifest), "--recipe", "heading",
        "--tokenizer", f"{vocab_path},{merges_path}", "--seq-len", "512",
    ]
    assert main(base + ["--out", str(jsonl_path)]) == 0
    assert main(base + ["--out", str(csv_path), "--format", "csv"]) == 0

    rows = read_jsonl(jsonl_path)
    assert len(rows) == 8
    assert [row.instruction for row in rows] == HAND_LISTED_HEADING_PATHS
    assert read_csv(csv_path) == rows

    rewritten_jsonl = tmp_path / "again.jsonl"
    write_jsonl(rows, rewritten_jsonl)
    assert rewritten_jsonl.read_bytes() == jsonl_path.read_bytes()
    rewritten_csv = tmp_path / "again.csv"
    write_csv(read_csv(csv_path), rewritten_csv)
    assert rewritten_csv.read_bytes() == csv_path.read_bytes()
    report(10, "ingest + prepare produced the 8 heading rows; JSONL and CSV round-trip")
