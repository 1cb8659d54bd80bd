"""File formats for dataset rows, tokenized examples, and corpus manifests.

JSONL is the primary format; CSV mirrors the row fields for spreadsheet use
but cannot carry the rendered text.  Tokenized examples are validated against
the masking invariants before anything is written, so a bad example fails the
run instead of poisoning a training file.  All text files are UTF-8 with
surrogate escapes, letting byte-exact tokenizer output survive a round trip.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .chunking import TokenizedExample
from .ingest import Block, CodeUnit, Document
from .rows import DatasetRow, PromptTemplate
from .tokenizer import IGNORE_LABEL


class DatasetIOError(ValueError):
    pass


def _open_write(path: str | Path, newline: str | None = "\n"):
    try:
        return open(path, "w", encoding="utf-8", errors="surrogateescape", newline=newline)
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def _open_read(path: str | Path, newline: str | None = "\n"):
    try:
        return open(path, encoding="utf-8", errors="surrogateescape", newline=newline)
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc


def _row_record(row: DatasetRow) -> dict:
    record = {"recipe": row.recipe}
    if row.instruction is not None:
        record["instruction"] = row.instruction
    if row.context is not None:
        record["context"] = row.context
    record["response"] = row.response
    record["rendered"] = row.rendered
    return record


def write_jsonl(rows: list[DatasetRow], path: str | Path) -> int:
    with _open_write(path) as fh:
        for row in rows:
            fh.write(json.dumps(_row_record(row), ensure_ascii=False))
            fh.write("\n")
    return len(rows)


def read_jsonl(path: str | Path) -> list[DatasetRow]:
    rows = []
    with _open_read(path) as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetIOError(f"{path}:{number}: invalid JSON: {exc}") from exc
            try:
                rows.append(
                    DatasetRow(
                        recipe=record["recipe"],
                        response=record["response"],
                        rendered=record["rendered"],
                        instruction=record.get("instruction"),
                        context=record.get("context"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise DatasetIOError(f"{path}:{number}: bad row: {exc}") from exc
    return rows


CSV_HEADER = ["recipe", "instruction", "context", "response"]


def write_csv(rows: list[DatasetRow], path: str | Path) -> int:
    with _open_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [row.recipe, row.instruction or "", row.context or "", row.response]
            )
    return len(rows)


def read_csv(path: str | Path, template: PromptTemplate | None = None) -> list[DatasetRow]:
    """CSV stores no rendered text, so rows are re-rendered on load."""
    template = template if template is not None else PromptTemplate()
    rows = []
    with _open_read(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise DatasetIOError(f"{path}: expected header {CSV_HEADER}, got {header}")
        for record in reader:
            if len(record) != len(CSV_HEADER):
                raise DatasetIOError(
                    f"{path}: row {reader.line_num} has {len(record)} fields, "
                    f"expected {len(CSV_HEADER)}"
                )
            recipe, instruction, context, response = record
            rows.append(
                DatasetRow(
                    recipe=recipe,
                    response=response,
                    rendered=template.render(instruction or None, context or None, response),
                    instruction=instruction or None,
                    context=context or None,
                )
            )
    return rows


def validate_example(example: TokenizedExample, index: int) -> None:
    """Reject anything violating the row layout before it reaches a file."""
    n = len(example.input_ids)
    if len(example.labels) != n or len(example.attention_mask) != n:
        raise DatasetIOError(
            f"example {index}: lengths differ "
            f"(input_ids {n}, labels {len(example.labels)}, "
            f"attention_mask {len(example.attention_mask)})"
        )
    if not 0 <= example.prompt_len <= n:
        raise DatasetIOError(
            f"example {index}: prompt_len {example.prompt_len} outside [0, {n}]"
        )
    ones = sum(example.attention_mask)
    if example.attention_mask != [1] * ones + [0] * (n - ones):
        raise DatasetIOError(
            f"example {index}: attention_mask must be ones then zeros"
        )
    for position, (input_id, label) in enumerate(zip(example.input_ids, example.labels)):
        if label != IGNORE_LABEL and label != input_id:
            raise DatasetIOError(
                f"example {index}: label at {position} is {label}, "
                f"expected {IGNORE_LABEL} or the input id {input_id}"
            )
    if any(label != IGNORE_LABEL for label in example.labels[: example.prompt_len]):
        raise DatasetIOError(
            f"example {index}: first {example.prompt_len} labels must be {IGNORE_LABEL}"
        )


def write_tokenized(examples: list[TokenizedExample], path: str | Path) -> int:
    for index, example in enumerate(examples):
        validate_example(example, index)
    with _open_write(path) as fh:
        for example in examples:
            record = {
                "input_ids": example.input_ids,
                "labels": example.labels,
                "attention_mask": example.attention_mask,
                "prompt_len": example.prompt_len,
            }
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
    return len(examples)


def read_tokenized(path: str | Path) -> list[TokenizedExample]:
    examples = []
    with _open_read(path) as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                examples.append(
                    TokenizedExample(
                        input_ids=record["input_ids"],
                        labels=record["labels"],
                        attention_mask=record["attention_mask"],
                        prompt_len=record["prompt_len"],
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetIOError(f"{path}:{number}: bad example: {exc}") from exc
    return examples


def write_manifest(
    path: str | Path,
    documents: list[Document],
    code_units: list[CodeUnit],
    docs_root: str = "",
    code_root: str = "",
) -> int:
    """First line holds run metadata and counts; every later line is one
    document or code unit."""
    meta = {
        "kind": "meta",
        "docs_root": docs_root,
        "code_root": code_root,
        "counts": {
            "documents": len(documents),
            "blocks": sum(len(d.blocks) for d in documents),
            "code_units": len(code_units),
        },
    }
    with _open_write(path) as fh:
        fh.write(json.dumps(meta, ensure_ascii=False))
        fh.write("\n")
        for doc in documents:
            record = {
                "kind": "document",
                "doc_id": doc.doc_id,
                "source_path": doc.source_path,
                "blocks": [
                    {"heading_path": [[lvl, title] for lvl, title in b.heading_path],
                     "text": b.text}
                    for b in doc.blocks
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
        for unit in code_units:
            record = {
                "kind": "code_unit",
                "qualified_name": unit.qualified_name,
                "language": unit.language,
                "source_path": unit.source_path,
                "line_span": list(unit.line_span),
                "signature": unit.signature,
                "body": unit.body,
                "docstring": unit.docstring,
                "leading_comments": unit.leading_comments,
            }
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
    return 1 + len(documents) + len(code_units)


def read_manifest(path: str | Path) -> tuple[dict, list[Document], list[CodeUnit]]:
    documents: list[Document] = []
    code_units: list[CodeUnit] = []
    meta: dict | None = None
    with _open_read(path) as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetIOError(f"{path}:{number}: invalid JSON: {exc}") from exc
            kind = record.get("kind")
            if number == 1:
                if kind != "meta":
                    raise DatasetIOError(f"{path}:1: manifest must start with a meta line")
                meta = record
            elif kind == "document":
                blocks = [
                    Block(
                        heading_path=[(lvl, title) for lvl, title in b["heading_path"]],
                        text=b["text"],
                    )
                    for b in record["blocks"]
                ]
                documents.append(
                    Document(
                        doc_id=record["doc_id"],
                        source_path=record["source_path"],
                        blocks=blocks,
                    )
                )
            elif kind == "code_unit":
                code_units.append(
                    CodeUnit(
                        qualified_name=record["qualified_name"],
                        language=record["language"],
                        source_path=record["source_path"],
                        line_span=tuple(record["line_span"]),
                        signature=record["signature"],
                        body=record["body"],
                        docstring=record.get("docstring", ""),
                        leading_comments=record.get("leading_comments", ""),
                    )
                )
            else:
                raise DatasetIOError(f"{path}:{number}: unknown record kind {kind!r}")
    if meta is None:
        raise DatasetIOError(f"{path}: empty manifest; expected a meta line")
    return meta, documents, code_units
