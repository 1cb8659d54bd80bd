"""Dataset recipes for prose corpora.

Four ways to turn document chunks into training rows.  Responses are always
the verbatim chunk or block text; recipes differ only in how the instruction
is produced: none (raw), extracted keywords, the heading trail, or questions
generated by a model.  A chunk that cannot produce its instruction falls
back or is skipped, and every such event lands in the report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
import re

from .chunking import Chunk, ChunkSpec, split_chunks
from .ingest import Block, Document
from .llm import ClientConfig, LlmError, complete
from .rake import RakeConfig, extract_keywords, keyword_instruction
from .rows import DatasetRow, PromptTemplate, RecipeReport
from .tokenizer import TokenizerModel, count_tokens

QUERY_SYSTEM_PROMPT = "You write questions that are answered by a given passage."
QUERY_USER_PROMPT = (
    "Generate {n} distinct questions a user could ask that are answered by the "
    "following passage. Number them 1..{n}.\n\n{chunk}"
)

_NUMBERED_LINE_RE = re.compile(r"^\s*\d+[.)]\s*(.*\S)\s*$")

DEFAULT_IN_FLIGHT = 4


def _raw_row(text: str, template: PromptTemplate, recipe: str = "raw") -> DatasetRow:
    return DatasetRow(
        recipe=recipe,
        response=text,
        rendered=template.render(None, None, text),
    )


def _instruction_row(
    recipe: str, instruction: str, response: str, template: PromptTemplate
) -> DatasetRow:
    return DatasetRow(
        recipe=recipe,
        instruction=instruction,
        response=response,
        rendered=template.render(instruction, None, response),
    )


def recipe_raw(chunks: list[Chunk], template: PromptTemplate) -> list[DatasetRow]:
    """One raw row per chunk; the rendered text is the chunk text itself."""
    rows = []
    for chunk in chunks:
        row = _raw_row(chunk.text, template)
        row.tokens = tuple(chunk.tokens)
        rows.append(row)
    return rows


def recipe_keyword(
    chunks: list[Chunk],
    rake_config: RakeConfig,
    template: PromptTemplate,
    report: RecipeReport | None = None,
) -> list[DatasetRow]:
    """Instruction = top keyword phrases of the chunk, joined with commas."""
    report = report if report is not None else RecipeReport()
    rows = []
    for index, chunk in enumerate(chunks):
        phrases = extract_keywords(chunk.text, rake_config)
        if not phrases:
            report.add(f"chunk {index}", "no keyword phrases; fell back to raw row")
            rows.append(_raw_row(chunk.text, template, recipe="keyword"))
            continue
        rows.append(
            _instruction_row("keyword", keyword_instruction(phrases), chunk.text, template)
        )
    return rows


def heading_instruction(block: Block) -> str:
    return " > ".join(title for _, title in block.heading_path)


def recipe_heading(
    doc: Document,
    template: PromptTemplate,
    model: TokenizerModel | None = None,
    response_budget: int | None = None,
    report: RecipeReport | None = None,
) -> list[DatasetRow]:
    """Instruction = the block's heading trail joined with " > ".

    With a tokenizer and budget, oversized blocks are pre-split into windows
    and each piece repeats the same instruction.  Headingless blocks fall
    back to raw rows.
    """
    report = report if report is not None else RecipeReport()
    rows: list[DatasetRow] = []
    for index, block in enumerate(doc.blocks):
        pieces = [block.text]
        if model is not None and response_budget is not None:
            if count_tokens(model, block.text) > response_budget:
                sub_doc = Document(doc_id=doc.doc_id, source_path="", blocks=[Block([], block.text)])
                spec = ChunkSpec(chunk_tokens=response_budget, overlap_tokens=0)
                pieces = [c.text for c in split_chunks(sub_doc, spec, model)]
                report.add(
                    f"block {index}",
                    f"over {response_budget} tokens; split into {len(pieces)} pieces",
                )
        if not block.heading_path:
            report.add(f"block {index}", "no heading path; fell back to raw row")
            rows.extend(_raw_row(piece, template, recipe="heading") for piece in pieces)
            continue
        instruction = heading_instruction(block)
        rows.extend(
            _instruction_row("heading", instruction, piece, template) for piece in pieces
        )
    return rows


def parse_numbered_lines(text: str) -> list[str]:
    """Extract the payload of every "N. text" or "N) text" line, in order."""
    found = []
    for line in text.split("\n"):
        match = _NUMBERED_LINE_RE.match(line)
        if match:
            found.append(match.group(1))
    return found


def recipe_query(
    chunks: list[Chunk],
    client: ClientConfig,
    template: PromptTemplate,
    queries_per_chunk: int = 2,
    report: RecipeReport | None = None,
    in_flight: int = DEFAULT_IN_FLIGHT,
) -> list[DatasetRow]:
    """Ask a model for N questions per chunk; each question becomes a row.

    Questions are deduplicated by exact string within a chunk.  A chunk whose
    request fails, or whose reply contains no parsable numbered lines, is
    skipped; partial replies are kept.  Rows come out ordered by chunk index
    regardless of request concurrency.
    """
    report = report if report is not None else RecipeReport()

    def ask(chunk: Chunk) -> list[str] | LlmError:
        prompt = QUERY_USER_PROMPT.format(n=queries_per_chunk, chunk=chunk.text)
        try:
            reply = complete(client, QUERY_SYSTEM_PROMPT, prompt)
        except LlmError as exc:
            return exc
        return parse_numbered_lines(reply)

    workers = max(1, min(in_flight, len(chunks) or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(ask, chunks))

    rows: list[DatasetRow] = []
    for index, (chunk, result) in enumerate(zip(chunks, results)):
        if isinstance(result, LlmError):
            report.add(f"chunk {index}", f"request failed: {result}")
            continue
        queries: list[str] = []
        for q in result:
            if q not in queries:
                queries.append(q)
        if not queries:
            report.add(f"chunk {index}", "reply had no parsable numbered lines; skipped")
            continue
        if len(queries) < queries_per_chunk:
            report.add(
                f"chunk {index}",
                f"short reply: {len(queries)} of {queries_per_chunk} questions",
            )
        for query in queries:
            rows.append(_instruction_row("query", query, chunk.text, template))
    return rows


def query_client(base: ClientConfig, temperature: float = 0.7) -> ClientConfig:
    """Question generation samples; summaries elsewhere run deterministic."""
    return replace(base, temperature=temperature)
