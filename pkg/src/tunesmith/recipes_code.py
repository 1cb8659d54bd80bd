"""Dataset recipes for code corpora.

Three levels of supervision: model-written summaries as instructions,
existing docstrings/comments as instructions, and plain continued
pre-training windows over the whole repository.  Function bodies are never
edited; a function that cannot produce a row is excluded and reported.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .ingest import CodeUnit, IngestReport, walk_files
from .llm import ClientConfig, LlmError, complete
from .rows import DatasetRow, PromptTemplate, RecipeReport
from .tokenizer import TokenizerModel, count_tokens, decode, encode

SUMMARY_SYSTEM_PROMPT = "You describe what code does, step by step."
SUMMARY_USER_PROMPT = (
    "Summarize what the following function does as an imperative "
    "step-by-step description.\n\n{code}"
)

DEFAULT_IN_FLIGHT = 4


def recipe_code_summary(
    units: list[CodeUnit],
    client: ClientConfig,
    template: PromptTemplate,
    report: RecipeReport | None = None,
    in_flight: int = DEFAULT_IN_FLIGHT,
    model: TokenizerModel | None = None,
    response_budget: int | None = None,
) -> list[DatasetRow]:
    """Instruction = model summary of the function; response = verbatim body.

    Functions over the response budget are excluded (reported), not truncated.
    Output order follows the unit order regardless of request concurrency.
    """
    report = report if report is not None else RecipeReport()

    eligible: list[CodeUnit] = []
    for unit in units:
        if (
            model is not None
            and response_budget is not None
            and count_tokens(model, unit.body) > response_budget
        ):
            report.add(unit.qualified_name, f"body over {response_budget} tokens; excluded")
            continue
        eligible.append(unit)

    def ask(unit: CodeUnit) -> str | LlmError:
        try:
            return complete(
                client, SUMMARY_SYSTEM_PROMPT, SUMMARY_USER_PROMPT.format(code=unit.body)
            )
        except LlmError as exc:
            return exc

    workers = max(1, min(in_flight, len(eligible) or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(ask, eligible))

    rows: list[DatasetRow] = []
    for unit, result in zip(eligible, results):
        if isinstance(result, LlmError):
            report.add(unit.qualified_name, f"request failed: {result}")
            continue
        summary = result.strip()
        if not summary:
            report.add(unit.qualified_name, "empty summary; skipped")
            continue
        rows.append(
            DatasetRow(
                recipe="code_summary",
                instruction=summary,
                response=unit.body,
                rendered=template.render(summary, None, unit.body),
            )
        )
    return rows


def recipe_code_metadata(
    units: list[CodeUnit],
    template: PromptTemplate,
    report: RecipeReport | None = None,
) -> list[DatasetRow]:
    """Instruction = the unit's docstring, else its leading comments.

    Undocumented functions are excluded and counted in the report.
    """
    report = report if report is not None else RecipeReport()
    rows: list[DatasetRow] = []
    for unit in units:
        instruction = unit.docstring or unit.leading_comments
        if not instruction:
            report.add(unit.qualified_name, "no docstring or leading comments; excluded")
            continue
        rows.append(
            DatasetRow(
                recipe="code_metadata",
                instruction=instruction,
                response=unit.body,
                rendered=template.render(instruction, None, unit.body),
            )
        )
    return rows


def recipe_code_tokenized(
    repo_root: str | Path,
    model: TokenizerModel,
    seq_len: int,
    template: PromptTemplate,
    report: IngestReport | None = None,
) -> list[DatasetRow]:
    """Continued pre-training windows over every readable file in the repo.

    All files regardless of extension are concatenated in lexicographic path
    order with one end-of-sequence token between files, then sliced into
    consecutive windows of seq_len tokens (no overlap; final short window
    kept).  Unreadable files are skipped and reported.
    """
    if seq_len <= 0:
        raise ValueError(f"seq_len must be positive, got {seq_len}")
    report = report if report is not None else IngestReport()
    root = Path(repo_root)

    stream: list[int] = []
    first = True
    for path in walk_files(root):
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            report.add(rel, "not valid UTF-8")
            continue
        except OSError as exc:
            report.add(rel, f"unreadable: {exc.strerror}")
            continue
        if not first:
            stream.append(model.special.eos_id)
        stream.extend(encode(model, text, add_bos=False))
        first = False

    rows: list[DatasetRow] = []
    for start in range(0, len(stream), seq_len):
        window = stream[start : start + seq_len]
        text = decode(model, window)
        rows.append(
            DatasetRow(
                recipe="code_tokenized",
                response=text,
                rendered=template.render(None, None, text),
                tokens=tuple(window),
            )
        )
    return rows
