"""Corpus ingestion: markdown/plain-text documents and function-level code units.

Markdown parsing is heading-aware but deliberately small: ATX headings
(``#`` through ``######``) maintain a heading path, and every maximal run of
body lines between headings becomes one Block.  Code extraction uses
per-language heuristics rather than full grammars: brace matching for Java,
indentation blocks for Python.  Files the heuristics cannot handle are
skipped and reported, never silently dropped.  Nested functions and inner
classes stay inside their parent's body and are not extracted separately.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

HEADING_RE = re.compile(r"^(#{1,6})\s+(.*?)\s*$")

LANGUAGE_EXTENSIONS = {".java": "java", ".py": "python"}


@dataclass
class Block:
    heading_path: list[tuple[int, str]]
    text: str


@dataclass
class Document:
    doc_id: str
    source_path: str
    blocks: list[Block]


@dataclass
class CodeUnit:
    qualified_name: str
    language: str
    source_path: str
    line_span: tuple[int, int]
    signature: str
    body: str
    docstring: str = ""
    leading_comments: str = ""


@dataclass
class CorpusStats:
    function_count: int = 0
    total_bytes: int = 0
    per_language: dict[str, int] = field(default_factory=dict)


@dataclass
class IngestReport:
    """Skipped files, one ``path<TAB>reason`` line each."""

    skipped: list[tuple[str, str]] = field(default_factory=list)

    def add(self, path: str, reason: str) -> None:
        self.skipped.append((path, reason))

    def lines(self) -> list[str]:
        return [f"{path}\t{reason}" for path, reason in self.skipped]


class ExtractError(ValueError):
    """A file defeated the extraction heuristic."""


# ── Markdown ─────────────────────────────────────────────────────────────────


def parse_markdown(text: str, doc_id: str, source_path: str = "") -> Document:
    """Split markdown into Blocks, one per run of body text under a heading path.

    A level-N heading pops path entries at level N or deeper, then pushes
    itself.  Body lines are kept verbatim; each run's leading and trailing
    blank lines are trimmed but interior blanks survive, so paragraph
    structure is preserved and no non-blank line is ever lost.
    """
    blocks: list[Block] = []
    path: list[tuple[int, str]] = []
    pending: list[str] = []

    def flush() -> None:
        while pending and not pending[0].strip():
            pending.pop(0)
        while pending and not pending[-1].strip():
            pending.pop()
        if pending:
            blocks.append(Block(heading_path=list(path), text="\n".join(pending)))
        pending.clear()

    for line in text.split("\n"):
        match = HEADING_RE.match(line)
        if match:
            flush()
            level = len(match.group(1))
            while path and path[-1][0] >= level:
                path.pop()
            path.append((level, match.group(2)))
        else:
            pending.append(line)
    flush()
    return Document(doc_id=doc_id, source_path=source_path, blocks=blocks)


def parse_plain_text(text: str, doc_id: str, source_path: str = "") -> Document:
    """Whole file as a single block with an empty heading path."""
    stripped = text.strip("\n")
    blocks = [Block(heading_path=[], text=stripped)] if stripped.strip() else []
    return Document(doc_id=doc_id, source_path=source_path, blocks=blocks)


def ingest_documents(root: str | Path, report: IngestReport | None = None) -> list[Document]:
    """Parse every .md and .txt file under root, in lexicographic path order."""
    root = Path(root)
    report = report if report is not None else IngestReport()
    documents: list[Document] = []
    for path in walk_files(root, suffixes={".md", ".txt"}):
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            report.add(rel, "not valid UTF-8")
            continue
        except OSError as exc:
            report.add(rel, f"unreadable: {exc.strerror}")
            continue
        if path.suffix == ".md":
            documents.append(parse_markdown(text, doc_id=rel, source_path=str(path)))
        else:
            documents.append(parse_plain_text(text, doc_id=rel, source_path=str(path)))
    return documents


def walk_files(root: Path, suffixes: set[str] | None = None) -> list[Path]:
    """Regular files under root in lexicographic relative-path order.

    Hidden files and directories (".git" and friends) never enter the corpus.
    """
    found = []
    for path in root.rglob("*"):
        if any(part.startswith(".") for part in path.relative_to(root).parts):
            continue
        if not path.is_file():
            continue
        if suffixes is not None and path.suffix not in suffixes:
            continue
        found.append(path)
    return sorted(found, key=lambda p: p.relative_to(root).as_posix())


# ── Java extraction ──────────────────────────────────────────────────────────

JAVA_KEYWORDS = {
    "if", "else", "for", "while", "do", "switch", "catch", "try",
    "return", "new", "synchronized", "finally", "throw", "assert",
}

_METHOD_RE = re.compile(
    r"^\s*(?:(?:public|private|protected|static|final|abstract|native|default|synchronized)\s+)*"
    r"(?:[\w$]+(?:\s*<[^>]*>)?(?:\[\])*\s+)+"
    r"([\w$]+)\s*\("
)
_CONSTRUCTOR_RE = re.compile(r"^\s*(?:(?:public|private|protected)\s+)?([A-Z][\w$]*)\s*\(")
_CLASS_RE = re.compile(r"^\s*(?:\w+\s+)*(?:class|interface|enum)\s+([\w$]+)")


def _mask_java(source: str) -> str:
    """Blank out comments and string/char literals, preserving line structure.

    Brace counting and signature regexes run on the masked text so braces
    inside literals or comments cannot unbalance the scan.
    """
    out: list[str] = []
    i = 0
    n = len(source)
    state = "code"
    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if state == "code":
            if ch == "/" and nxt == "/":
                state, step, text = "line_comment", 2, "  "
            elif ch == "/" and nxt == "*":
                state, step, text = "block_comment", 2, "  "
            elif ch == '"':
                state, step, text = "string", 1, " "
            elif ch == "'":
                state, step, text = "char", 1, " "
            else:
                step, text = 1, ch
        elif state == "line_comment":
            if ch == "\n":
                state, step, text = "code", 1, "\n"
            else:
                step, text = 1, " "
        elif state == "block_comment":
            if ch == "*" and nxt == "/":
                state, step, text = "code", 2, "  "
            else:
                step, text = 1, ("\n" if ch == "\n" else " ")
        elif state == "string":
            if ch == "\\":
                step, text = 2, "  "
            elif ch == '"':
                state, step, text = "code", 1, " "
            else:
                step, text = 1, ("\n" if ch == "\n" else " ")
        else:  # char literal
            if ch == "\\":
                step, text = 2, "  "
            elif ch == "'":
                state, step, text = "code", 1, " "
            else:
                step, text = 1, " "
        out.append(text)
        i += step
    if state in ("block_comment", "string", "char"):
        raise ExtractError(f"unterminated {state.replace('_', ' ')}")
    return "".join(out)


def _java_doc_comment(lines: list[str], above: int) -> str:
    """Collect a /** */ comment that ends directly above line index ``above``."""
    i = above - 1
    while i >= 0 and not lines[i].strip():
        i -= 1
    if i < 0 or not lines[i].strip().endswith("*/"):
        return ""
    end = i
    while i >= 0 and not lines[i].lstrip().startswith("/**"):
        i -= 1
    if i < 0:
        return ""
    cleaned = []
    for raw in lines[i : end + 1]:
        line = raw.strip()
        line = re.sub(r"^/\*\*", "", line)
        line = re.sub(r"\*/$", "", line)
        line = re.sub(r"^\*\s?", "", line)
        if line.strip():
            cleaned.append(line.strip())
    return "\n".join(cleaned)


def _leading_line_comments(lines: list[str], above: int, marker: str) -> str:
    collected: list[str] = []
    i = above - 1
    while i >= 0 and lines[i].strip().startswith(marker):
        collected.append(lines[i].strip()[len(marker):].strip())
        i -= 1
    collected.reverse()
    return "\n".join(collected)


def extract_java_units(source: str, rel_path: str) -> list[CodeUnit]:
    """One CodeUnit per method (or constructor) of each top-level class.

    Methods are detected at brace depth 1 inside a top-level class; inner
    classes therefore keep their methods inside the outer text.
    """
    masked = _mask_java(source)
    lines = source.split("\n")
    masked_lines = masked.split("\n")

    units: list[CodeUnit] = []
    depth = 0
    current_class: str | None = None
    method_start: int | None = None
    method_name = ""
    method_sig = ""
    seen_brace = False

    for idx, mline in enumerate(masked_lines):
        depth_start = depth
        opens = mline.count("{")
        closes = mline.count("}")
        depth += opens - closes
        if depth < 0:
            raise ExtractError(f"unbalanced braces near line {idx + 1}")

        if current_class is None and depth_start == 0:
            cm = _CLASS_RE.match(mline)
            if cm:
                current_class = cm.group(1)
                continue

        if current_class is not None and method_start is None and depth_start == 1:
            stripped = mline.strip()
            if stripped and not _CLASS_RE.match(mline):
                name = None
                mm = _METHOD_RE.match(mline)
                if mm and mm.group(1) not in JAVA_KEYWORDS:
                    name = mm.group(1)
                else:
                    cm = _CONSTRUCTOR_RE.match(mline)
                    if cm and cm.group(1) == current_class:
                        name = cm.group(1)
                if name:
                    method_start = idx
                    method_name = name
                    seen_brace = False

        if method_start is not None:
            if opens:
                seen_brace = True
            if not seen_brace and ";" in mline:
                method_start = None  # abstract or interface signature, no body
            elif seen_brace and depth == 1:
                if not method_sig:
                    sig_source = " ".join(
                        l.strip() for l in lines[method_start : idx + 1]
                    )
                    method_sig = sig_source.split("{")[0].strip()
                body = "\n".join(lines[method_start : idx + 1])
                units.append(
                    CodeUnit(
                        qualified_name=f"{current_class}.{method_name}",
                        language="java",
                        source_path=rel_path,
                        line_span=(method_start + 1, idx + 1),
                        signature=method_sig,
                        body=body,
                        docstring=_java_doc_comment(lines, method_start),
                        leading_comments=_leading_line_comments(lines, method_start, "//"),
                    )
                )
                method_start = None
                method_sig = ""

        if current_class is not None and depth == 0 and depth_start > 0:
            current_class = None

    if depth != 0:
        raise ExtractError("unbalanced braces at end of file")
    return units


# ── Python extraction ────────────────────────────────────────────────────────

_DEF_RE = re.compile(r"^(\s*)(?:async\s+)?def\s+([\w]+)\s*\(")
_PY_CLASS_RE = re.compile(r"^class\s+([\w]+)")


def _indent_of(line: str) -> int:
    return len(line) - len(line.lstrip())


def _strip_py_comment(line: str) -> str:
    # Good enough for signature lines: a '#' inside quotes is rare there.
    quote: str | None = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def _signature_end(lines: list[str], start: int) -> int:
    """Index of the line that closes the def signature with a ':'."""
    depth = 0
    for i in range(start, len(lines)):
        code = _strip_py_comment(lines[i])
        depth += code.count("(") + code.count("[") - code.count(")") - code.count("]")
        if depth <= 0 and code.rstrip().endswith(":"):
            return i
    raise ExtractError(f"signature starting at line {start + 1} never closes")


def _block_end(lines: list[str], after: int, indent: int) -> int:
    """Last non-blank line of the indented block following ``after``."""
    end = after
    for i in range(after + 1, len(lines)):
        if not lines[i].strip():
            continue
        if _indent_of(lines[i]) <= indent:
            break
        end = i
    return end


def _python_docstring(lines: list[str], sig_end: int, indent: int) -> str:
    i = sig_end + 1
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i >= len(lines) or _indent_of(lines[i]) <= indent:
        return ""
    stripped = lines[i].strip()
    match = re.match(r"^[rRbBuU]{0,2}(\"\"\"|''')", stripped)
    if not match:
        return ""
    quote = match.group(1)
    inner = stripped[stripped.index(quote) + 3 :]
    if inner.endswith(quote) and len(inner) >= 3:
        return inner[:-3].strip()
    if inner.endswith(quote):
        return inner[:-3].strip()
    parts = [inner]
    for j in range(i + 1, len(lines)):
        text = lines[j]
        if quote in text:
            parts.append(text[: text.index(quote)].strip())
            break
        parts.append(text.strip())
    return "\n".join(p for p in parts if p).strip()


def _python_leading_comments(lines: list[str], start: int) -> str:
    i = start - 1
    while i >= 0 and lines[i].strip().startswith("@"):
        i -= 1  # decorators sit between comments and the def line
    return _leading_line_comments(lines, i + 1, "#")


def _take_python_function(
    lines: list[str], start: int, rel_path: str, qualifier: str | None
) -> tuple[CodeUnit, int]:
    match = _DEF_RE.match(lines[start])
    assert match is not None
    indent = len(match.group(1))
    name = match.group(2)
    sig_end = _signature_end(lines, start)
    end = _block_end(lines, sig_end, indent)
    signature = " ".join(l.strip() for l in lines[start : sig_end + 1]).rstrip(":").strip()
    qualified = f"{qualifier}.{name}" if qualifier else name
    unit = CodeUnit(
        qualified_name=qualified,
        language="python",
        source_path=rel_path,
        line_span=(start + 1, end + 1),
        signature=signature,
        body="\n".join(lines[start : end + 1]),
        docstring=_python_docstring(lines, sig_end, indent),
        leading_comments=_python_leading_comments(lines, start),
    )
    return unit, end


def extract_python_units(source: str, rel_path: str) -> list[CodeUnit]:
    """Top-level functions plus methods of top-level classes, by indentation.

    A def nested inside another def stays in its parent's body.
    """
    lines = source.split("\n")
    units: list[CodeUnit] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.strip() or _indent_of(line) != 0:
            i += 1
            continue
        if _DEF_RE.match(line):
            unit, end = _take_python_function(lines, i, rel_path, qualifier=None)
            units.append(unit)
            i = end + 1
            continue
        cls = _PY_CLASS_RE.match(line)
        if cls:
            class_end = _block_end(lines, i, 0)
            method_indent = None
            j = i + 1
            while j <= class_end:
                body_line = lines[j]
                if body_line.strip():
                    if method_indent is None:
                        method_indent = _indent_of(body_line)
                    if _indent_of(body_line) == method_indent and _DEF_RE.match(body_line):
                        unit, end = _take_python_function(
                            lines, j, rel_path, qualifier=cls.group(1)
                        )
                        units.append(unit)
                        j = end + 1
                        continue
                j += 1
            i = class_end + 1
            continue
        i += 1
    return units


# ── Repository walk and stats ────────────────────────────────────────────────

_EXTRACTORS = {"java": extract_java_units, "python": extract_python_units}


def extract_code_units(
    repo_root: str | Path,
    languages: tuple[str, ...] = ("java", "python"),
    report: IngestReport | None = None,
) -> list[CodeUnit]:
    """Extract function-level units from a repository, lexicographic path order."""
    root = Path(repo_root)
    report = report if report is not None else IngestReport()
    wanted = {ext for ext, lang in LANGUAGE_EXTENSIONS.items() if lang in languages}
    units: list[CodeUnit] = []
    for path in walk_files(root, suffixes=wanted):
        rel = path.relative_to(root).as_posix()
        language = LANGUAGE_EXTENSIONS[path.suffix]
        try:
            source = path.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            report.add(rel, "not valid UTF-8")
            continue
        except OSError as exc:
            report.add(rel, f"unreadable: {exc.strerror}")
            continue
        try:
            units.extend(_EXTRACTORS[language](source, rel))
        except ExtractError as exc:
            report.add(rel, str(exc))
    return units


def corpus_stats(units: list[CodeUnit]) -> CorpusStats:
    stats = CorpusStats()
    for unit in units:
        stats.function_count += 1
        stats.total_bytes += len(unit.body.encode("utf-8"))
        stats.per_language[unit.language] = stats.per_language.get(unit.language, 0) + 1
    return stats
