"""Dataset rows, prompt templates, and recipe reports shared by all recipes."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

RECIPES = (
    "raw",
    "keyword",
    "heading",
    "query",
    "code_summary",
    "code_metadata",
    "code_tokenized",
)

WITHOUT_CONTEXT_TEMPLATE = (
    "Below is an instruction that describes a task. "
    "Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n{instruction}\n\n### Response:\n{response}"
)
WITH_CONTEXT_TEMPLATE = (
    "Below is an instruction that describes a task, paired with an input that "
    "provides further context. "
    "Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n{instruction}\n\n### Input:\n{context}\n\n### Response:\n{response}"
)
RAW_TEMPLATE = "{response}"


@dataclass
class DatasetRow:
    recipe: str
    response: str
    rendered: str
    instruction: str | None = None
    context: str | None = None
    # Response token ids when the recipe produced them directly.  Windows cut
    # from a token stream may contain separator tokens that plain text cannot
    # round-trip, so downstream tokenization must prefer these over re-encoding.
    tokens: tuple[int, ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown recipe {self.recipe!r}; expected one of {RECIPES}")


class TemplateError(ValueError):
    pass


_SLOT_RE = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """The three row formats: instruction+context, instruction only, and raw.

    Each format must mention each of its slots exactly once so that rendering
    is invertible.
    """

    with_context: str = WITH_CONTEXT_TEMPLATE
    without_context: str = WITHOUT_CONTEXT_TEMPLATE
    raw: str = RAW_TEMPLATE

    def __post_init__(self) -> None:
        expected = {
            "with_context": ["instruction", "context", "response"],
            "without_context": ["instruction", "response"],
            "raw": ["response"],
        }
        for name, slots in expected.items():
            text = getattr(self, name)
            found = _SLOT_RE.findall(text)
            if sorted(found) != sorted(slots):
                raise TemplateError(
                    f"{name} format must use slots {slots} exactly once each, found {found}"
                )

    def format_for(self, instruction: str | None, context: str | None) -> str:
        if instruction is None:
            return self.raw
        return self.without_context if context is None else self.with_context

    def render(self, instruction: str | None, context: str | None, response: str) -> str:
        fmt = self.format_for(instruction, context)
        return fmt.format(instruction=instruction, context=context, response=response)

    def render_parts(
        self, instruction: str | None, context: str | None, response: str
    ) -> tuple[str, str]:
        """The rendered text split where the response begins.

        The first piece is what the loss mask hides; concatenating the two
        pieces gives exactly ``render(...)``.
        """
        fmt = self.format_for(instruction, context)
        prefix_fmt, suffix_fmt = fmt.split("{response}")
        prefix = prefix_fmt.format(instruction=instruction, context=context)
        suffix = suffix_fmt.format(instruction=instruction, context=context)
        return prefix, response + suffix

    def parse(self, rendered: str) -> tuple[str | None, str | None, str]:
        """Recover (instruction, context, response) from rendered text.

        Tries the most specific format first.  Exact inverse of render for
        content that does not itself contain the format's literal markers.
        """
        for fmt, has_instruction, has_context in (
            (self.with_context, True, True),
            (self.without_context, True, False),
            (self.raw, False, False),
        ):
            pattern = _format_to_regex(fmt)
            match = pattern.fullmatch(rendered)
            if match:
                groups = match.groupdict()
                return (
                    groups.get("instruction") if has_instruction else None,
                    groups.get("context") if has_context else None,
                    groups["response"],
                )
        raise TemplateError("rendered text does not match any configured format")


def _format_to_regex(fmt: str) -> re.Pattern[str]:
    parts = _SLOT_RE.split(fmt)
    pieces = []
    for i, part in enumerate(parts):
        if i % 2 == 0:
            pieces.append(re.escape(part))
        elif part == "response":
            pieces.append(f"(?P<{part}>.*)")
        else:
            pieces.append(f"(?P<{part}>.*?)")
    return re.compile("".join(pieces), re.DOTALL)


@dataclass
class RecipeReport:
    """Fallbacks, skips, and shortfalls as ``where<TAB>what`` lines."""

    events: list[tuple[str, str]] = field(default_factory=list)

    def add(self, where: str, what: str) -> None:
        self.events.append((where, what))

    def lines(self) -> list[str]:
        return [f"{where}\t{what}" for where, what in self.events]

    def count(self, what_prefix: str) -> int:
        return sum(1 for _, what in self.events if what.startswith(what_prefix))
