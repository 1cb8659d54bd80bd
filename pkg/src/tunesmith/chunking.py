"""Token-window chunking, order-preserving row packing, and loss masking.

split_chunks slides a fixed window over a document's token stream with a
configurable overlap and keeps the final partial window, so every token is
covered.  pack_rows greedily appends whole items to a row until the budget
would overflow; it never reorders and never splits an item.  build_example
lays out one training row: prompt tokens are masked out of the loss with the
-100 ignore label, padding uses the pad id and is masked in both labels and
attention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ingest import Document
from .tokenizer import IGNORE_LABEL, TokenizerModel, decode, encode


class RowOverflowError(ValueError):
    """An item or prompt/response pair does not fit its token budget."""


@dataclass(frozen=True)
class ChunkSpec:
    chunk_tokens: int = 512
    overlap_tokens: int = 64

    def __post_init__(self) -> None:
        if self.chunk_tokens <= 0:
            raise ValueError(f"chunk_tokens must be positive, got {self.chunk_tokens}")
        if not 0 <= self.overlap_tokens < self.chunk_tokens:
            raise ValueError(
                f"overlap_tokens must satisfy 0 <= overlap < chunk_tokens, "
                f"got overlap {self.overlap_tokens} for chunk {self.chunk_tokens}"
            )

    @property
    def stride(self) -> int:
        return self.chunk_tokens - self.overlap_tokens


@dataclass
class Chunk:
    text: str
    token_count: int
    source: tuple[str, tuple[int, ...]]  # (doc_id, contributing block indexes)
    tokens: list[int] = field(default_factory=list, repr=False)


def document_token_runs(doc: Document, model: TokenizerModel) -> list[list[int]]:
    """Per-block token runs; blocks are glued with a blank line between them."""
    runs = []
    last = len(doc.blocks) - 1
    for i, block in enumerate(doc.blocks):
        text = block.text if i == last else block.text + "\n\n"
        runs.append(encode(model, text, add_bos=False))
    return runs


def split_chunks(doc: Document, spec: ChunkSpec, model: TokenizerModel) -> list[Chunk]:
    """Sliding token windows over the document; the final partial window is kept."""
    runs = document_token_runs(doc, model)
    stream: list[int] = [t for run in runs for t in run]
    total = len(stream)
    if total == 0:
        return []

    # block_edges[i] = first stream index past block i
    block_edges: list[int] = []
    offset = 0
    for run in runs:
        offset += len(run)
        block_edges.append(offset)

    chunks: list[Chunk] = []
    start = 0
    while True:
        end = min(start + spec.chunk_tokens, total)
        window = stream[start:end]
        blocks = tuple(
            i
            for i, edge in enumerate(block_edges)
            if (edge - len(runs[i])) < end and edge > start
        )
        chunks.append(
            Chunk(
                text=decode(model, window),
                token_count=len(window),
                source=(doc.doc_id, blocks),
                tokens=window,
            )
        )
        if start + spec.chunk_tokens >= total:
            break
        start += spec.stride
    return chunks


@dataclass
class PackedRow:
    texts: list[str]
    token_count: int  # item tokens plus one separator between adjacent items


def pack_rows(
    items: list[tuple[str, int]], budget: int, separator_cost: int = 1
) -> list[PackedRow]:
    """Greedy in-order packing: append while the row stays within budget.

    Items are never reordered or split; an item alone exceeding the budget is
    an error because callers are expected to pre-split oversized text.
    """
    rows: list[PackedRow] = []
    current: list[str] = []
    used = 0
    for index, (text, count) in enumerate(items):
        if count > budget:
            raise RowOverflowError(
                f"item {index} is {count} tokens, over the packing budget of {budget}; "
                "pre-split oversized items before packing"
            )
        added = count if not current else count + separator_cost
        if current and used + added > budget:
            rows.append(PackedRow(texts=current, token_count=used))
            current = [text]
            used = count
        else:
            current.append(text)
            used += added
    if current:
        rows.append(PackedRow(texts=current, token_count=used))
    return rows


@dataclass
class TokenizedExample:
    input_ids: list[int]
    labels: list[int]
    attention_mask: list[int]
    prompt_len: int


def build_example(
    prompt_ids: list[int],
    response_ids: list[int],
    seq_len: int,
    model: TokenizerModel,
) -> TokenizedExample:
    """Lay out one fixed-length row: prompt, response, then padding.

    Loss is computed only on response positions: prompt and padding carry the
    -100 ignore label, and attention is zero exactly on the padding.
    """
    content = len(prompt_ids) + len(response_ids)
    if content > seq_len:
        raise RowOverflowError(
            f"prompt ({len(prompt_ids)}) + response ({len(response_ids)}) = "
            f"{content} tokens exceeds seq_len {seq_len}"
        )
    pad = seq_len - content
    pad_id = model.special.pad_id
    input_ids = list(prompt_ids) + list(response_ids) + [pad_id] * pad
    labels = [IGNORE_LABEL] * len(prompt_ids) + list(response_ids) + [IGNORE_LABEL] * pad
    attention_mask = [1] * content + [0] * pad
    return TokenizedExample(
        input_ids=input_ids,
        labels=labels,
        attention_mask=attention_mask,
        prompt_len=len(prompt_ids),
    )
