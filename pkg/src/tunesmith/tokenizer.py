"""Byte-level BPE tokenizer with a plain-text model format.

The model is two files: a vocab file with one ``token<TAB>id`` entry per
line, and a merges file with one ``left<SPACE>right`` pair per line in
merge-priority order.  Token strings use a fixed byte-to-unicode mapping so
that every byte (including whitespace and control bytes) has a printable,
single-character representation and the two file formats stay unambiguous.

Encoding walks the merge list once, in priority order, replacing adjacent
pairs left to right.  Decoding inverts the byte mapping; special-token ids
decode to the empty string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

IGNORE_LABEL = -100


class TokenizerError(ValueError):
    """Raised for malformed model files or undecodable ids."""


@lru_cache(maxsize=1)
def _byte_to_char() -> dict[int, str]:
    # Printable latin-1 ranges map to themselves; everything else is shifted
    # past U+0100 so no token string ever contains a tab, space, or newline.
    keep = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(0xA1, 0xAD))
        + list(range(0xAE, 0x100))
    )
    mapping: dict[int, str] = {}
    shift = 0
    for b in range(256):
        if b in keep:
            mapping[b] = chr(b)
        else:
            mapping[b] = chr(0x100 + shift)
            shift += 1
    return mapping


@lru_cache(maxsize=1)
def _char_to_byte() -> dict[str, int]:
    return {c: b for b, c in _byte_to_char().items()}


def text_to_units(text: str) -> list[str]:
    """Map text to its per-byte token strings (the pre-merge sequence)."""
    table = _byte_to_char()
    data = text.encode("utf-8", errors="surrogateescape")
    return [table[b] for b in data]


def units_to_bytes(token: str) -> bytes:
    table = _char_to_byte()
    try:
        return bytes(table[c] for c in token)
    except KeyError as exc:
        raise TokenizerError(f"token {token!r} contains unmapped character {exc.args[0]!r}")


@dataclass(frozen=True)
class SpecialTokens:
    """Special-token ids; the pad token doubles as the unknown token."""

    pad_id: int
    unk_id: int
    bos_id: int
    eos_id: int

    def __post_init__(self) -> None:
        if self.pad_id != self.unk_id:
            raise TokenizerError(
                f"pad_id ({self.pad_id}) must equal unk_id ({self.unk_id}); "
                "padding reuses the unknown token"
            )

    def all_ids(self) -> frozenset[int]:
        return frozenset((self.pad_id, self.unk_id, self.bos_id, self.eos_id))


@dataclass
class TokenizerModel:
    vocab: dict[str, int]
    merges: list[tuple[str, str]]
    special: SpecialTokens
    id_to_token: dict[int, str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.id_to_token = {i: t for t, i in self.vocab.items()}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)


def _parse_vocab(path: str) -> dict[str, int]:
    vocab: dict[str, int] = {}
    seen_ids: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TokenizerError(f"{path}:{lineno}: expected token<TAB>id, got {line!r}")
            token, id_text = parts
            try:
                token_id = int(id_text)
            except ValueError:
                raise TokenizerError(f"{path}:{lineno}: id {id_text!r} is not an integer")
            if token in vocab:
                raise TokenizerError(f"{path}:{lineno}: duplicate token {token!r}")
            if token_id in seen_ids:
                raise TokenizerError(
                    f"{path}:{lineno}: duplicate id {token_id} (first used at line {seen_ids[token_id]})"
                )
            vocab[token] = token_id
            seen_ids[token_id] = lineno
    if not vocab:
        raise TokenizerError(f"{path}: vocab file is empty")
    return vocab


def _parse_merges(path: str, vocab: dict[str, int]) -> list[tuple[str, str]]:
    merges: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise TokenizerError(f"{path}:{lineno}: expected left<SPACE>right, got {line!r}")
            left, right = parts
            if left not in vocab:
                raise TokenizerError(f"{path}:{lineno}: merge operand {left!r} not in vocab")
            if right not in vocab:
                raise TokenizerError(f"{path}:{lineno}: merge operand {right!r} not in vocab")
            if left + right not in vocab:
                raise TokenizerError(f"{path}:{lineno}: merge result {left + right!r} not in vocab")
            merges.append((left, right))
    return merges


def load_tokenizer(vocab_path: str, merges_path: str, special: SpecialTokens) -> TokenizerModel:
    """Load and validate a tokenizer model from its two files."""
    vocab = _parse_vocab(vocab_path)
    merges = _parse_merges(merges_path, vocab)
    return TokenizerModel(vocab=vocab, merges=merges, special=special)


def _apply_merges(units: list[str], merges: list[tuple[str, str]]) -> list[str]:
    for left, right in merges:
        if len(units) < 2:
            break
        merged: list[str] = []
        i = 0
        n = len(units)
        while i < n:
            if i + 1 < n and units[i] == left and units[i + 1] == right:
                merged.append(left + right)
                i += 2
            else:
                merged.append(units[i])
                i += 1
        units = merged
    return units


def encode(model: TokenizerModel, text: str, add_bos: bool = False) -> list[int]:
    """Tokenize text to ids; bytes missing from the vocab become the unknown id."""
    units = _apply_merges(text_to_units(text), model.merges)
    unk = model.special.unk_id
    ids = [model.vocab.get(u, unk) for u in units]
    if add_bos:
        ids.insert(0, model.special.bos_id)
    return ids


def decode(model: TokenizerModel, ids: list[int]) -> str:
    """Invert encode; special ids contribute nothing to the output text."""
    special = model.special.all_ids()
    chunks: list[bytes] = []
    for token_id in ids:
        if token_id in special:
            continue
        token = model.id_to_token.get(token_id)
        if token is None:
            raise TokenizerError(
                f"id {token_id} is outside the vocab (size {model.vocab_size}) and is not special"
            )
        chunks.append(units_to_bytes(token))
    return b"".join(chunks).decode("utf-8", errors="surrogateescape")


def count_tokens(model: TokenizerModel, text: str) -> int:
    return len(encode(model, text, add_bos=False))
