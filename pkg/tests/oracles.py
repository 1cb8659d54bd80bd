"""Independent reference implementations used only to cross-check the package.

Each oracle deliberately uses a different algorithm or data structure than
the production code: the BPE encoder merges by repeatedly picking the
lowest-priority pair present anywhere in the sequence, the keyword scorer
builds an explicit co-occurrence matrix, and the planner oracles count by
brute-force simulation instead of closed-form arithmetic.
"""

from __future__ import annotations

import collections
import math
import re
from fractions import Fraction


def bpe_encode_reference(
    byte_units: list[str],
    merges: list[tuple[str, str]],
    vocab: dict[str, int],
    unk_id: int,
) -> list[int]:
    """Encode by always applying the best-ranked pair present in the sequence."""
    rank = {pair: i for i, pair in enumerate(merges)}
    units = list(byte_units)
    while len(units) > 1:
        best_rank = None
        for a, b in zip(units, units[1:]):
            r = rank.get((a, b))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
        if best_rank is None:
            break
        left, right = merges[best_rank]
        out: list[str] = []
        i = 0
        while i < len(units):
            if i + 1 < len(units) and units[i] == left and units[i + 1] == right:
                out.append(left + right)
                i += 2
            else:
                out.append(units[i])
                i += 1
        units = out
    return [vocab.get(u, unk_id) for u in units]


def rake_reference(
    text: str,
    stopwords: set[str],
    delimiters: str,
    top_k: int,
) -> list[tuple[str, Fraction]]:
    """Score phrases through an explicit word co-occurrence matrix.

    Line breaks end a candidate phrase just like punctuation delimiters do.
    """
    fragments = re.split("[" + re.escape(delimiters) + "\n\r\t]", text.lower())
    phrases: list[list[str]] = []
    for fragment in fragments:
        current: list[str] = []
        for word in fragment.split():
            if word in stopwords:
                if current:
                    phrases.append(current)
                current = []
            else:
                current.append(word)
        if current:
            phrases.append(current)

    cooccur: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    for phrase in phrases:
        for w in phrase:
            for v in phrase:
                cooccur[w][v] += 1
    degree = {w: sum(row.values()) for w, row in cooccur.items()}
    freq: collections.Counter = collections.Counter(w for phrase in phrases for w in phrase)

    scored: list[tuple[str, Fraction]] = []
    seen_order: dict[str, int] = {}
    for idx, phrase in enumerate(phrases):
        key = " ".join(phrase)
        score = sum((Fraction(degree[w], freq[w]) for w in phrase), Fraction(0))
        if key not in seen_order:
            seen_order[key] = idx
            scored.append((key, score))
    scored.sort(key=lambda item: (-item[1], seen_order[item[0]]))
    return scored[:top_k]


def lora_params_bruteforce(layers: int, modules: list[tuple[int, int]], rank: int) -> int:
    """Count adapter weights one matrix at a time."""
    total = 0
    for _ in range(layers):
        for d_out, d_in in modules:
            a_matrix = rank * d_in
            b_matrix = d_out * rank
            total += a_matrix + b_matrix
    return total


def step_count_bruteforce(rows: int, batch: int, accum: int, epochs: int) -> int:
    """Simulate the training loop and count optimizer steps."""
    steps = 0
    for _ in range(epochs):
        remaining = rows
        pending = 0
        while remaining > 0:
            consumed = min(batch, remaining)
            remaining -= consumed
            pending += 1
            if pending == accum:
                steps += 1
                pending = 0
        if pending:
            steps += 1
    return steps


def chunk_count_formula(total_tokens: int, chunk: int, overlap: int) -> int:
    """Closed-form window count used to cross-check the splitter."""
    if total_tokens == 0:
        return 0
    if total_tokens <= chunk:
        return 1
    stride = chunk - overlap
    return math.ceil((total_tokens - chunk) / stride) + 1
