"""Train the small fixture tokenizer that ships with the package.

Classic BPE training over the test corpus: start from the 256 byte tokens,
repeatedly count adjacent pairs in the token stream, and merge the most
frequent pair (ties broken lexicographically so reruns are deterministic).
Run from the repo root; rewrites src/tunesmith/data/fixture_vocab.txt and
fixture_merges.txt in place.
"""

from __future__ import annotations

import collections
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tunesmith.tokenizer import _byte_to_char  # noqa: E402

REPO = pathlib.Path(__file__).resolve().parents[1]
CORPUS = [
    REPO / "tests" / "fixtures" / "docs" / "userguide.md",
    REPO / "tests" / "fixtures" / "code" / "src" / "TestCaseStore.java",
    REPO / "tests" / "fixtures" / "code" / "src" / "metrics.py",
]
OUT_DIR = REPO / "src" / "tunesmith" / "data"
MERGE_COUNT = 100


def train(stream: list[str], rounds: int) -> list[tuple[str, str]]:
    merges: list[tuple[str, str]] = []
    for _ in range(rounds):
        counts: collections.Counter[tuple[str, str]] = collections.Counter()
        for a, b in zip(stream, stream[1:]):
            counts[(a, b)] += 1
        if not counts:
            break
        top = max(counts.values())
        pair = min(p for p, n in counts.items() if n == top)
        merges.append(pair)
        merged: list[str] = []
        i = 0
        while i < len(stream):
            if i + 1 < len(stream) and (stream[i], stream[i + 1]) == pair:
                merged.append(pair[0] + pair[1])
                i += 2
            else:
                merged.append(stream[i])
                i += 1
        stream = merged
    return merges


def main() -> None:
    table = _byte_to_char()
    data = b"".join(p.read_bytes() for p in CORPUS)
    stream = [table[b] for b in data]
    merges = train(stream, MERGE_COUNT)

    vocab: dict[str, int] = {table[b]: b for b in range(256)}
    next_id = 256
    for left, right in merges:
        vocab[left + right] = next_id
        next_id += 1

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "fixture_vocab.txt", "w", encoding="utf-8") as fh:
        for token, token_id in vocab.items():
            fh.write(f"{token}\t{token_id}\n")
    with open(OUT_DIR / "fixture_merges.txt", "w", encoding="utf-8") as fh:
        for left, right in merges:
            fh.write(f"{left} {right}\n")
    print(f"wrote {len(vocab)} vocab entries and {len(merges)} merges to {OUT_DIR}")


if __name__ == "__main__":
    main()
