"""Unsupervised keyword extraction for building instruction strings.

Candidate phrases are maximal runs of non-stopword words between stopwords
and punctuation delimiters.  Each word scores degree/frequency, where degree
sums the lengths of every candidate occurrence containing the word; a phrase
scores the sum of its word scores.  Scores are exact rationals so equal
phrases compare equal regardless of summation order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

DEFAULT_DELIMITERS = ".,;:!?()[]{}\"'`/\\|<>@#$%^&*_~=+–—…"
DEFAULT_TOP_K = 5


def load_default_stopwords() -> frozenset[str]:
    text = (resources.files("tunesmith") / "data" / "smart_stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path: str) -> frozenset[str]:
    """Read one stopword per line; blank lines are ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


@dataclass(frozen=True)
class RakeConfig:
    stopwords: frozenset[str] = field(default_factory=load_default_stopwords)
    phrase_delimiters: str = DEFAULT_DELIMITERS
    top_k: int = DEFAULT_TOP_K
    min_phrase_chars: int = 1


@dataclass(frozen=True)
class ScoredPhrase:
    text: str
    score: Fraction


def _candidate_phrases(text: str, config: RakeConfig) -> list[list[str]]:
    fragments = re.split("[" + re.escape(config.phrase_delimiters) + "\n\r\t]", text.lower())
    phrases: list[list[str]] = []
    for fragment in fragments:
        run: list[str] = []
        for word in fragment.split():
            if word in config.stopwords:
                if run:
                    phrases.append(run)
                run = []
            else:
                run.append(word)
        if run:
            phrases.append(run)
    return phrases


def extract_keywords(text: str, config: RakeConfig | None = None) -> list[ScoredPhrase]:
    """Return the top phrases, highest score first, ties by first occurrence."""
    config = config or RakeConfig()
    phrases = _candidate_phrases(text, config)

    freq: dict[str, int] = {}
    degree: dict[str, int] = {}
    for phrase in phrases:
        length = len(phrase)
        for word in phrase:
            freq[word] = freq.get(word, 0) + 1
            degree[word] = degree.get(word, 0) + length

    first_seen: dict[str, int] = {}
    scores: dict[str, Fraction] = {}
    for index, phrase in enumerate(phrases):
        key = " ".join(phrase)
        if len(key) < config.min_phrase_chars or key in first_seen:
            continue
        first_seen[key] = index
        scores[key] = sum((Fraction(degree[w], freq[w]) for w in phrase), Fraction(0))

    ranked = sorted(scores, key=lambda key: (-scores[key], first_seen[key]))
    return [ScoredPhrase(key, scores[key]) for key in ranked[: config.top_k]]


def keyword_instruction(phrases: list[ScoredPhrase]) -> str:
    """Join phrase texts into the instruction string used by the keyword recipe."""
    return ", ".join(p.text for p in phrases)
