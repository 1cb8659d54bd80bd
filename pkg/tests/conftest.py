from __future__ import annotations

import pathlib
from importlib import resources

import pytest

from tunesmith.tokenizer import SpecialTokens, TokenizerModel, load_tokenizer

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

# The shipped fixture model has ids 0..355; specials sit just past the vocab.
FIXTURE_SPECIALS = SpecialTokens(pad_id=356, unk_id=356, bos_id=357, eos_id=358)


def fixture_tokenizer_paths() -> tuple[str, str]:
    data = resources.files("tunesmith") / "data"
    return str(data / "fixture_vocab.txt"), str(data / "fixture_merges.txt")


@pytest.fixture(scope="session")
def model() -> TokenizerModel:
    vocab_path, merges_path = fixture_tokenizer_paths()
    return load_tokenizer(vocab_path, merges_path, FIXTURE_SPECIALS)


@pytest.fixture(scope="session")
def byte_model(tmp_path_factory) -> TokenizerModel:
    """Full byte vocab with no merges: one token per input byte."""
    from tunesmith.tokenizer import _byte_to_char

    tmp = tmp_path_factory.mktemp("bytemodel")
    table = _byte_to_char()
    vocab = tmp / "vocab.txt"
    vocab.write_text(
        "".join(f"{table[b]}\t{b}\n" for b in range(256)), encoding="utf-8"
    )
    merges = tmp / "merges.txt"
    merges.write_text("", encoding="utf-8")
    return load_tokenizer(str(vocab), str(merges), SpecialTokens(256, 256, 257, 258))


@pytest.fixture(scope="session")
def pad_zero_model(tmp_path_factory) -> TokenizerModel:
    """Tiny model whose pad id is 0, for hand-checked row layout examples."""
    tmp = tmp_path_factory.mktemp("padzero")
    (tmp / "vocab.txt").write_text("a\t0\n", encoding="utf-8")
    (tmp / "merges.txt").write_text("", encoding="utf-8")
    return load_tokenizer(
        str(tmp / "vocab.txt"), str(tmp / "merges.txt"), SpecialTokens(0, 0, 998, 999)
    )


@pytest.fixture()
def toy_model(tmp_path: pathlib.Path) -> TokenizerModel:
    """Four-token model: two byte tokens, one merge, one unknown slot."""
    vocab = tmp_path / "vocab.txt"
    vocab.write_text("a\t0\nb\t1\nab\t2\n<unk>\t3\n", encoding="utf-8")
    merges = tmp_path / "merges.txt"
    merges.write_text("a b\n", encoding="utf-8")
    special = SpecialTokens(pad_id=3, unk_id=3, bos_id=4, eos_id=5)
    return load_tokenizer(str(vocab), str(merges), special)
