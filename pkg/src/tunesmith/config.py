"""Plain-text key=value settings shared by the CLI commands.

A config file keeps the flag surface small: templates, the stopword list,
special-token ids, and client behavior live here, while per-run choices
(paths, recipe, sequence length) stay on the command line.  The path comes
from --config or the TUNESMITH_CONFIG environment variable; with neither,
built-in defaults apply.  Values may embed newlines as the two-character
escape \\n, which template strings need.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .llm import ClientConfig
from .rake import DEFAULT_TOP_K, RakeConfig, load_default_stopwords, load_stopwords
from .rows import RAW_TEMPLATE, WITH_CONTEXT_TEMPLATE, WITHOUT_CONTEXT_TEMPLATE, PromptTemplate
from .tokenizer import SpecialTokens

ENV_VAR = "TUNESMITH_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AppConfig:
    template_with_context: str = WITH_CONTEXT_TEMPLATE
    template_without_context: str = WITHOUT_CONTEXT_TEMPLATE
    template_raw: str = RAW_TEMPLATE
    stopwords_path: str = ""
    # Ids match the packaged tokenizer files: 256 byte tokens plus 100 merges,
    # with pad/unk sharing the first id past the vocabulary.
    pad_id: int = 356
    unk_id: int = 356
    bos_id: int = 357
    eos_id: int = 358
    add_bos: bool = True
    add_eos: bool = True
    chunk_tokens: int = 512
    overlap_tokens: int = 64
    top_k: int = DEFAULT_TOP_K
    queries_per_chunk: int = 2
    in_flight: int = 4
    api_key_env: str = "TUNESMITH_API_KEY"
    model_name: str = "default"
    max_retries: int = 3
    timeout_seconds: float = 30.0
    backoff_seconds: float = 0.25
    temperature_query: float = 0.7
    temperature_summary: float = 0.0

    def template(self) -> PromptTemplate:
        return PromptTemplate(
            with_context=self.template_with_context,
            without_context=self.template_without_context,
            raw=self.template_raw,
        )

    def special_tokens(self) -> SpecialTokens:
        return SpecialTokens(
            pad_id=self.pad_id, unk_id=self.unk_id, bos_id=self.bos_id, eos_id=self.eos_id
        )

    def rake_config(self) -> RakeConfig:
        if self.stopwords_path:
            stopwords = load_stopwords(self.stopwords_path)
        else:
            stopwords = load_default_stopwords()
        return RakeConfig(stopwords=stopwords, top_k=self.top_k)

    def client_config(self, base_url: str, temperature: float) -> ClientConfig:
        return ClientConfig(
            base_url=base_url,
            model_name=self.model_name,
            api_key_env=self.api_key_env,
            max_retries=self.max_retries,
            timeout_seconds=self.timeout_seconds,
            temperature=temperature,
            backoff_seconds=self.backoff_seconds,
        )


def _convert(key: str, raw: str, kind: type, origin: str, number: int):
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ConfigError(f"{origin}:{number}: {key} expects true or false, got {raw!r}")
    if kind is str:
        return raw.replace("\\n", "\n")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{origin}:{number}: {key} expects {kind.__name__}: {exc}") from exc


def parse_config(text: str, origin: str = "<config>") -> AppConfig:
    types = {f.name: type(f.default) for f in fields(AppConfig)}
    values: dict[str, object] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{number}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in types:
            known = ", ".join(sorted(types))
            raise ConfigError(f"{origin}:{number}: unknown key {key!r} (known: {known})")
        values[key] = _convert(key, raw, types[key], origin, number)
    try:
        return AppConfig(**values)
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc


def load_config(path: str | None = None) -> AppConfig:
    """Read settings from the given path, else $TUNESMITH_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return AppConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, origin=path)
