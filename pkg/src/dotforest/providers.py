"""Text generation and embedding providers.

One uniform contract with three pieces: an HTTP backend for OpenAI-compatible
endpoints, a deterministic offline backend whose behavior is fixed enough to
test every model-dependent operation against, and an ordered fallback chain
with retries, rate limiting, and a per-call run log.

All prompt templates ship as editable JSON files; nothing is hardcoded into
call sites beyond template names and binding keys.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import string
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import requests

from .textops import STOPWORDS, content_tokens, tokenize, trim_to_words

logger = logging.getLogger(__name__)

TEMPLATE_NAMES = ("condense", "filter", "synthesize", "narrate", "judge", "persons")

# The offline backend prefixes every synthesis/narration with this marker.
MOCK_SYNTHESIS_PREFIX = "HYPOTHESIS:"

DEFAULT_DIMENSION = 64


class ProviderError(Exception):
    """Base for everything raised by this module."""


class TemplateError(ProviderError):
    pass


class ProviderCallError(ProviderError):
    """One backend call failed (transport, bad payload, empty reply)."""


class ChainError(ProviderError):
    """Every provider in the chain was exhausted. Carries per-provider causes."""

    def __init__(self, message: str, causes: list[tuple[str, str]]):
        detail = "; ".join(f"{name}: {cause}" for name, cause in causes)
        super().__init__(f"{message} ({detail})" if detail else message)
        self.causes = causes


class EmptyReplyError(ChainError):
    """Chain exhausted and the last observed failure was an empty reply."""


# --------------------------------------------------------------- templates


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_template: str

    def placeholders(self) -> set[str]:
        formatter = string.Formatter()
        return {
            name
            for _, name, _, _ in formatter.parse(self.user_template)
            if name
        }

    def render(self, bindings: Mapping[str, object]) -> tuple[str, str]:
        missing = self.placeholders() - set(bindings)
        if missing:
            raise TemplateError(
                f"template {self.name!r} missing bindings: {sorted(missing)}"
            )
        return self.system_text, self.user_template.format_map(
            {k: str(v) for k, v in bindings.items()}
        )


def load_templates(directory: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load the six prompt templates from a directory, else packaged defaults.

    Each file is `<name>.json` with keys system and user.
    """
    templates: dict[str, PromptTemplate] = {}
    if directory is not None:
        base = Path(directory)
        for name in TEMPLATE_NAMES:
            path = base / f"{name}.json"
            if not path.is_file():
                raise TemplateError(f"template file not found: {path}")
            templates[name] = _parse_template(name, path.read_text(encoding="utf-8"))
        return templates
    package_dir = resources.files("dotforest.templates")
    for name in TEMPLATE_NAMES:
        text = (package_dir / f"{name}.json").read_text(encoding="utf-8")
        templates[name] = _parse_template(name, text)
    return templates


def _parse_template(name: str, text: str) -> PromptTemplate:
    try:
        data = json.loads(text)
        return PromptTemplate(
            name=name, system_text=data["system"], user_template=data["user"]
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TemplateError(f"bad template {name!r}: {exc}") from None


# ------------------------------------------------------------------ params


def effective_word_limit(bindings: Mapping[str, object], params: "GenerationParams") -> int:
    """The word limit in force for a call: the prompt binding wins over params."""
    raw = bindings.get("word_limit")
    if raw is not None:
        try:
            return max(1, int(str(raw)))
        except ValueError:
            pass
    return params.word_limit


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    word_limit: int = 100
    max_retries: int = 2
    seed: int | None = None  # offline backend only

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ProviderError(f"temperature {self.temperature} outside [0, 2]")
        if self.word_limit < 10:
            raise ProviderError(f"word_limit {self.word_limit} below minimum 10")
        if self.max_retries < 0:
            raise ProviderError("max_retries must be >= 0")


# ----------------------------------------------------------- mock backend


def _hash64(token: str, salt: bytes) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, salt=salt).digest()
    return int.from_bytes(digest, "big")


def _seed_salt(tag: bytes, seed: int) -> bytes:
    # blake2b salts are at most 16 bytes; tag + 8 seed bytes fits.
    return tag + (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")


_NUMBERED_LINE_RE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")
# Person names: one or two capitalized words, optionally joined by a
# lowercase particle ("Abu al Masri" is a single name).
_PERSON_RE = re.compile(
    r"\b[A-Z][a-z]+"
    r"(?:\s+(?:al|bin|el|ibn|van|von|de|da|le|la)\s+[A-Z][a-z]+"
    r"|\s+[A-Z][a-z]+)?\b"
)


class MockProvider:
    """Deterministic offline backend.

    Normative behavior, relied on by the whole test suite:

    - embed: lowercase-tokenize on non-alphanumerics, drop the shared stopword
      list, hash each token with a seeded 64-bit hash into one of `dimension`
      buckets, sign from a second hash bit, sum, L2-normalize.
    - condense: split the body on the literal marker "##" when present (one
      segment per dot, emitted as a numbered list); otherwise the whole body
      trimmed to the word limit.
    - filter: keep candidates sharing >= 1 non-stopword token with the query;
      echo their ids one per line ("none" when nothing survives).
    - synthesize / narrate: "HYPOTHESIS: " + the union of the input lines'
      non-stopword tokens in first-seen order, truncated to the word limit.
    - judge: three identical integers 1 + round(6 * min(r, 1)) where r is the
      unigram-overlap ratio |tokens(narrative) & tokens(reference)| /
      |tokens(reference)| (r = 1 when the token sets are equal).
    - persons: capitalized unigram/bigram matches of a fixed person-name
      regex, one per line, first-seen order.

    The word limit is read from the prompt bindings when present (the limit
    is part of the prompt by contract), falling back to params.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, seed: int = 0):
        self.name = f"mock(seed={seed})"
        self.dimension = dimension
        self.seed = seed
        self._bucket_salt = _seed_salt(b"bkt-", seed)
        self._sign_salt = _seed_salt(b"sgn-", seed)

    # embeddings ----------------------------------------------------------

    def embed(self, text: str) -> np.ndarray:
        tokens = content_tokens(text)
        if not tokens:
            tokens = ["".join(tokenize(text)) or "empty"]
        vector = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            bucket = _hash64(token, self._bucket_salt) % self.dimension
            sign = 1.0 if _hash64(token, self._sign_salt) & 1 else -1.0
            vector[bucket] += sign
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:  # exact cancellation; fall back to one whole-text bucket
            vector[_hash64(" ".join(tokens), self._bucket_salt) % self.dimension] = 1.0
            norm = 1.0
        return vector / norm

    # generation ----------------------------------------------------------

    def generate(
        self,
        template: PromptTemplate,
        bindings: Mapping[str, object],
        params: GenerationParams,
    ) -> str:
        template.render(bindings)  # enforce the placeholder contract
        limit = effective_word_limit(bindings, params)
        handler = getattr(self, f"_gen_{template.name}", None)
        if handler is not None:
            return handler(bindings, limit)
        # Unknown template: echo the rendered user text, trimmed.
        _, user = template.render(bindings)
        return trim_to_words(user, limit)

    def _gen_condense(self, bindings: Mapping[str, object], limit: int) -> str:
        body = str(bindings.get("body", ""))
        if "##" in body:
            segments = [s.strip() for s in body.split("##")]
            segments = [trim_to_words(s, limit) for s in segments if s]
            if len(segments) >= 2:
                return "\n".join(f"{i}. {s}" for i, s in enumerate(segments, start=1))
            if segments:
                return segments[0]
            return ""  # marker-only body; the chain treats this as a failure
        return trim_to_words(body.strip(), limit)

    def _gen_filter(self, bindings: Mapping[str, object], limit: int) -> str:
        query_tokens = set(content_tokens(str(bindings.get("query", ""))))
        kept: list[str] = []
        for line in str(bindings.get("candidates", "")).splitlines():
            if "\t" not in line:
                continue
            candidate_id, text = line.split("\t", 1)
            if query_tokens & set(content_tokens(text)):
                kept.append(candidate_id.strip())
        return "\n".join(kept) if kept else "none"

    def _union_tokens(self, lines: Iterable[str], limit: int) -> str:
        seen: dict[str, None] = {}
        for line in lines:
            for token in content_tokens(line):
                seen.setdefault(token, None)
        return f"{MOCK_SYNTHESIS_PREFIX} " + " ".join(list(seen)[:limit])

    def _gen_synthesize(self, bindings: Mapping[str, object], limit: int) -> str:
        return self._union_tokens(str(bindings.get("evidence", "")).splitlines(), limit)

    def _gen_narrate(self, bindings: Mapping[str, object], limit: int) -> str:
        lines = str(bindings.get("evidence", "")).splitlines()
        lines += str(bindings.get("hypotheses", "")).splitlines()
        return self._union_tokens(lines, limit)

    def _gen_judge(self, bindings: Mapping[str, object], limit: int) -> str:
        narrative = set(tokenize(str(bindings.get("narrative", ""))))
        reference = set(tokenize(str(bindings.get("reference", ""))))
        if narrative == reference:
            ratio = 1.0
        elif not reference:
            ratio = 0.0
        else:
            ratio = len(narrative & reference) / len(reference)
        score = 1 + round(6 * min(ratio, 1.0))
        return "\n".join(
            f"{quality}: {score}"
            for quality in ("relevance", "coverage", "thoughtfulness")
        )

    def _gen_persons(self, bindings: Mapping[str, object], limit: int) -> str:
        text = str(bindings.get("body", ""))
        seen: dict[str, None] = {}
        for match in _PERSON_RE.finditer(text):
            name = " ".join(match.group(0).split())
            first = name.split()[0].lower()
            if first in STOPWORDS:
                continue
            seen.setdefault(name, None)
        return "\n".join(seen)


# ----------------------------------------------------------- HTTP backend


class HttpProvider:
    """OpenAI-compatible chat-completions + embeddings client.

    The API key is read from the environment variable named in config at call
    time, never stored in files this module writes.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        embed_model: str | None = None,
        api_key_env: str = "OPENAI_API_KEY",
        dimension: int = DEFAULT_DIMENSION,
        timeout: float = 30.0,
        params: GenerationParams | None = None,
        embed_instruction: str = "",
    ):
        self.name = f"http({model}@{endpoint})"
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.embed_model = embed_model or model
        self.api_key_env = api_key_env
        self.dimension = dimension
        self.timeout = timeout
        self.params = params or GenerationParams()
        # Instruction-tuned embedding models accept a task prefix; empty by default.
        self.embed_instruction = embed_instruction

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = requests.post(
                f"{self.endpoint}{path}",
                json=payload,
                headers=self._headers(),
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderCallError(f"transport failure: {exc}") from None
        if response.status_code != 200:
            raise ProviderCallError(
                f"HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderCallError(f"non-JSON reply: {exc}") from None

    def generate(
        self,
        template: PromptTemplate,
        bindings: Mapping[str, object],
        params: GenerationParams,
    ) -> str:
        system, user = template.render(bindings)
        payload = {
            "model": self.model,
            "temperature": params.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        data = self._post("/chat/completions", payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderCallError(f"malformed completion payload: {exc}") from None
        self.last_usage = data.get("usage")
        return content if isinstance(content, str) else ""

    def embed(self, text: str) -> np.ndarray:
        if self.embed_instruction:
            text = f"{self.embed_instruction} {text}"
        data = self._post("/embeddings", {"model": self.embed_model, "input": text})
        try:
            values = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderCallError(f"malformed embedding payload: {exc}") from None
        vector = np.asarray(values, dtype=np.float64).reshape(-1)
        if vector.shape[0] != self.dimension:
            raise ProviderCallError(
                f"embedding dimension {vector.shape[0]} != configured {self.dimension}"
            )
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise ProviderCallError("zero embedding vector")
        return vector / norm


# ------------------------------------------------------------------ chain


@dataclass
class ChainEntry:
    provider: MockProvider | HttpProvider
    params: GenerationParams = field(default_factory=GenerationParams)


class ProviderChain:
    """Ordered providers with retries, fallback, rate limiting, and a call log.

    Each provider is tried up to 1 + max_retries times with exponential
    backoff; only after that does the next provider get the call. A reply of
    pure whitespace counts as a failure. Replies are capped at 8x the word
    limit in characters to guard runaway generations.
    """

    def __init__(
        self,
        entries: list[ChainEntry],
        templates: dict[str, PromptTemplate] | None = None,
        *,
        backoff: float = 0.5,
        max_inflight: int | None = None,
    ):
        if not entries:
            raise ProviderError("provider chain must be non-empty")
        self.entries = entries
        self.templates = templates if templates is not None else load_templates()
        self.backoff = backoff
        self.call_log: list[dict] = []
        self._gate = (
            threading.Semaphore(max_inflight) if max_inflight else None
        )
        self._log_lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return self.entries[0].provider.dimension

    def _resolve(self, template: PromptTemplate | str) -> PromptTemplate:
        if isinstance(template, PromptTemplate):
            return template
        try:
            return self.templates[template]
        except KeyError:
            raise TemplateError(f"no template named {template!r}") from None

    def _record(self, entry: dict) -> None:
        with self._log_lock:
            self.call_log.append(entry)
        logger.debug("provider call: %s", entry)

    def _attempt_all(self, kind: str, call, template_name: str) -> object:
        """Run `call(provider)` across the chain with retries; return its value."""
        causes: list[tuple[str, str]] = []
        last_empty = False
        for position, entry in enumerate(self.entries):
            provider = entry.provider
            attempts = 1 + entry.params.max_retries
            for attempt in range(attempts):
                started = time.perf_counter()
                record = {
                    "event": kind,
                    "template": template_name,
                    "provider": provider.name,
                    "attempt": attempt + 1,
                    "fallback": position > 0,
                }
                try:
                    if self._gate:
                        self._gate.acquire()
                    try:
                        result = call(provider, entry.params)
                    finally:
                        if self._gate:
                            self._gate.release()
                    if isinstance(result, str) and not result.strip():
                        raise ProviderCallError("empty reply")
                except (ProviderCallError, ProviderError) as exc:
                    record.update(
                        ok=False,
                        latency_ms=(time.perf_counter() - started) * 1000.0,
                        error=str(exc),
                    )
                    self._record(record)
                    causes.append((provider.name, str(exc)))
                    last_empty = "empty reply" in str(exc)
                    if attempt + 1 < attempts and self.backoff > 0:
                        time.sleep(self.backoff * (2**attempt))
                    continue
                record.update(
                    ok=True, latency_ms=(time.perf_counter() - started) * 1000.0
                )
                usage = getattr(provider, "last_usage", None)
                if usage:
                    record["tokens"] = usage
                self._record(record)
                return result
        error_class = EmptyReplyError if last_empty else ChainError
        raise error_class(f"all providers exhausted for {kind}", causes)

    def chat(
        self,
        template: PromptTemplate | str,
        bindings: Mapping[str, object],
        params: GenerationParams | None = None,
    ) -> str:
        resolved = self._resolve(template)
        resolved.render(bindings)  # missing bindings fail fast, before any retry

        def call(provider, entry_params: GenerationParams) -> str:
            effective = params or entry_params
            return provider.generate(resolved, bindings, effective)

        text = self._attempt_all("chat", call, resolved.name)
        assert isinstance(text, str)
        effective = params or self.entries[0].params
        ceiling = 8 * max(effective.word_limit, effective_word_limit(bindings, effective))
        return text[:ceiling]

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ProviderError("cannot embed empty text")

        def call(provider, _params: GenerationParams) -> np.ndarray:
            vector = provider.embed(text)
            if vector.shape[0] != self.dimension:
                raise ProviderCallError(
                    f"dimension {vector.shape[0]} != chain dimension {self.dimension}"
                )
            return vector

        vector = self._attempt_all("embed", call, "-")
        assert isinstance(vector, np.ndarray)
        return vector

    def write_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for entry in self.call_log:
                handle.write(json.dumps(entry, ensure_ascii=False) + "\n")


# ------------------------------------------------------------ chain config


def mock_chain(
    dimension: int = DEFAULT_DIMENSION,
    seed: int = 0,
    params: GenerationParams | None = None,
    templates: dict[str, PromptTemplate] | None = None,
) -> ProviderChain:
    """Single-provider offline chain, the default for every test and demo."""
    entry = ChainEntry(
        provider=MockProvider(dimension=dimension, seed=seed),
        params=params or GenerationParams(),
    )
    return ProviderChain([entry], templates=templates, backoff=0.0)


def load_provider_config(path: str | Path) -> ProviderChain:
    """Build a chain from a JSON config file.

    Shape:
        {
          "dimension": 64,
          "templates_dir": null,
          "backoff": 0.5,
          "max_inflight": null,
          "providers": [
            {"kind": "mock", "seed": 0,
             "params": {"temperature": 0.7, "word_limit": 100, "max_retries": 2}},
            {"kind": "http", "endpoint": "https://api.example.com/v1",
             "model": "gpt-3.5-turbo", "embed_model": "text-embedding-3-small",
             "api_key_env": "OPENAI_API_KEY", "timeout": 30}
          ]
        }
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ProviderError(f"cannot read provider config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ProviderError(f"bad provider config JSON: {exc}") from None

    dimension = int(data.get("dimension", DEFAULT_DIMENSION))
    templates_dir = data.get("templates_dir")
    templates = load_templates(templates_dir)
    entries: list[ChainEntry] = []
    for spec in data.get("providers", []):
        params = GenerationParams(**spec.get("params", {}))
        kind = spec.get("kind")
        if kind == "mock":
            provider: MockProvider | HttpProvider = MockProvider(
                dimension=dimension, seed=int(spec.get("seed", 0))
            )
        elif kind == "http":
            provider = HttpProvider(
                endpoint=spec["endpoint"],
                model=spec["model"],
                embed_model=spec.get("embed_model"),
                api_key_env=spec.get("api_key_env", "OPENAI_API_KEY"),
                dimension=dimension,
                timeout=float(spec.get("timeout", 30.0)),
                params=params,
                embed_instruction=spec.get("embed_instruction", ""),
            )
        else:
            raise ProviderError(f"unknown provider kind {kind!r}")
        entries.append(ChainEntry(provider=provider, params=params))
    if not entries:
        raise ProviderError("provider config lists no providers")
    return ProviderChain(
        entries,
        templates=templates,
        backoff=float(data.get("backoff", 0.5)),
        max_inflight=data.get("max_inflight"),
    )
