"""Shared text primitives: tokenization, the stopword list, trimming, sentence splits.

Every component that reasons about token overlap (the deterministic offline
provider, the synthetic corpus generator, the entity-extraction fallback) must
agree on one tokenizer and one stopword list, so they live here.
"""
from __future__ import annotations

import re

# Closed-class connective words. The offline provider drops these before
# hashing, the filter rule ignores them, and the synthetic corpus generator
# uses only these as glue so that planted signal tokens stay content-bearing.
STOPWORDS = frozenset(
    """
    a an and are as at after be been before but by did do for from had has have
    he her him his i if in into is it its me my near no not of on or our over
    she so than that the their them then there these they this those to under
    up upon was we were what when which while who will with would you your
    """.split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WS_RE = re.compile(r"\s+")
_LINE_RE = re.compile(r"[\r\n]+")
_SENT_END_RE = re.compile(r"(?<=[.!?])\s+")
_HAS_WORD_RE = re.compile(r"[a-zA-Z0-9]")

# Lowercase particles that may join capitalized words inside one name
# ("Abu al Masri", "Ludwig van Beethoven").
NAME_PARTICLES = ("al", "bin", "el", "ibn", "van", "von", "de", "da", "le", "la")
_PARTICLE_ALT = "|".join(NAME_PARTICLES)
# Runs of capitalized words, used by the offline entity fallback.
_CAP_RUN_RE = re.compile(
    rf"\b[A-Z][a-zA-Z']*(?:\s+(?:(?:{_PARTICLE_ALT})\s+)?[A-Z][a-zA-Z']*)*\b"
)


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric word tokens, punctuation discarded."""
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords removed, original order kept."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def content_token_set(text: str) -> set[str]:
    return set(content_tokens(text))


def collapse_ws(text: str) -> str:
    """All whitespace runs become single spaces; ends trimmed."""
    return _WS_RE.sub(" ", text).strip()


def trim_to_words(text: str, limit: int) -> str:
    """First `limit` whitespace-separated words of `text`."""
    if limit <= 0:
        return ""
    words = text.split()
    return " ".join(words[:limit])


def split_sentences(text: str) -> list[str]:
    """Split on line breaks first, then on terminal punctuation within lines.

    Used by the summary-level LCS metric; deliberately simple and deterministic.
    """
    sentences: list[str] = []
    for line in _LINE_RE.split(text):
        line = line.strip()
        if not line:
            continue
        for part in _SENT_END_RE.split(line):
            part = part.strip()
            if part and _HAS_WORD_RE.search(part):
                sentences.append(part)
    return sentences


def capitalized_runs(text: str, max_len: int = 4) -> list[str]:
    """Consecutive capitalized-token sequences of bounded length, first-seen order.

    Offline fallback for entity extraction. Runs consisting solely of
    capitalized stopwords ("The", "And") are dropped; longer runs are kept
    only up to `max_len` tokens.
    """
    seen: dict[str, None] = {}
    for match in _CAP_RUN_RE.finditer(text):
        tokens = match.group(0).split()
        if len(tokens) > max_len:
            tokens = tokens[:max_len]
        while tokens and tokens[-1].islower():
            tokens.pop()
        if not tokens or all(t.lower() in STOPWORDS for t in tokens):
            continue
        run = " ".join(tokens)
        seen.setdefault(run, None)
    return list(seen)
