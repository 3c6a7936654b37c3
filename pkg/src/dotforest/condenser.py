"""Data condensation: turn each report into one or more concise evidential dot texts."""
from __future__ import annotations

import logging
import re

from .core import Report
from .providers import (
    ChainError,
    EmptyReplyError,
    GenerationParams,
    ProviderChain,
    effective_word_limit,
)
from .textops import collapse_ws, trim_to_words

logger = logging.getLogger(__name__)

MAX_SPLIT_DEPTH = 2

_NUMBERED_LINE_RE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")


def parse_dot_texts(reply: str) -> list[str]:
    """Read the structured reply convention: a numbered list means several dots.

    Two or more numbered lines yield one dot per line; anything else is a
    single dot equal to the whole reply.
    """
    numbered = [
        match.group(1)
        for line in reply.splitlines()
        if (match := _NUMBERED_LINE_RE.match(line))
    ]
    if len(numbered) >= 2:
        return numbered
    return [reply]


def _clean(texts: list[str], limit: int) -> list[str]:
    cleaned = [trim_to_words(collapse_ws(t), limit) for t in texts]
    return [t for t in cleaned if t]


def condense_report(
    chain: ProviderChain,
    report: Report,
    params: GenerationParams | None = None,
) -> list[str]:
    """Condense one report into >= 1 dot texts, each within the word limit.

    An exhausted chain whose failures were empty replies degrades to the raw
    body as a single dot (the report must never be lost); any other chain
    failure propagates to the caller.
    """
    effective = params or chain.entries[0].params
    bindings = {
        "title": report.title,
        "body": report.body,
        "word_limit": effective.word_limit,
    }
    limit = effective_word_limit(bindings, effective)
    try:
        reply = chain.chat("condense", bindings, params)
    except EmptyReplyError:
        logger.warning(
            "empty condense replies for report %s; keeping raw body", report.id
        )
        return _clean([report.body], limit)
    texts = _clean(parse_dot_texts(reply), limit)
    if not texts:
        logger.warning(
            "condense reply for report %s emptied out after trimming; keeping raw body",
            report.id,
        )
        return _clean([report.body], limit)
    return texts


def dynamic_split(
    chain: ProviderChain,
    text: str,
    params: GenerationParams | None = None,
    depth: int = 0,
) -> list[str]:
    """Ask the model whether a dot text bundles several facts; split if so.

    Recursion is capped at MAX_SPLIT_DEPTH; at the cap the remainder stays
    joined. Provider failure returns the input singleton: condensation must
    never lose information.
    """
    if not text.strip():
        raise ValueError("dynamic_split requires non-empty text")
    if depth >= MAX_SPLIT_DEPTH:
        return [text]
    effective = params or chain.entries[0].params
    bindings = {"title": "", "body": text, "word_limit": effective.word_limit}
    limit = effective_word_limit(bindings, effective)
    try:
        reply = chain.chat("condense", bindings, params)
    except ChainError:
        logger.warning("dynamic split failed at depth %d; keeping text whole", depth)
        return [text]
    parts = _clean(parse_dot_texts(reply), limit)
    if len(parts) < 2:
        return [text]
    result: list[str] = []
    for part in parts:
        result.extend(dynamic_split(chain, part, params, depth + 1))
    return result
