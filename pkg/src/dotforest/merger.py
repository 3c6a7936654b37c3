"""Recursive retrieve-and-merge: grow hypothesis structure as evidence arrives.

For one query dot: retrieve related dots (two-step), consolidate them up to
the threads that already subsume them, synthesize a hypothesis text over the
combined evidential leaves, create the hypothesis dot, index it, and recurse
on the new dot. All provider calls happen before any mutation, so a provider
failure aborts a merge level atomically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .core import Dot, EvidenceForest
from .providers import ChainError, GenerationParams, ProviderChain
from .retriever import (
    DEFAULT_SIMILARITY_FLOOR,
    DEFAULT_TOP_K,
    two_step_retrieve,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 3


@dataclass(frozen=True)
class MergeSettings:
    k: int = DEFAULT_TOP_K
    similarity_floor: float = DEFAULT_SIMILARITY_FLOOR
    max_depth: int = DEFAULT_MAX_DEPTH
    search_all_dots: bool = True


def synthesize_hypothesis(
    chain: ProviderChain,
    dots: list[Dot],
    params: GenerationParams | None = None,
) -> str:
    """One synthesis call over >= 2 evidential dots, presented chronologically."""
    if len(dots) < 2:
        raise ValueError("hypothesis synthesis requires at least 2 dots")
    effective = params or chain.entries[0].params
    evidence = "\n".join(dot.information for dot in dots)
    reply = chain.chat(
        "synthesize",
        {"evidence": evidence, "word_limit": effective.word_limit},
        params,
    )
    words = reply.split()
    return " ".join(words[: effective.word_limit])


def retrieve_and_merge(
    chain: ProviderChain,
    forest: EvidenceForest,
    dot_id: str,
    depth: int = 0,
    settings: MergeSettings | None = None,
    params: GenerationParams | None = None,
    query_vector=None,
) -> list[str]:
    """Merge one dot into the forest; returns created hypothesis ids in order.

    No candidates, depth at the cap, or fewer than two viable children leave
    the forest untouched. Provider failures mid-merge are logged and abort the
    current level atomically; ids created by earlier levels stand.
    """
    settings = settings or MergeSettings()
    if depth >= settings.max_depth:
        return []
    dot = forest.nodes.get(dot_id)
    if dot is None:
        raise ValueError(f"unknown dot {dot_id!r}")

    candidates = two_step_retrieve(
        chain,
        forest,
        dot_id,
        k=settings.k,
        floor=settings.similarity_floor,
        query_vector=query_vector,
        search_all_dots=settings.search_all_dots,
        params=params,
    )
    if not candidates:
        return []

    consolidated = forest.consolidate_hypothesis_nodes(candidates)
    # The query's own thread may surface via other candidates; keep the
    # children unrelated to the query by ancestry.
    related = forest.ancestors(dot_id) | forest.descendants(dot_id) | {dot_id}
    rank = {node_id: i for i, node_id in enumerate(forest.nodes)}
    members = sorted(consolidated - related, key=lambda d: rank[d])

    children = _drop_subsumed(forest, [dot_id] + members)
    if len(children) < 2:
        logger.info("merge for %s collapsed to a single child; skipping", dot_id)
        return []

    leaves = forest.collect_evidential_leaves_multi(children)
    try:
        text = synthesize_hypothesis(chain, leaves, params)
        vector = chain.embed(text)
    except ChainError as exc:
        logger.warning("merge aborted for %s: %s", dot_id, exc)
        return []

    new_id = forest.create_hypothesis_dot(children, text)
    forest.index.add(new_id, vector)
    created = [new_id]
    created += retrieve_and_merge(
        chain, forest, new_id, depth + 1, settings, params
    )
    return created


def _drop_subsumed(forest: EvidenceForest, children: list[str]) -> list[str]:
    """Keep only children whose evidential coverage is not contained in another's.

    Guarantees the new hypothesis strictly widens coverage over every single
    child. Earlier entries win ties (the query dot comes first).
    """
    coverage = {c: forest.evidential_descendants(c) for c in children}
    kept: list[str] = []
    for child in children:
        if any(coverage[child] <= coverage[other] for other in kept):
            continue
        kept = [other for other in kept if not coverage[other] < coverage[child]]
        kept.append(child)
    return kept
