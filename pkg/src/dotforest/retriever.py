"""Exact cosine retrieval and the two-step (vector search, then model filter) gate.

The index is exact on purpose: corpora here are hundreds of dots, and exactness
is what makes retrieval auditable against a brute-force scan.
"""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:  # import cycle guard: core imports VectorIndex from here
    from .core import EvidenceForest
    from .providers import GenerationParams, ProviderChain

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 5
DEFAULT_SIMILARITY_FLOOR = 0.30


class RetrievalError(Exception):
    pass


class VectorIndex:
    """Append-only store of (id, vector) with exact cosine search.

    Vectors keep their insertion order; search ties break toward earlier
    insertion. Norms are precomputed at add time.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise RetrievalError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self._ids: list[str] = []
        self._positions: dict[str, int] = {}
        self._vectors: list[np.ndarray] = []
        self._norms: list[float] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, dot_id: str) -> bool:
        return dot_id in self._positions

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def add(self, dot_id: str, vector) -> None:
        if dot_id in self._positions:
            raise RetrievalError(f"duplicate id {dot_id!r}")
        array = np.asarray(vector, dtype=np.float64).reshape(-1)
        if array.shape[0] != self.dimension:
            raise RetrievalError(
                f"dimension mismatch for {dot_id!r}:"
                f" expected {self.dimension}, got {array.shape[0]}"
            )
        norm = float(np.linalg.norm(array))
        if norm == 0.0:
            raise RetrievalError(f"zero vector for {dot_id!r}")
        self._positions[dot_id] = len(self._ids)
        self._ids.append(dot_id)
        self._vectors.append(array)
        self._norms.append(norm)
        self._matrix = None

    def vector_of(self, dot_id: str) -> np.ndarray | None:
        position = self._positions.get(dot_id)
        return None if position is None else self._vectors[position]

    def _stacked(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = (
                np.stack(self._vectors)
                if self._vectors
                else np.empty((0, self.dimension))
            )
        return self._matrix

    def search(
        self,
        query,
        k: int,
        exclude: Iterable[str] = (),
        floor: float = 0.0,
    ) -> list[tuple[str, float]]:
        """Top-k by cosine similarity, exact.

        Entries in `exclude` are skipped, entries strictly below `floor` are
        dropped, and `k` larger than the eligible population is clamped.
        """
        if k < 1:
            raise RetrievalError(f"k must be >= 1, got {k}")
        query_arr = np.asarray(query, dtype=np.float64).reshape(-1)
        if query_arr.shape[0] != self.dimension:
            raise RetrievalError(
                f"query dimension {query_arr.shape[0]} != index {self.dimension}"
            )
        query_norm = float(np.linalg.norm(query_arr))
        if query_norm == 0.0:
            raise RetrievalError("zero query vector")
        if not self._ids:
            return []
        sims = self._stacked() @ query_arr / (np.array(self._norms) * query_norm)
        excluded = set(exclude)
        # Stable sort on -similarity keeps insertion order among exact ties.
        order = np.argsort(-sims, kind="stable")
        hits: list[tuple[str, float]] = []
        for position in order:
            dot_id = self._ids[position]
            if dot_id in excluded:
                continue
            similarity = float(sims[position])
            if similarity < floor:
                break  # sorted descending, nothing further can pass
            hits.append((dot_id, similarity))
            if len(hits) == k:
                break
        return hits

    def entries_equal(self, other: VectorIndex) -> bool:
        if self.dimension != other.dimension or self._ids != other._ids:
            return False
        return all(
            np.array_equal(a, b) for a, b in zip(self._vectors, other._vectors)
        )


def format_candidates(pairs: Sequence[tuple[str, str]]) -> str:
    """Render (id, text) pairs one per line for filter prompts: 'id<TAB>text'."""
    return "\n".join(f"{dot_id}\t{text}" for dot_id, text in pairs)


def two_step_retrieve(
    chain: "ProviderChain",
    forest: "EvidenceForest",
    dot_id: str,
    *,
    k: int = DEFAULT_TOP_K,
    floor: float = DEFAULT_SIMILARITY_FLOOR,
    query_vector=None,
    search_all_dots: bool = True,
    params: "GenerationParams | None" = None,
) -> list[str]:
    """Vector-search then model-filter the neighbors of one dot.

    The dot itself, its ancestors, and its descendants are excluded before
    search. An empty vector round returns [] without a filter call. Filter
    replies are parsed as one candidate id per line; ids that were not offered
    are discarded (logged). A filter provider failure degrades to [] (logged).
    """
    from .providers import ChainError  # local import, avoids module cycle

    dot = forest.nodes.get(dot_id)
    if dot is None:
        raise RetrievalError(f"unknown dot {dot_id!r}")
    if query_vector is None:
        query_vector = forest.index.vector_of(dot_id)
    if query_vector is None:
        query_vector = chain.embed(dot.information)

    exclude = {dot_id} | forest.ancestors(dot_id) | forest.descendants(dot_id)
    hits = forest.index.search(query_vector, k=k, exclude=exclude, floor=floor)
    if not search_all_dots:
        from .core import DotKind

        hits = [(h, s) for h, s in hits if forest.nodes[h].kind is DotKind.EVIDENTIAL]
    if not hits:
        return []

    offered = [(h, forest.nodes[h].information) for h, _ in hits]
    try:
        reply = chain.chat(
            "filter",
            {
                "query": dot.information,
                "candidates": format_candidates(offered),
            },
            params,
        )
    except ChainError as exc:
        logger.warning("filter call failed for %s, keeping nothing: %s", dot_id, exc)
        return []

    offered_ids = {h for h, _ in hits}
    kept: list[str] = []
    for line in reply.splitlines():
        candidate = line.strip().split("\t")[0].strip()
        if not candidate:
            continue
        if candidate.lower() == "none":  # explicit nothing-related marker
            continue
        if candidate not in offered_ids:
            logger.warning("filter returned unknown id %r, discarded", candidate)
            continue
        if candidate not in kept:
            kept.append(candidate)
    return kept
