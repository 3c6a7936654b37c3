"""Non-LLM baselines: agglomerative clustering over report embeddings,
inter/intra-class distance analysis, and the document-entity network.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .corpus import Corpus
from .metrics import _f1
from .textops import capitalized_runs, collapse_ws

logger = logging.getLogger(__name__)

LINKAGES = ("average", "complete", "ward")
CLUSTER_COUNTS = tuple(range(2, 7))


class BaselineError(Exception):
    pass


# ------------------------------------------------------------- clustering


def best_assignment_f1(
    assignment: np.ndarray, labels: list[str]
) -> tuple[float, frozenset[int]]:
    """Exhaustively choose which clusters count as Relevant to maximize F1."""
    relevant = {i for i, label in enumerate(labels) if label == "Relevant"}
    clusters = sorted(set(int(c) for c in assignment))
    best_f1 = 0.0
    best_choice: frozenset[int] = frozenset()
    for r in range(len(clusters) + 1):
        for chosen in itertools.combinations(clusters, r):
            predicted = {
                i for i, c in enumerate(assignment) if int(c) in chosen
            }
            tp = len(predicted & relevant)
            precision = tp / len(predicted) if predicted else 0.0
            recall = tp / len(relevant) if relevant else 0.0
            f1 = _f1(precision, recall)
            if f1 > best_f1:
                best_f1 = f1
                best_choice = frozenset(chosen)
    return best_f1, best_choice


def cluster_classify(
    vectors: np.ndarray,
    labels: list[str],
    configs: list[dict] | None = None,
) -> tuple[float, dict]:
    """Best F1 over agglomerative clusterings and cluster-to-label assignments.

    Degenerate input (all rows identical) is collapsed to a single cluster, so
    the score equals the predict-everything baseline.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 2:
        raise BaselineError("need at least 2 report vectors")
    if vectors.shape[0] != len(labels):
        raise BaselineError("one label per vector required")
    unknown = [l for l in labels if l not in ("Relevant", "Irrelevant")]
    if unknown:
        raise BaselineError(f"labels must be Relevant/Irrelevant, got {unknown[0]!r}")

    if configs is None:
        configs = [
            {"linkage": method, "n_clusters": count}
            for method in LINKAGES
            for count in CLUSTER_COUNTS
        ]

    if np.allclose(vectors, vectors[0]):
        assignment = np.ones(vectors.shape[0], dtype=int)
        f1, chosen = best_assignment_f1(assignment, labels)
        return f1, {"linkage": None, "n_clusters": 1, "relevant_clusters": sorted(chosen)}

    best_f1 = -1.0
    best_config: dict = {}
    for config in configs:
        method = config["linkage"]
        count = int(config["n_clusters"])
        merge_tree = linkage(vectors, method=method)
        assignment = fcluster(merge_tree, t=count, criterion="maxclust")
        f1, chosen = best_assignment_f1(assignment, labels)
        if f1 > best_f1:
            best_f1 = f1
            best_config = {
                "linkage": method,
                "n_clusters": count,
                "relevant_clusters": sorted(chosen),
            }
    return best_f1, best_config


# -------------------------------------------------------------- distances


@dataclass(frozen=True)
class DistanceStats:
    intra_relevant: float | None
    intra_irrelevant: float | None
    inter: float | None

    def to_csv(self) -> str:
        def cell(value: float | None) -> str:
            return "" if value is None else f"{value:.6f}"

        return (
            "intra_relevant,intra_irrelevant,inter\n"
            f"{cell(self.intra_relevant)},{cell(self.intra_irrelevant)},{cell(self.inter)}\n"
        )


def _mean_pair_distance(a: np.ndarray, b: np.ndarray | None = None) -> float | None:
    """Mean 1 - cosine over unordered pairs (within a, or across a x b)."""

    def unit(rows: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise BaselineError("zero vector in distance computation")
        return rows / norms

    if b is None:
        if a.shape[0] < 2:
            return None
        ua = unit(a)
        sims = ua @ ua.T
        upper = sims[np.triu_indices(a.shape[0], k=1)]
        return float(np.mean(1.0 - upper))
    if a.shape[0] == 0 or b.shape[0] == 0:
        return None
    sims = unit(a) @ unit(b).T
    return float(np.mean(1.0 - sims))


def interclass_distances(vectors: np.ndarray, labels: list[str]) -> DistanceStats:
    """Mean cosine distances within and across the Relevant/Irrelevant classes."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.shape[0] != len(labels):
        raise BaselineError("one label per vector required")
    relevant = vectors[[i for i, l in enumerate(labels) if l == "Relevant"]]
    irrelevant = vectors[[i for i, l in enumerate(labels) if l == "Irrelevant"]]
    return DistanceStats(
        intra_relevant=_mean_pair_distance(relevant),
        intra_irrelevant=_mean_pair_distance(irrelevant),
        inter=_mean_pair_distance(relevant, irrelevant),
    )


# -------------------------------------------------------- entity network


def fallback_extractor(text: str) -> list[str]:
    """Offline entity extraction: capitalized-token runs, length <= 4."""
    return capitalized_runs(text, max_len=4)


def normalize_entity(name: str) -> str:
    return collapse_ws(name).casefold()


def document_entity_network(
    corpus: Corpus,
    extractor=None,
) -> tuple[nx.Graph, nx.Graph]:
    """Bipartite document-entity graph plus its document-document projection.

    `extractor` maps a report body to entity strings; defaults to the
    capitalized-run fallback. Projection edges carry weight = number of
    shared entities. Documents with no entities stay as isolated nodes.
    """
    extract = extractor or fallback_extractor
    bipartite = nx.Graph()
    doc_entities: dict[str, set[str]] = {}
    for report in corpus.reports:
        doc_node = f"doc:{report.id}"
        bipartite.add_node(doc_node, kind="document")
        entities = {normalize_entity(e) for e in extract(report.body)}
        entities = {e for e in entities if e}
        doc_entities[report.id] = entities
        for entity in sorted(entities):
            entity_node = f"ent:{entity}"
            bipartite.add_node(entity_node, kind="entity")
            bipartite.add_edge(doc_node, entity_node)

    projection = nx.Graph()
    projection.add_nodes_from(f"doc:{r.id}" for r in corpus.reports)
    ids = [r.id for r in corpus.reports]
    for a, b in itertools.combinations(ids, 2):
        shared = doc_entities[a] & doc_entities[b]
        if shared:
            projection.add_edge(f"doc:{a}", f"doc:{b}", weight=len(shared))
    return bipartite, projection


def graph_to_dot(graph: nx.Graph, name: str = "g") -> str:
    """Plain Graphviz DOT text for an undirected graph with optional weights."""

    def escape(text: str) -> str:
        return str(text).replace("\\", "\\\\").replace('"', '\\"')

    lines = [f"graph {name} {{"]
    for node, data in graph.nodes(data=True):
        attrs = ""
        if data.get("kind") == "entity":
            attrs = " [shape=box]"
        lines.append(f'  "{escape(node)}"{attrs};')
    for a, b, data in graph.edges(data=True):
        weight = data.get("weight")
        label = f' [label="{weight}"]' if weight is not None else ""
        lines.append(f'  "{escape(a)}" -- "{escape(b)}"{label};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def embed_corpus(chain, corpus: Corpus) -> np.ndarray:
    """One embedding per report body, in ordinal order."""
    return np.stack([chain.embed(report.body) for report in corpus.reports])
