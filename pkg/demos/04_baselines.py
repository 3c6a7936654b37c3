"""The non-LLM baselines: clustering, class distances, entity networks.

    python demos/04_baselines.py
"""
from __future__ import annotations

import networkx as nx
import numpy as np

from dotforest.baselines import (
    cluster_classify,
    document_entity_network,
    embed_corpus,
    graph_to_dot,
    interclass_distances,
)
from dotforest.corpus import Corpus, Report, generate_synthetic
from dotforest.providers import mock_chain


def main() -> None:
    print("== clustering on separable geometry ==")
    rng = np.random.default_rng(5)
    vectors = np.vstack(
        [
            rng.normal(loc=3.0, scale=0.05, size=(8, 6)),
            rng.normal(loc=-3.0, scale=0.05, size=(7, 6)),
        ]
    )
    labels = ["Relevant"] * 8 + ["Irrelevant"] * 7
    f1, config = cluster_classify(vectors, labels)
    print(f"two tight blobs -> F1={f1:.3f} via {config}")

    print()
    print("== clustering on mock embeddings of a planted corpus ==")
    corpus = generate_synthetic(seed=7, n_relevant=12, n_noise=8)
    chain = mock_chain(seed=0)
    embedded = embed_corpus(chain, corpus)
    truth = [r.truth_label or "" for r in corpus.reports]
    f1, config = cluster_classify(embedded, truth)
    print(f"best F1={f1:.3f} via {config}")

    stats = interclass_distances(embedded, truth)
    print(
        f"mean cosine distance: intra-relevant={stats.intra_relevant:.3f}"
        f"  intra-irrelevant={stats.intra_irrelevant:.3f}  inter={stats.inter:.3f}"
    )
    print("(clustering only works when intra stays well below inter)")

    print()
    print("== document-entity network ==")
    bodies = [
        "Omar Haddad rented the slip. Nadia Karim signed as witness.",
        "Nadia Karim wired funds to a harbor account.",
        "Omar Haddad met Nadia Karim aboard the trawler.",
        "A parking ordinance occupied the council all week.",
        "Gustav Brandt catalogued tide tables, alone as usual.",
    ]
    reports = [
        Report(id=f"d{i}", ordinal=i, title=f"report {i}", body=body)
        for i, body in enumerate(bodies)
    ]
    net_corpus = Corpus(dataset_id="entity-demo", reports=reports)
    bipartite, projection = document_entity_network(net_corpus)
    print(
        f"bipartite: {bipartite.number_of_nodes()} nodes,"
        f" {bipartite.number_of_edges()} mention edges"
    )
    for a, b, data in projection.edges(data=True):
        print(f"  {a} -- {b}  shared entities: {data['weight']}")
    components = sorted(nx.connected_components(projection), key=len, reverse=True)
    print(f"largest connected component: {sorted(components[0])}")
    print()
    print("projection in DOT form:")
    print(graph_to_dot(projection, name="who_with_whom"))


if __name__ == "__main__":
    main()
