"""Walk through the evidence forest by hand: dots, links, threads, audits.

Run from the repository root after installing the package:

    python demos/01_forest_anatomy.py
"""
from __future__ import annotations

from dotforest.core import EvidenceForest, deserialize_forest, serialize_forest
from dotforest.corpus import Report


BODIES = [
    "A courier rented a slip at the harbor and asked for no receipt.",
    "The same slip was paid in cash, weekly, always by a different man.",
    "A trawler left that slip before dawn with its transponder dark.",
    "An unrelated permit dispute dragged on at city hall.",
]


def main() -> None:
    forest = EvidenceForest(dataset_id="anatomy-demo")

    # Evidential dots are the leaves: one condensed statement per source report.
    reports = [
        Report(id=f"r{i}", ordinal=i, title=f"field note {i}", body=body)
        for i, body in enumerate(BODIES)
    ]
    e1 = forest.add_evidential_dot(
        reports[0], "a courier rented a slip at the harbor", step=0
    )
    e2 = forest.add_evidential_dot(
        reports[1], "the same slip was paid in cash weekly", step=1
    )
    e3 = forest.add_evidential_dot(
        reports[2], "a trawler left that slip before dawn", step=2
    )
    e4 = forest.add_evidential_dot(
        reports[3], "an unrelated permit dispute at city hall", step=3
    )
    print("after ingestion:", forest.shape_summary())

    # Hypothesis dots summarize two or more children; links are bidirectional.
    h1 = forest.create_hypothesis_dot(
        [e1, e2], "someone maintains quiet access to a harbor slip"
    )
    h2 = forest.create_hypothesis_dot(
        [h1, e3], "the slip supports covert departures by sea"
    )
    names = {e1: "e1", e2: "e2", e3: "e3", e4: "e4", h1: "h1", h2: "h2"}

    def show(ids) -> str:
        return "{" + ", ".join(sorted(names[i] for i in ids)) + "}"

    print("after two merges:", forest.shape_summary())
    print("roots:", show(forest.roots()))

    # The audit names the first violated structural rule, or nothing.
    print("audit violations:", forest.audit() or "none")

    # Consolidation collapses a candidate set onto its deepest dominating
    # hypotheses, so a merge never pairs a dot with its own ancestor.
    kept = forest.consolidate_hypothesis_nodes([e1, e2, e3, e4])
    print("consolidated {e1, e2, e3, e4} ->", show(kept))

    # Threads are root-reachable subgraphs; the dominant one drives narration.
    thread = forest.largest_thread()
    print("dominant thread root:", names[thread.root])
    print("  members:", show(thread.member_dots))
    print("  evidential leaves:", show(thread.evidential_leaves))
    print("  covered reports:", sorted(thread.covered_reports))
    assert thread.root == h2

    # Serialization round-trips exactly, index order included.
    text = serialize_forest(forest)
    restored = deserialize_forest(text)
    print("round-trip equal:", restored == forest)
    print("serialized bytes:", len(text.encode()))


if __name__ == "__main__":
    main()
