"""The person-centric forest: one dot per person, connections as hypotheses.

    python demos/05_person_variant.py
"""
from __future__ import annotations

from dotforest.core import DotKind, ForestVariant
from dotforest.corpus import Corpus, Report
from dotforest.pipeline import RunConfig, run_pipeline

BODIES = [
    "Omar Haddad rented a harbor slip. Nadia Karim signed the lease as witness.",
    "Nadia Karim wired funds north. Viktor Osei collected them in person.",
    "Omar Haddad met Viktor Osei aboard the trawler after midnight.",
    "Nadia Karim booked passage under her own name, oddly enough.",
]


def main() -> None:
    reports = [
        Report(id=f"p{i}", ordinal=i, title=f"report {i}", body=body)
        for i, body in enumerate(BODIES)
    ]
    corpus = Corpus(dataset_id="person-demo", reports=reports)

    config = RunConfig(variant=ForestVariant.PERSON_BASED, seed=0, out_dir=None)
    forest, result = run_pipeline(config, corpus=corpus)

    print(f"forest: {forest.shape_summary()}")
    print(f"distinct persons: {result.metadata['distinct_persons']}")
    print()

    print("person dots (snippets accumulate across reports):")
    for dot in forest.nodes.values():
        if dot.kind is DotKind.EVIDENTIAL:
            text = dot.information
            print(f"  {text[:96]}{'...' if len(text) > 96 else ''}")
    print()

    print("connection dots (people who appear in the same report):")
    for dot in forest.nodes.values():
        if dot.kind is DotKind.HYPOTHESIS:
            print(f"  step {dot.created_at_step}: links {len(dot.children)} people")
    print()

    print("narrative:")
    print("  " + result.narrative[:300])


if __name__ == "__main__":
    main()
