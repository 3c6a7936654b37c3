"""A tour of the evaluation metrics, including where surface overlap misleads.

    python demos/03_metrics_tour.py
"""
from __future__ import annotations

from dotforest.metrics import (
    judge_narrative,
    meteor,
    pitfall_matrix,
    porter_stem,
    rouge_lsum,
    rouge_n,
)
from dotforest.providers import mock_chain


def triple(score) -> str:
    return f"P={score.precision:.3f} R={score.recall:.3f} F1={score.f1:.3f}"


def main() -> None:
    print("== clipped n-gram ROUGE ==")
    print('identical:      ', triple(rouge_n("the cat sat", "the cat sat", 1)))
    print('"sat" vs "ran": ', triple(rouge_n("the cat sat", "the cat ran", 1)))
    print("bigrams:        ", triple(rouge_n("the cat sat", "the cat ran", 2)))

    print()
    print("== summary-level LCS ROUGE ==")
    # each reference token is recovered by some candidate sentence, so the
    # union credit is full even though the sentences arrive out of order
    print("out-of-order sentences:", triple(rouge_lsum("c d. a b.", "a b c d.")))
    print("flat word salad:       ", triple(rouge_lsum("d c b a.", "a b c d.")))

    print()
    print("== METEOR ==")
    print(f'identical 4 tokens:    {meteor("a b c d", "a b c d"):.7f}')
    print(f'same tokens, shuffled: {meteor("c d a b", "a b c d"):.7f}  (chunk penalty)')
    print(f'"running" vs "run":    {meteor("running", "run"):.7f}  (stem stage)')
    for word in ("running", "ponies", "relational", "hopefulness"):
        print(f"  porter_stem({word!r}) = {porter_stem(word)!r}")

    print()
    print("== model judge (mock chain) ==")
    chain = mock_chain(seed=0)
    reference = "the courier moved crates to the trawler at night"
    for label, narrative in [
        ("identical", reference),
        ("half overlap", "the courier moved pallets to a warehouse by day"),
        ("unrelated", "city hall debated a parking ordinance"),
    ]:
        scores = judge_narrative(chain, narrative, reference)
        print(f"  {label:13s} -> relevance/coverage/thoughtfulness = {scores}")

    print()
    print("== pitfall matrix ==")
    # two accounts of the same plot, one account of a different plot that
    # shares domain vocabulary, and random text
    same_plot_a = "the courier rented a slip and paid cash for the trawler"
    same_plot_b = "a courier paid cash for a harbor slip and met the trawler"
    other_plot = "the courier paid cash for a truck and drove the crates inland"
    random_text = "quartz penguins debate lunar cartography on tuesdays"
    matrix = pitfall_matrix(
        [
            ("plot_a", same_plot_a),
            ("plot_b", same_plot_b),
            ("other", other_plot),
            ("random", random_text),
        ]
    )
    print(matrix.to_tsv())
    print("cells are METEOR/ROUGE-1; note how much credit the unrelated but")
    print("same-vocabulary account still earns compared to random text.")


if __name__ == "__main__":
    main()
