"""Metric behavior against independent counting oracles and hand-worked cases."""
from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_corpus
from dotforest.corpus import Corpus
from dotforest.metrics import (
    EvalReport,
    MetricsError,
    Score,
    classification_f1,
    evaluate_run,
    judge_narrative,
    lcs_positions,
    meteor,
    pitfall_matrix,
    porter_stem,
    rouge_lsum,
    rouge_n,
)
from dotforest.providers import mock_chain
from dotforest.textops import split_sentences, tokenize
from oracles import clipped_ngram_rouge, recursive_lcs_positions, union_lcs_rouge

VOCAB = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta",
    "eta", "theta", "iota", "kappa", "mu", "nu",
]

tokens_st = st.lists(st.sampled_from(VOCAB[:6]), max_size=10)
text_st = st.text(alphabet="abcd .!?\n'", max_size=50)


def _random_text(rng: random.Random, max_len: int = 30) -> str:
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randrange(max_len + 1)))


def _random_sentences(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randrange(1, 5)):
        n = rng.randrange(0, 8)
        words = " ".join(rng.choice(VOCAB) for _ in range(n))
        parts.append(words + rng.choice([".", "!", "?"]))
    return " ".join(parts)


# ------------------------------------------------------------------ ROUGE


class TestRougeN:
    def test_identical_texts_score_one(self):
        text = "the fox crossed the border. nobody saw it happen."
        for n in (1, 2):
            assert rouge_n(text, text, n).f1 == 1.0

    def test_disjoint_vocabularies_score_zero(self):
        assert rouge_n("aa bb cc", "dd ee ff", 1).as_tuple() == (0.0, 0.0, 0.0)
        assert rouge_n("aa bb cc", "dd ee ff", 2).as_tuple() == (0.0, 0.0, 0.0)

    def test_two_of_three_unigrams(self):
        score = rouge_n("the cat sat", "the cat ran", 1)
        assert score.precision == pytest.approx(2 / 3, abs=1e-12)
        assert score.recall == pytest.approx(2 / 3, abs=1e-12)
        assert score.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_empty_candidate_logs_and_returns_zeros(self, caplog):
        with caplog.at_level("INFO", logger="dotforest.metrics"):
            score = rouge_n("...", "some words", 1)
        assert score.as_tuple() == (0.0, 0.0, 0.0)
        assert any("empty token sequence" in r.message for r in caplog.records)

    def test_invalid_n_rejected(self):
        with pytest.raises(MetricsError):
            rouge_n("a", "a", 0)

    def test_clipping_limits_repeated_grams(self):
        # candidate repeats "a" four times but the reference holds only one
        score = rouge_n("a a a a", "a b", 1)
        assert score.precision == pytest.approx(1 / 4)
        assert score.recall == pytest.approx(1 / 2)

    def test_hundred_random_pairs_match_counting_oracle(self):
        rng = random.Random(41)
        for _ in range(100):
            cand = _random_text(rng)
            ref = _random_text(rng)
            for n in (1, 2):
                assert rouge_n(cand, ref, n).as_tuple() == clipped_ngram_rouge(
                    cand, ref, n
                )


class TestRougeLsum:
    def test_identical_multi_sentence_text(self):
        text = "alpha beta gamma. delta epsilon!\nzeta eta."
        assert rouge_lsum(text, text).f1 == 1.0

    def test_union_across_candidate_sentences(self):
        # each reference token is recovered by some candidate sentence
        assert rouge_lsum("a b. c d.", "a b c d.").f1 == 1.0
        # sentence order does not matter at the summary level
        assert rouge_lsum("c d. a b.", "a b c d.").f1 == 1.0

    def test_empty_reference_returns_zeros(self):
        assert rouge_lsum("words here.", "?!").as_tuple() == (0.0, 0.0, 0.0)

    def test_random_pairs_match_recursive_oracle(self):
        rng = random.Random(43)
        for _ in range(60):
            cand = _random_sentences(rng)
            ref = _random_sentences(rng)
            cand_sents = [t for t in (tokenize(s) for s in split_sentences(cand)) if t]
            ref_sents = [t for t in (tokenize(s) for s in split_sentences(ref)) if t]
            assert rouge_lsum(cand, ref).as_tuple() == union_lcs_rouge(
                cand_sents, ref_sents
            )


class TestLcsPositions:
    def test_simple_subsequence(self):
        assert lcs_positions(["a", "b", "c"], ["a", "c"]) == {0, 2}

    def test_repeated_token_prefers_later_reference_position(self):
        assert lcs_positions(["a", "a"], ["a"]) == {1}

    def test_random_pairs_match_recursive_oracle(self):
        rng = random.Random(47)
        for _ in range(80):
            ref = [rng.choice(VOCAB[:4]) for _ in range(rng.randrange(9))]
            cand = [rng.choice(VOCAB[:4]) for _ in range(rng.randrange(9))]
            assert lcs_positions(ref, cand) == recursive_lcs_positions(
                tuple(ref), tuple(cand)
            )


# ----------------------------------------------------------------- METEOR


class TestMeteor:
    def test_no_common_tokens_scores_zero(self):
        assert meteor("aa bb", "cc dd") == 0.0

    def test_identical_four_tokens(self):
        assert meteor("a b c d", "a b c d") == pytest.approx(0.9921875, abs=1e-9)

    def test_stem_stage_matches_inflected_form(self):
        # no exact match, the stem stage pairs running with run
        assert meteor("running", "run") == pytest.approx(0.5)

    def test_empty_text_scores_zero(self):
        assert meteor("", "a b") == 0.0
        assert meteor("a b", "!!") == 0.0

    def test_not_symmetric(self):
        a, b = "alpha", "alpha beta gamma"
        assert meteor(a, b) != meteor(b, a)

    def test_fragmented_alignment_pays_chunk_penalty(self):
        contiguous = meteor("a b c d", "a b c d")
        shuffled = meteor("c d a b", "a b c d")
        assert shuffled < contiguous


class TestPorterStem:
    # expected forms traced by hand through the published rule blocks
    VECTORS = [
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("ties", "ti"),
        ("caress", "caress"),
        ("cats", "cat"),
        ("feed", "feed"),
        ("agreed", "agre"),
        ("plastered", "plaster"),
        ("motoring", "motor"),
        ("running", "run"),
        ("hopping", "hop"),
        ("hoping", "hope"),
        ("falling", "fall"),
        ("hissing", "hiss"),
        ("filing", "file"),
        ("happy", "happi"),
        ("sky", "sky"),
        ("relational", "relat"),
        ("rational", "ration"),
        ("conditional", "condit"),
        ("triplicate", "triplic"),
        ("formative", "form"),
        ("electricity", "electr"),
        ("hopefulness", "hope"),
    ]

    @pytest.mark.parametrize("word,expected", VECTORS)
    def test_vectors(self, word, expected):
        assert porter_stem(word) == expected

    def test_short_words_untouched(self):
        assert porter_stem("is") == "is"
        assert porter_stem("a") == "a"

    def test_lowercases_input(self):
        assert porter_stem("Running") == "run"


# --------------------------------------------------------- classification


class TestClassificationF1:
    def test_perfect_prediction(self):
        corpus = make_corpus(
            ["x", "y", "z"], labels=["Relevant", "Irrelevant", "Relevant"]
        )
        score = classification_f1({"r00", "r02"}, corpus)
        assert score.as_tuple() == (1.0, 1.0, 1.0)

    def test_two_thirds_case(self):
        # predicted {a,b,c} against relevant {a,b,d}
        corpus = make_corpus(
            ["1", "2", "3", "4"],
            labels=["Relevant", "Relevant", "Irrelevant", "Relevant"],
        )
        score = classification_f1({"r00", "r01", "r02"}, corpus)
        assert score.precision == pytest.approx(2 / 3, abs=1e-12)
        assert score.recall == pytest.approx(2 / 3, abs=1e-12)
        assert score.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_empty_prediction(self):
        corpus = make_corpus(["x", "y"], labels=["Relevant", "Irrelevant"])
        assert classification_f1(set(), corpus).as_tuple() == (0.0, 0.0, 0.0)

    def test_unknown_predicted_id_rejected(self):
        corpus = make_corpus(["x"], labels=["Relevant"])
        with pytest.raises(MetricsError, match="not in the corpus"):
            classification_f1({"ghost"}, corpus)

    def test_missing_labels_rejected(self):
        corpus = make_corpus(["x", "y"])
        with pytest.raises(MetricsError, match="unlabeled"):
            classification_f1({"r00"}, corpus)


# ------------------------------------------------------------- model judge


class ScriptedJudge:
    """Chain stand-in that replays canned judge replies."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.calls = 0

    def chat(self, template_name, bindings, params=None):
        self.calls += 1
        return self.replies.pop(0)


class TestJudgeNarrative:
    def test_identical_texts_saturate(self, chain):
        text = "the courier moved the package through the border crossing"
        assert judge_narrative(chain, text, text) == (7, 7, 7)

    def test_disjoint_texts_floor(self, chain):
        assert judge_narrative(chain, "aa bb cc", "dd ee ff") == (1, 1, 1)

    def test_half_overlap_scores_mid_scale(self, chain):
        scores = judge_narrative(chain, "alpha beta zz qq", "alpha beta gamma delta")
        assert scores == (4, 4, 4)

    def test_unparseable_reply_retried_once(self):
        judge = ScriptedJudge(["no scores in sight", "relevance: 5\ncoverage: 3\nthoughtfulness: 5"])
        assert judge_narrative(judge, "n", "r") == (5, 3, 5)
        assert judge.calls == 2

    def test_second_parse_failure_raises(self):
        judge = ScriptedJudge(["nothing", "still nothing"])
        with pytest.raises(MetricsError, match="unparseable"):
            judge_narrative(judge, "n", "r")
        assert judge.calls == 2

    def test_out_of_scale_digits_do_not_parse(self):
        judge = ScriptedJudge(["8 9 0", "scores 15 27 31"])
        with pytest.raises(MetricsError):
            judge_narrative(judge, "n", "r")


# ------------------------------------------------------------ eval report


class TestEvalReport:
    def test_records_metric_variant_deviations(self):
        report = EvalReport(precision=0.5, recall=0.5, f1=0.5)
        variants = report.metadata["metric_variants"]
        assert "synonym" in variants["meteor"]
        assert "stemming" in variants["rouge"]

    def test_to_dict_shape(self):
        report = EvalReport(
            precision=1.0,
            recall=0.5,
            f1=2 / 3,
            rouge1=Score(0.1, 0.2, 0.3),
            judge=(5, 3, 5),
        )
        data = report.to_dict()
        assert data["rouge1"] == [0.1, 0.2, 0.3]
        assert data["rouge2"] is None
        assert data["judge"] == [5, 3, 5]
        assert data["metadata"]["metric_variants"]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"precision": 1.5, "recall": 0.0, "f1": 0.0},
            {"precision": 0.0, "recall": -0.1, "f1": 0.0},
            {"precision": 0.0, "recall": 0.0, "f1": 0.0, "meteor": 1.2},
            {"precision": 0.0, "recall": 0.0, "f1": 0.0, "rouge1": Score(1.1, 0.0, 0.0)},
            {"precision": 0.0, "recall": 0.0, "f1": 0.0, "judge": (0, 4, 4)},
            {"precision": 0.0, "recall": 0.0, "f1": 0.0, "judge": (8, 4, 4)},
        ],
    )
    def test_out_of_range_fields_rejected(self, kwargs):
        with pytest.raises(MetricsError):
            EvalReport(**kwargs)


def _labeled_corpus_with_truth(truth: str | None) -> Corpus:
    corpus = make_corpus(
        ["alpha beta", "gamma delta", "noise text"],
        labels=["Relevant", "Relevant", "Irrelevant"],
    )
    return Corpus(
        dataset_id=corpus.dataset_id,
        reports=corpus.reports,
        ground_truth_narrative=truth,
        labels_present=True,
    )


class TestEvaluateRun:
    def test_classification_only(self):
        corpus = _labeled_corpus_with_truth(None)
        report = evaluate_run({"r00", "r01"}, corpus)
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)
        assert report.rouge1 is None
        assert "narrative_metrics" not in report.metadata

    def test_narrative_metrics_need_ground_truth(self):
        corpus = _labeled_corpus_with_truth(None)
        report = evaluate_run({"r00", "r01"}, corpus, narrative="some story.")
        assert report.rouge1 is None
        assert report.metadata["narrative_metrics"].startswith("skipped")

    def test_full_evaluation(self):
        corpus = _labeled_corpus_with_truth("alpha beta moved gamma delta.")
        report = evaluate_run(
            {"r00", "r01"}, corpus, narrative="alpha beta moved gamma delta."
        )
        assert report.rouge1.f1 == 1.0
        assert report.rouge2.f1 == 1.0
        assert report.rougeLsum.f1 == 1.0
        assert report.meteor == pytest.approx(1.0, abs=1e-2)
        assert report.judge is None

    def test_judge_requires_chain(self):
        corpus = _labeled_corpus_with_truth("alpha beta.")
        with pytest.raises(MetricsError, match="chain"):
            evaluate_run({"r00"}, corpus, narrative="alpha beta.", use_judge=True)

    def test_judge_scores_included_when_requested(self):
        corpus = _labeled_corpus_with_truth("alpha beta gamma delta.")
        report = evaluate_run(
            {"r00"},
            corpus,
            narrative="alpha beta gamma delta.",
            chain=mock_chain(seed=0),
            use_judge=True,
        )
        assert report.judge == (7, 7, 7)


# ---------------------------------------------------------- pitfall matrix


class TestPitfallMatrix:
    def test_identical_pair_saturates_both_metrics(self):
        text = " ".join(VOCAB) + ". " + " ".join(reversed(VOCAB)) + "."
        matrix = pitfall_matrix([("first", text), ("second", text)])
        m, r1 = matrix.cells[(1, 0)]
        assert m == pytest.approx(1.0, abs=1e-3)
        assert r1 == 1.0

    def test_lower_triangle_only(self):
        matrix = pitfall_matrix(
            [("a", "alpha beta"), ("b", "alpha gamma"), ("c", "delta")]
        )
        assert set(matrix.cells) == {(1, 0), (2, 0), (2, 1)}

    def test_tsv_layout(self):
        matrix = pitfall_matrix([("left", "alpha beta"), ("right", "alpha beta")])
        lines = matrix.to_tsv().splitlines()
        assert lines[0] == "\tleft\tright"
        assert lines[1] == "left\tx\tx"
        cell = lines[2].split("\t")
        assert cell[0] == "right"
        assert "/" in cell[1]
        assert cell[2] == "x"
        assert matrix.to_tsv().endswith("\n")

    def test_needs_two_texts(self):
        with pytest.raises(MetricsError, match="at least 2"):
            pitfall_matrix([("only", "text")])

    def test_overlap_orders_scores(self):
        shared = "alpha beta gamma delta epsilon zeta"
        partial = "alpha beta gamma qq rr ss"
        unrelated = "one two three four five six"
        matrix = pitfall_matrix(
            [("gt", shared), ("near", partial), ("far", unrelated)]
        )
        assert matrix.cells[(1, 0)][0] > matrix.cells[(2, 0)][0]
        assert matrix.cells[(1, 0)][1] > matrix.cells[(2, 0)][1]


# ----------------------------------------------------------- fuzz checks


@given(a=text_st, b=text_st)
def test_scores_stay_in_unit_range(a, b):
    for n in (1, 2):
        assert all(0.0 <= v <= 1.0 for v in rouge_n(a, b, n).as_tuple())
    assert all(0.0 <= v <= 1.0 for v in rouge_lsum(a, b).as_tuple())
    assert 0.0 <= meteor(a, b) <= 1.0


@given(a=tokens_st, b=tokens_st)
def test_rouge_f1_is_symmetric(a, b):
    for n in (1, 2):
        assert (
            rouge_n(" ".join(a), " ".join(b), n).f1
            == rouge_n(" ".join(b), " ".join(a), n).f1
        )


@given(
    cand=tokens_st,
    ref=st.lists(st.sampled_from(VOCAB[:6]), min_size=1, max_size=10),
    start=st.integers(min_value=0, max_value=9),
    length=st.integers(min_value=1, max_value=5),
)
def test_appending_reference_tokens_never_lowers_recall(cand, ref, start, length):
    chunk = ref[start % len(ref) :][:length]
    extended = cand + chunk
    for n in (1, 2):
        before = rouge_n(" ".join(cand), " ".join(ref), n).recall
        after = rouge_n(" ".join(extended), " ".join(ref), n).recall
        assert after >= before
