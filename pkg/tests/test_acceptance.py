"""Acceptance suite: one test per shipped criterion, each emitting a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS/FAIL lines alongside pytest's own report.
"""
from __future__ import annotations

import contextlib
import random
import time

import numpy as np
import pytest

from conftest import make_corpus
from dotforest.core import serialize_forest
from dotforest.corpus import Corpus, Report, generate_synthetic
from dotforest.metrics import classification_f1, meteor, rouge_lsum, rouge_n
from dotforest.pipeline import RunConfig, run_pipeline
from dotforest.retriever import VectorIndex
from dotforest.textops import split_sentences, tokenize
from oracles import brute_force_cosine_topk, clipped_ngram_rouge, union_lcs_rouge

VOCAB = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta",
    "eta", "theta", "iota", "kappa", "mu", "nu",
]


@contextlib.contextmanager
def verdict(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    else:
        print(f"ACCEPTANCE {number} {name}: PASS")


def _mock_run(corpus: Corpus, **overrides):
    config = RunConfig(seed=0, out_dir=None, **overrides)
    return run_pipeline(config, corpus=corpus)


def test_criterion_1_structural_audits():
    with verdict(1, "structural audits, seeds 1-5"):
        for seed in range(1, 6):
            corpus = generate_synthetic(seed=seed)
            started = time.perf_counter()
            forest, _ = _mock_run(corpus)
            elapsed = time.perf_counter() - started
            violations = forest.audit()
            assert violations == [], f"seed {seed}: {violations}"
            assert elapsed < 5.0, f"seed {seed} took {elapsed:.2f}s"


def test_criterion_2_plot_recovery():
    with verdict(2, "plot recovery on the planted corpus"):
        corpus = generate_synthetic(seed=7, n_relevant=12, n_noise=8, overlap=3)
        _, result = _mock_run(corpus)
        planted = corpus.relevant_ids()
        predicted = set(result.predicted_relevant)
        recall = len(predicted & planted) / len(planted)
        assert recall >= 0.90, f"main-thread recall {recall:.3f}"
        f1 = classification_f1(predicted, corpus).f1
        assert f1 >= 0.85, f"classification F1 {f1:.3f}"


def test_criterion_3_retrieval_exactness():
    with verdict(3, "retrieval equals the brute-force oracle"):
        rng = np.random.default_rng(123)
        index = VectorIndex(dimension=64)
        ids = [f"v{i:04d}" for i in range(1000)]
        vectors = [rng.normal(size=64) for _ in ids]
        for entry_id, vector in zip(ids, vectors):
            index.add(entry_id, vector)
        queries = [rng.normal(size=64) for _ in range(20)]

        searched = 0.0
        for query in queries:
            for k in (1, 5, 10):
                started = time.perf_counter()
                got = index.search(query, k=k)
                searched += time.perf_counter() - started
                expected = brute_force_cosine_topk(ids, vectors, query, k=k)
                assert [i for i, _ in got] == [i for i, _ in expected]
        assert searched < 2.0, f"searches took {searched:.2f}s"


def test_criterion_4_metric_oracles():
    with verdict(4, "metric oracles"):
        rng = random.Random(211)

        def text(max_len: int = 30) -> str:
            return " ".join(
                rng.choice(VOCAB) for _ in range(rng.randrange(max_len + 1))
            )

        for _ in range(100):
            cand, ref = text(), text()
            for n in (1, 2):
                assert rouge_n(cand, ref, n).as_tuple() == clipped_ngram_rouge(
                    cand, ref, n
                )

        for _ in range(100):
            cand = ". ".join(text(8) for _ in range(rng.randrange(1, 4))) + "."
            ref = ". ".join(text(8) for _ in range(rng.randrange(1, 4))) + "."
            cand_sents = [t for t in (tokenize(s) for s in split_sentences(cand)) if t]
            ref_sents = [t for t in (tokenize(s) for s in split_sentences(ref)) if t]
            assert rouge_lsum(cand, ref).as_tuple() == union_lcs_rouge(
                cand_sents, ref_sents
            )

        assert meteor("a b c d", "a b c d") == pytest.approx(0.9921875, abs=1e-9)


def test_criterion_5_classification_arithmetic():
    with verdict(5, "classification arithmetic"):
        corpus = make_corpus(
            ["1", "2", "3", "4"],
            labels=["Relevant", "Relevant", "Irrelevant", "Relevant"],
        )
        score = classification_f1({"r00", "r01", "r02"}, corpus)
        for value in score.as_tuple():
            assert value == pytest.approx(2 / 3, abs=1e-12)

        perfect = classification_f1({"r00", "r01", "r03"}, corpus)
        for value in perfect.as_tuple():
            assert value == pytest.approx(1.0, abs=1e-12)


def test_criterion_6_determinism():
    with verdict(6, "byte-identical mock runs"):
        corpus = generate_synthetic(seed=11)
        outputs = []
        for _ in range(2):
            forest, result = _mock_run(corpus)
            outputs.append(
                (serialize_forest(forest).encode(), result.narrative.encode())
            )
        assert outputs[0][0] == outputs[1][0], "forests differ"
        assert outputs[0][1] == outputs[1][1], "narratives differ"


def test_criterion_7_condensation_ablation_direction():
    with verdict(7, "condensation ablation direction"):
        corpus = generate_synthetic(seed=13, verbose_padding=3)
        _, with_condense = _mock_run(corpus, condense=True)
        _, without_condense = _mock_run(corpus, condense=False)
        f1_on = classification_f1(set(with_condense.predicted_relevant), corpus).f1
        f1_off = classification_f1(
            set(without_condense.predicted_relevant), corpus
        ).f1
        assert f1_off <= f1_on, f"off={f1_off:.3f} on={f1_on:.3f}"


def _pitfall_corpus(tag: str, unique: list[str], common: list[str]) -> Corpus:
    # interleave unique and shared tokens into one 18-token plot vocabulary
    vocab: list[str] = []
    shared = iter(common)
    for i, token in enumerate(unique):
        vocab.append(token)
        if i % 2 == 1:
            vocab.append(next(shared))
    width, stride = 6, 3
    reports = []
    for ordinal in range((len(vocab) - width) // stride + 1):
        body = " ".join(vocab[ordinal * stride : ordinal * stride + width]) + "."
        reports.append(
            Report(
                id=f"{tag}{ordinal:02d}",
                ordinal=ordinal,
                title=f"field note {ordinal}",
                body=body,
                truth_label="Relevant",
            )
        )
    sentences = [
        " ".join(vocab[i : i + 6]) + "." for i in range(0, len(vocab), 6)
    ]
    return Corpus(
        dataset_id=f"pitfall-{tag}",
        reports=reports,
        ground_truth_narrative=" ".join(sentences),
        labels_present=True,
    )


def test_criterion_8_pitfall_ordering():
    with verdict(8, "pitfall score ordering"):
        common = [f"comm{c}ra" for c in "abcdef"]
        corpora = [
            _pitfall_corpus(tag, [f"{tag}{c}to" for c in "abcdefghijkl"], common)
            for tag in ("nova", "zephyr", "oriel")
        ]
        narratives = [_mock_run(corpus)[1].narrative for corpus in corpora]
        truths = [corpus.ground_truth_narrative for corpus in corpora]
        random_text = " ".join(f"rnd{c}ul" for c in "abcdefghijklmnopqr")

        def scores(candidate: str, reference: str) -> tuple[float, float]:
            return meteor(candidate, reference), rouge_n(candidate, reference, 1).f1

        same = [scores(narratives[i], truths[i]) for i in range(3)]
        cross = [
            scores(narratives[i], truths[j])
            for i in range(3)
            for j in range(3)
            if i != j
        ]
        rand = [scores(random_text, truth) for truth in truths]

        for metric in (0, 1):
            lowest_same = min(pair[metric] for pair in same)
            highest_cross = max(pair[metric] for pair in cross)
            lowest_cross = min(pair[metric] for pair in cross)
            highest_rand = max(pair[metric] for pair in rand)
            assert lowest_same > highest_cross, (
                f"metric {metric}: same {lowest_same:.3f} vs cross {highest_cross:.3f}"
            )
            assert lowest_cross > highest_rand, (
                f"metric {metric}: cross {lowest_cross:.3f} vs random {highest_rand:.3f}"
            )
