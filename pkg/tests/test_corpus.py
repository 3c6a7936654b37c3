from __future__ import annotations

import json

import pytest

from dotforest.corpus import (
    Corpus,
    CorpusError,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from dotforest.core import Report
from dotforest.textops import STOPWORDS, content_token_set


def write_directory_corpus(root, bodies, labels=None, truth=None):
    root.mkdir(exist_ok=True)
    for i, (rid, body) in enumerate(bodies):
        (root / f"{i:03d}_{rid}.txt").write_text(body)
    if labels is not None:
        lines = "\n".join(f"{rid}\t{label}" for rid, label in labels)
        (root / "labels.tsv").write_text(lines + "\n")
    if truth is not None:
        (root / "ground_truth.txt").write_text(truth)
    return root


class TestCorpusType:
    def test_contiguous_ordinals_enforced(self):
        reports = [
            Report(id="a", ordinal=0, body="x"),
            Report(id="b", ordinal=2, body="y"),
        ]
        with pytest.raises(CorpusError):
            Corpus(dataset_id="d", reports=reports)

    def test_duplicate_ids_rejected(self):
        reports = [
            Report(id="a", ordinal=0, body="x"),
            Report(id="a", ordinal=1, body="y"),
        ]
        with pytest.raises(CorpusError):
            Corpus(dataset_id="d", reports=reports)

    def test_relevant_ids(self):
        reports = [
            Report(id="a", ordinal=0, body="x", truth_label="Relevant"),
            Report(id="b", ordinal=1, body="y", truth_label="Irrelevant"),
        ]
        corpus = Corpus(dataset_id="d", reports=reports, labels_present=True)
        assert corpus.relevant_ids() == {"a"}

    def test_label_of_unknown_id_rejected(self):
        corpus = Corpus(dataset_id="d", reports=[Report(id="a", ordinal=0, body="x")])
        with pytest.raises(CorpusError):
            corpus.label_of("zzz")


class TestDirectoryLoading:
    def test_three_files_no_labels(self, tmp_path):
        root = write_directory_corpus(
            tmp_path / "c", [("a", "one"), ("b", "two"), ("c", "three")]
        )
        corpus = load_corpus(root)
        assert len(corpus) == 3
        assert corpus.labels_present is False
        assert [r.id for r in corpus.reports] == ["a", "b", "c"]
        assert [r.ordinal for r in corpus.reports] == [0, 1, 2]

    def test_labels_and_truth_loaded(self, tmp_path):
        root = write_directory_corpus(
            tmp_path / "c",
            [("a", "one"), ("b", "two")],
            labels=[("a", "Relevant"), ("b", "Irrelevant")],
            truth="the truth narrative",
        )
        corpus = load_corpus(root)
        assert corpus.labels_present is True
        assert corpus.relevant_ids() == {"a"}
        assert corpus.ground_truth_narrative == "the truth narrative"

    def test_unknown_label_id_names_the_id(self, tmp_path):
        root = write_directory_corpus(
            tmp_path / "c", [("a", "one")], labels=[("ghost", "Relevant")]
        )
        with pytest.raises(CorpusError, match="ghost"):
            load_corpus(root)

    def test_bad_label_value_rejected(self, tmp_path):
        root = write_directory_corpus(
            tmp_path / "c", [("a", "one")], labels=[("a", "Maybe")]
        )
        with pytest.raises(CorpusError, match="Maybe"):
            load_corpus(root)

    def test_duplicate_ordinal_prefix_rejected(self, tmp_path):
        root = tmp_path / "c"
        root.mkdir()
        (root / "000_a.txt").write_text("one")
        (root / "000_b.txt").write_text("two")
        with pytest.raises(CorpusError, match="duplicate ordinal"):
            load_corpus(root)

    def test_bad_filename_rejected(self, tmp_path):
        root = tmp_path / "c"
        root.mkdir()
        (root / "report_a.txt").write_text("one")
        with pytest.raises(CorpusError, match="report_a.txt"):
            load_corpus(root)

    def test_gapped_ordinals_are_reassigned_contiguous(self, tmp_path):
        root = tmp_path / "c"
        root.mkdir()
        (root / "005_a.txt").write_text("one")
        (root / "009_b.txt").write_text("two")
        corpus = load_corpus(root)
        assert [r.ordinal for r in corpus.reports] == [0, 1]
        assert [r.id for r in corpus.reports] == ["a", "b"]

    def test_missing_path_rejected(self, tmp_path):
        with pytest.raises(CorpusError):
            load_corpus(tmp_path / "nope")

    def test_empty_directory_rejected(self, tmp_path):
        root = tmp_path / "c"
        root.mkdir()
        with pytest.raises(CorpusError):
            load_corpus(root)


class TestJsonlLoading:
    def test_records_sorted_by_ordinal(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        records = [
            {"id": "b", "ordinal": 1, "body": "second"},
            {"id": "a", "ordinal": 0, "body": "first", "truth_label": "Relevant"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in records))
        corpus = load_corpus(path)
        assert [r.id for r in corpus.reports] == ["a", "b"]
        assert corpus.labels_present is True
        assert corpus.dataset_id == "corpus"

    def test_bad_json_line_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "a", "ordinal": 0, "body": "x"}\n{oops\n')
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(path)

    def test_missing_body_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps({"id": "a", "ordinal": 0}))
        with pytest.raises(CorpusError):
            load_corpus(path)


class TestSaveRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        corpus = generate_synthetic(seed=3, n_relevant=4, n_noise=2)
        out = save_corpus(corpus, tmp_path / "saved")
        loaded = load_corpus(out)
        assert [r.id for r in loaded.reports] == [r.id for r in corpus.reports]
        assert [r.body for r in loaded.reports] == [r.body for r in corpus.reports]
        assert [r.truth_label for r in loaded.reports] == [
            r.truth_label for r in corpus.reports
        ]
        assert loaded.ground_truth_narrative == corpus.ground_truth_narrative
        assert loaded.labels_present == corpus.labels_present


class TestGenerateSynthetic:
    def test_deterministic_for_seed(self):
        a = generate_synthetic(seed=7)
        b = generate_synthetic(seed=7)
        assert [r.id for r in a.reports] == [r.id for r in b.reports]
        assert [r.body for r in a.reports] == [r.body for r in b.reports]
        assert a.ground_truth_narrative == b.ground_truth_narrative

    def test_different_seed_differs(self):
        a = generate_synthetic(seed=1)
        b = generate_synthetic(seed=2)
        assert [r.body for r in a.reports] != [r.body for r in b.reports]

    def test_counts_and_labels(self):
        corpus = generate_synthetic(seed=5, n_relevant=12, n_noise=8)
        assert len(corpus) == 20
        assert len(corpus.relevant_ids()) == 12
        assert corpus.labels_present is True

    def test_consecutive_plot_reports_share_overlap_tokens(self):
        corpus = generate_synthetic(seed=9, n_relevant=6, n_noise=0, overlap=3)
        by_id = {r.id: r for r in corpus.reports}
        for i in range(5):
            a = content_token_set(by_id[f"plot{i:02d}"].body)
            b = content_token_set(by_id[f"plot{i + 1:02d}"].body)
            assert len(a & b) >= 3

    def test_noise_disjoint_from_plot_and_each_other(self):
        corpus = generate_synthetic(seed=9, n_relevant=4, n_noise=4)
        plot_tokens: set[str] = set()
        noise_sets = []
        for report in corpus.reports:
            tokens = content_token_set(report.body)
            if report.id.startswith("plot"):
                plot_tokens |= tokens
            else:
                noise_sets.append(tokens)
        for noise in noise_sets:
            assert noise.isdisjoint(plot_tokens)
        for i, a in enumerate(noise_sets):
            for b in noise_sets[i + 1 :]:
                assert a.isdisjoint(b)

    def test_ground_truth_covers_plot_vocabulary(self):
        corpus = generate_synthetic(seed=11, n_relevant=5, n_noise=0)
        truth_tokens = content_token_set(corpus.ground_truth_narrative)
        plot_tokens: set[str] = set()
        for report in corpus.reports:
            plot_tokens |= content_token_set(report.body)
        assert plot_tokens == truth_tokens

    def test_glue_words_are_stopwords_only(self):
        corpus = generate_synthetic(seed=13, n_relevant=3, n_noise=1)
        # every non-stopword token of a plot body is plot vocabulary by design,
        # so sentence glue must vanish under the shared tokenizer
        for report in corpus.reports:
            for word in report.body.replace(".", "").lower().split():
                if word in STOPWORDS:
                    continue
                assert len(word) == 6, f"unexpected glue token {word!r}"

    def test_verbose_padding_appends_marker_segment(self):
        corpus = generate_synthetic(seed=7, n_relevant=3, n_noise=1, verbose_padding=5)
        for report in corpus.reports:
            assert "##" in report.body

    def test_validation_errors(self):
        with pytest.raises(CorpusError):
            generate_synthetic(seed=1, n_relevant=1)
        with pytest.raises(CorpusError):
            generate_synthetic(seed=1, overlap=0)
        with pytest.raises(CorpusError):
            generate_synthetic(seed=1, overlap=4, window=4)
        with pytest.raises(CorpusError):
            generate_synthetic(seed=1, plot_tokens=3)

    def test_ids_not_ordered_by_label(self):
        # the shuffle interleaves plot and noise: relevant ids must not all
        # precede noise ids in ordinal order
        corpus = generate_synthetic(seed=7)
        kinds = ["plot" if r.id.startswith("plot") else "noise" for r in corpus.reports]
        first_noise = kinds.index("noise")
        assert "plot" in kinds[first_noise:]
