from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from dotforest.textops import (
    STOPWORDS,
    capitalized_runs,
    collapse_ws,
    content_token_set,
    content_tokens,
    split_sentences,
    tokenize,
    trim_to_words,
)


class TestTokenize:
    def test_lowercases_and_splits_on_punctuation(self):
        assert tokenize("The SHIP, left: Boston!") == ["the", "ship", "left", "boston"]

    def test_digits_kept(self):
        assert tokenize("flight 815 departed") == ["flight", "815", "departed"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("...!?") == []

    @given(st.text())
    def test_tokens_are_lowercase_alnum(self, text):
        for token in tokenize(text):
            assert token
            assert all(c.islower() or c.isdigit() for c in token)


class TestContentTokens:
    def test_drops_stopwords(self):
        assert content_tokens("the ship was near the harbor") == ["ship", "harbor"]

    def test_set_variant(self):
        assert content_token_set("a ship and a ship") == {"ship"}

    def test_stopwords_are_lowercase(self):
        assert all(w == w.lower() for w in STOPWORDS)


class TestCollapseAndTrim:
    def test_collapse_ws(self):
        assert collapse_ws("  a\n\n b\t c ") == "a b c"

    def test_trim_keeps_short_text(self):
        assert trim_to_words("one two three", 5) == "one two three"

    def test_trim_cuts_on_whitespace_words(self):
        assert trim_to_words("one two three four", 2) == "one two"

    def test_trim_zero_limit_empty(self):
        assert trim_to_words("one two", 0) == ""


class TestSplitSentences:
    def test_terminal_punctuation(self):
        assert split_sentences("First here. Second there! Third?") == [
            "First here.",
            "Second there!",
            "Third?",
        ]

    def test_newlines_split(self):
        assert split_sentences("line one\nline two") == ["line one", "line two"]

    def test_no_empty_sentences(self):
        assert split_sentences("..  .\n\n") == []


class TestCapitalizedRuns:
    def test_single_and_multi_word(self):
        runs = capitalized_runs("Omar met Abu al Masri in Boston")
        assert "Abu al Masri" in runs
        assert "Omar" in runs
        assert "Boston" in runs

    def test_sentence_initial_word_still_detected(self):
        # crude by design: leading words count as candidates
        assert "Torches" in capitalized_runs("Torches were lit.")

    def test_run_length_cap(self):
        runs = capitalized_runs("Alpha Beta Gamma Delta Epsilon Zeta", max_len=4)
        assert all(len(r.split()) <= 4 for r in runs)
