"""Narrative and classification evaluation.

Everything here is implemented from first principles so the test suite can
check it against independent counting oracles: clipped n-gram ROUGE,
summary-level union-LCS ROUGE, two-stage METEOR with a suffix-stripping
stemmer, binary classification F1, model-judge Likert parsing, and the
pairwise pitfall matrix.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field

from .textops import split_sentences, tokenize

logger = logging.getLogger(__name__)

METRIC_VARIANTS = {
    "rouge": "no stemming, no stopword removal",
    "meteor": "exact + stem stages, no synonym stage",
}


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.precision, self.recall, self.f1)


def _f1(precision: float, recall: float) -> float:
    return (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )


# ------------------------------------------------------------------ ROUGE


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> Score:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise MetricsError(f"n must be >= 1, got {n}")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    if not cand or not ref:
        logger.info("rouge_%d: empty token sequence, returning zeros", n)
        return Score(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    return Score(precision, recall, _f1(precision, recall))


def lcs_table(a: list[str], b: list[str]) -> list[list[int]]:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table


def lcs_positions(reference: list[str], candidate: list[str]) -> set[int]:
    """Indices of `reference` tokens on one longest common subsequence.

    Backtrack convention, fixed so tests can mirror it: take the diagonal when
    the cell came from a match; otherwise move up (shrink the reference) when
    its value is >= the left cell's, else left.
    """
    table = lcs_table(reference, candidate)
    i, j = len(reference), len(candidate)
    hits: set[int] = set()
    while i > 0 and j > 0:
        if (
            reference[i - 1] == candidate[j - 1]
            and table[i][j] == table[i - 1][j - 1] + 1
        ):
            hits.add(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return hits


def rouge_lsum(candidate: str, reference: str) -> Score:
    """Summary-level LCS ROUGE.

    Per reference sentence, the union of LCS-matched reference-token positions
    against every candidate sentence is collected; matched tokens then consume
    candidate and reference token budgets so nothing is double-counted (one
    candidate token cannot satisfy several reference sentences). Hit totals
    are divided by the reference token count (recall) and candidate token
    count (precision).
    """
    cand_sentences = [tokenize(s) for s in split_sentences(candidate)]
    cand_sentences = [s for s in cand_sentences if s]
    ref_sentences = [tokenize(s) for s in split_sentences(reference)]
    ref_sentences = [s for s in ref_sentences if s]
    total_cand = sum(len(s) for s in cand_sentences)
    total_ref = sum(len(s) for s in ref_sentences)
    if total_cand == 0 or total_ref == 0:
        logger.info("rouge_lsum: empty token sequence, returning zeros")
        return Score(0.0, 0.0, 0.0)
    cand_budget = Counter(token for s in cand_sentences for token in s)
    ref_budget = Counter(token for s in ref_sentences for token in s)
    hits = 0
    for ref_sentence in ref_sentences:
        union: set[int] = set()
        for cand_sentence in cand_sentences:
            union |= lcs_positions(ref_sentence, cand_sentence)
        for position in sorted(union):
            token = ref_sentence[position]
            if cand_budget[token] > 0 and ref_budget[token] > 0:
                hits += 1
                cand_budget[token] -= 1
                ref_budget[token] -= 1
    precision = hits / total_cand
    recall = hits / total_ref
    return Score(precision, recall, _f1(precision, recall))


# ----------------------------------------------------------------- METEOR


_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count of vowel-to-consonant transitions: the [C](VC)^m[V] exponent."""
    m = 0
    previous_vowel = False
    for i in range(len(stem)):
        if _is_consonant(stem, i):
            if previous_vowel:
                m += 1
            previous_vowel = False
        else:
            previous_vowel = True
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def porter_stem(word: str) -> str:
    """Classic suffix-stripping stemmer for English, from the original rules.

    Within each rule block the longest matching suffix decides; if its
    condition fails no other rule in the block fires.
    """
    word = word.lower()
    if len(word) <= 2:
        return word

    # Step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("ss"):
        pass
    elif word.endswith("s"):
        word = word[:-1]

    # Step 1b
    flag_1b = False
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    elif word.endswith("ed"):
        if _contains_vowel(word[:-2]):
            word = word[:-2]
            flag_1b = True
    elif word.endswith("ing"):
        if _contains_vowel(word[:-3]):
            word = word[:-3]
            flag_1b = True
    if flag_1b:
        if word.endswith(("at", "bl", "iz")):
            word += "e"
        elif _ends_double_consonant(word) and word[-1] not in "lsz":
            word = word[:-1]
        elif _measure(word) == 1 and _ends_cvc(word):
            word += "e"

    # Step 1c
    if word.endswith("y") and _contains_vowel(word[:-1]):
        word = word[:-1] + "i"

    # Step 2
    step2 = (
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
        ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
        ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
        ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
    )
    word = _apply_longest(word, step2, minimum_measure=1)

    # Step 3
    step3 = (
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    )
    word = _apply_longest(word, step3, minimum_measure=1)

    # Step 4
    step4 = (
        ("al", ""), ("ance", ""), ("ence", ""), ("er", ""), ("ic", ""),
        ("able", ""), ("ible", ""), ("ant", ""), ("ement", ""), ("ment", ""),
        ("ent", ""), ("ion", ""), ("ou", ""), ("ism", ""), ("ate", ""),
        ("iti", ""), ("ous", ""), ("ive", ""), ("ize", ""),
    )
    best = _longest_suffix(word, step4)
    if best is not None:
        suffix, _ = best
        stem = word[: len(word) - len(suffix)]
        if _measure(stem) > 1:
            if suffix != "ion" or (stem and stem[-1] in "st"):
                word = stem

    # Step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # Step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        word = word[:-1]

    return word


def _longest_suffix(word: str, rules: tuple) -> tuple[str, str] | None:
    best: tuple[str, str] | None = None
    for suffix, replacement in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, replacement)
    return best


def _apply_longest(word: str, rules: tuple, minimum_measure: int) -> str:
    best = _longest_suffix(word, rules)
    if best is None:
        return word
    suffix, replacement = best
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) >= minimum_measure:
        return stem + replacement
    return word


def _greedy_stage(
    candidate: list[str],
    reference: list[str],
    cand_open: list[int],
    ref_open: list[int],
    key,
) -> list[tuple[int, int]]:
    """In-order greedy alignment: each open candidate token takes the first
    open reference token with an equal key."""
    pairs: list[tuple[int, int]] = []
    used: set[int] = set()
    ref_keys = [(j, key(reference[j])) for j in ref_open]
    for i in cand_open:
        wanted = key(candidate[i])
        for j, ref_key in ref_keys:
            if j in used or ref_key != wanted:
                continue
            pairs.append((i, j))
            used.add(j)
            break
    return pairs


def meteor(candidate: str, reference: str) -> float:
    """Unigram-alignment score: exact stage, then stem stage on the leftovers.

    Fmean = 10PR / (R + 9P); penalty = 0.5 * (chunks / matches)^3;
    score = Fmean * (1 - penalty). Zero when nothing aligns.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0

    pairs = _greedy_stage(cand, ref, list(range(len(cand))), list(range(len(ref))), lambda t: t)
    matched_cand = {i for i, _ in pairs}
    matched_ref = {j for _, j in pairs}
    stem_pairs = _greedy_stage(
        cand,
        ref,
        [i for i in range(len(cand)) if i not in matched_cand],
        [j for j in range(len(ref)) if j not in matched_ref],
        porter_stem,
    )
    pairs += stem_pairs
    matches = len(pairs)
    if matches == 0:
        return 0.0

    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean = 10 * precision * recall / (recall + 9 * precision)

    pairs.sort()
    chunks = 1
    for (ci, ri), (cj, rj) in zip(pairs, pairs[1:]):
        if cj != ci + 1 or rj != ri + 1:
            chunks += 1
    penalty = 0.5 * (chunks / matches) ** 3
    return fmean * (1 - penalty)


# --------------------------------------------------------- classification


def classification_f1(predicted: set[str], corpus) -> Score:
    """Binary precision/recall/F1 with the Relevant label as positive class."""
    known = corpus.report_ids()
    for report_id in predicted:
        if report_id not in known:
            raise MetricsError(f"predicted id {report_id!r} not in the corpus")
    unlabeled = [r.id for r in corpus.reports if r.truth_label is None]
    if unlabeled:
        raise MetricsError(
            f"corpus has unlabeled reports (first: {unlabeled[0]!r})"
        )
    relevant = corpus.relevant_ids()
    true_positive = len(predicted & relevant)
    precision = true_positive / len(predicted) if predicted else 0.0
    recall = true_positive / len(relevant) if relevant else 0.0
    return Score(precision, recall, _f1(precision, recall))


# ------------------------------------------------------------- model judge

JUDGE_QUALITIES = ("relevance", "coverage", "thoughtfulness")

_JUDGE_INT_RE = re.compile(r"\b([1-7])\b")


def judge_narrative(
    chain,
    narrative: str,
    reference: str,
    qualities: tuple[str, ...] = JUDGE_QUALITIES,
    params=None,
) -> tuple[int, ...]:
    """Likert 1-7 scores, one per quality, parsed from a structured reply.

    An unparseable reply is retried once; a second failure raises.
    """
    bindings = {"narrative": narrative, "reference": reference}
    for attempt in range(2):
        reply = chain.chat("judge", bindings, params)
        found = _JUDGE_INT_RE.findall(reply)
        if len(found) >= len(qualities):
            return tuple(int(v) for v in found[: len(qualities)])
        logger.warning("judge reply unparseable (attempt %d): %r", attempt + 1, reply)
    raise MetricsError("judge reply unparseable after retry")


# ------------------------------------------------------------ eval report


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    rouge1: Score | None = None
    rouge2: Score | None = None
    rougeLsum: Score | None = None
    meteor: float | None = None
    judge: tuple[int, ...] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("precision", "recall", "f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise MetricsError(f"{name} {value} outside [0, 1]")
        for name in ("rouge1", "rouge2", "rougeLsum"):
            score = getattr(self, name)
            if score is not None and not all(0.0 <= v <= 1.0 for v in score.as_tuple()):
                raise MetricsError(f"{name} {score} outside [0, 1]")
        if self.meteor is not None and not 0.0 <= self.meteor <= 1.0:
            raise MetricsError(f"meteor {self.meteor} outside [0, 1]")
        if self.judge is not None and not all(1 <= v <= 7 for v in self.judge):
            raise MetricsError(f"judge {self.judge} outside 1..7")
        self.metadata.setdefault("metric_variants", dict(METRIC_VARIANTS))

    def to_dict(self) -> dict:
        def triple(score: Score | None):
            return None if score is None else list(score.as_tuple())

        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "rouge1": triple(self.rouge1),
            "rouge2": triple(self.rouge2),
            "rougeLsum": triple(self.rougeLsum),
            "meteor": self.meteor,
            "judge": None if self.judge is None else list(self.judge),
            "metadata": self.metadata,
        }


def evaluate_run(
    predicted: set[str],
    corpus,
    narrative: str | None = None,
    chain=None,
    use_judge: bool = False,
) -> EvalReport:
    """Bundle classification and (when ground truth exists) narrative metrics."""
    classification = classification_f1(predicted, corpus)
    reference = corpus.ground_truth_narrative
    report = EvalReport(
        precision=classification.precision,
        recall=classification.recall,
        f1=classification.f1,
    )
    if narrative is not None and reference:
        report.rouge1 = rouge_n(narrative, reference, 1)
        report.rouge2 = rouge_n(narrative, reference, 2)
        report.rougeLsum = rouge_lsum(narrative, reference)
        report.meteor = meteor(narrative, reference)
        if use_judge:
            if chain is None:
                raise MetricsError("judge scoring needs a provider chain")
            report.judge = judge_narrative(chain, narrative, reference)
    elif narrative is not None:
        report.metadata["narrative_metrics"] = "skipped: no ground truth narrative"
    return report


# ---------------------------------------------------------- pitfall matrix


@dataclass
class PitfallMatrix:
    labels: list[str]
    cells: dict[tuple[int, int], tuple[float, float]]  # (row, col) -> (meteor, rouge1)

    def to_tsv(self) -> str:
        lines = ["\t".join([""] + self.labels)]
        for i, row_label in enumerate(self.labels):
            row = [row_label]
            for j in range(len(self.labels)):
                if (i, j) in self.cells:
                    m, r1 = self.cells[(i, j)]
                    row.append(f"{m:.4f}/{r1:.4f}")
                else:
                    row.append("x")
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def pitfall_matrix(texts: list[tuple[str, str]]) -> PitfallMatrix:
    """Pairwise lower-triangular (METEOR, ROUGE-1 F1) over labeled texts.

    Cell (i, j) for i > j scores texts[i] as candidate against texts[j] as
    reference, exposing how much surface-overlap metrics reward unrelated
    accounts.
    """
    if len(texts) < 2:
        raise MetricsError("pitfall matrix needs at least 2 texts")
    labels = [label for label, _ in texts]
    cells: dict[tuple[int, int], tuple[float, float]] = {}
    for i in range(len(texts)):
        for j in range(i):
            candidate, reference = texts[i][1], texts[j][1]
            cells[(i, j)] = (
                meteor(candidate, reference),
                rouge_n(candidate, reference, 1).f1,
            )
    return PitfallMatrix(labels=labels, cells=cells)
