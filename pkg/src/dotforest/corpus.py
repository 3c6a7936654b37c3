"""Corpus ingestion and the synthetic plot generator used for offline testing.

Two on-disk layouts are supported: a directory of `NNN_<id>.txt` files with
optional `labels.tsv` and `ground_truth.txt` siblings, and a single JSON-lines
file with one record per report.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .core import Report
from .textops import STOPWORDS

LABELS_FILENAME = "labels.tsv"
GROUND_TRUTH_FILENAME = "ground_truth.txt"

_REPORT_FILE_RE = re.compile(r"^(\d+)_(.+)\.txt$")


class CorpusError(Exception):
    pass


@dataclass
class Corpus:
    dataset_id: str
    reports: list[Report] = field(default_factory=list)
    ground_truth_narrative: str | None = None
    labels_present: bool = False

    def __post_init__(self) -> None:
        seen_ids: set[str] = set()
        for position, report in enumerate(self.reports):
            if report.ordinal != position:
                raise CorpusError(
                    f"ordinals must be contiguous from 0:"
                    f" report {report.id!r} has ordinal {report.ordinal},"
                    f" expected {position}"
                )
            if report.id in seen_ids:
                raise CorpusError(f"duplicate report id {report.id!r}")
            seen_ids.add(report.id)

    def __len__(self) -> int:
        return len(self.reports)

    def report_ids(self) -> set[str]:
        return {r.id for r in self.reports}

    def relevant_ids(self) -> set[str]:
        return {r.id for r in self.reports if r.truth_label == "Relevant"}

    def label_of(self, report_id: str) -> str | None:
        for report in self.reports:
            if report.id == report_id:
                return report.truth_label
        raise CorpusError(f"unknown report id {report_id!r}")


# ----------------------------------------------------------------- loading


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus from a directory layout or a JSON-lines file."""
    path = Path(path)
    if path.is_dir():
        return _load_directory(path)
    if path.is_file():
        return _load_jsonl(path)
    raise CorpusError(f"no such corpus path: {path}")


def _load_directory(directory: Path) -> Corpus:
    entries: list[tuple[int, str, Path]] = []
    for item in sorted(directory.iterdir()):
        if not item.is_file() or item.suffix != ".txt":
            continue
        if item.name == GROUND_TRUTH_FILENAME:
            continue
        match = _REPORT_FILE_RE.match(item.name)
        if not match:
            raise CorpusError(
                f"report file name {item.name!r} does not match NNN_<id>.txt"
            )
        entries.append((int(match.group(1)), match.group(2), item))
    if not entries:
        raise CorpusError(f"no report files in {directory}")

    entries.sort(key=lambda e: (e[0], e[2].name))
    seen_prefix: dict[int, str] = {}
    for prefix, _, item in entries:
        if prefix in seen_prefix:
            raise CorpusError(
                f"duplicate ordinal {prefix}: {seen_prefix[prefix]!r} and {item.name!r}"
            )
        seen_prefix[prefix] = item.name

    reports: list[Report] = []
    for position, (_, report_id, item) in enumerate(entries):
        try:
            body = item.read_text(encoding="utf-8")
        except OSError as exc:
            raise CorpusError(f"unreadable report file {item.name!r}: {exc}") from None
        try:
            reports.append(
                Report(id=report_id, ordinal=position, body=body, title=report_id)
            )
        except Exception as exc:
            raise CorpusError(f"bad report {item.name!r}: {exc}") from None

    labels_present = _apply_labels(directory / LABELS_FILENAME, reports)
    truth_path = directory / GROUND_TRUTH_FILENAME
    ground_truth = (
        truth_path.read_text(encoding="utf-8") if truth_path.is_file() else None
    )
    return Corpus(
        dataset_id=directory.name,
        reports=reports,
        ground_truth_narrative=ground_truth,
        labels_present=labels_present,
    )


def _apply_labels(labels_path: Path, reports: list[Report]) -> bool:
    if not labels_path.is_file():
        return False
    by_id = {r.id: r for r in reports}
    for line_number, line in enumerate(
        labels_path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise CorpusError(
                f"labels line {line_number} is not 'id<TAB>label': {line!r}"
            )
        report_id, label = parts[0].strip(), parts[1].strip()
        if report_id not in by_id:
            raise CorpusError(f"labels file names unknown report id {report_id!r}")
        if label not in ("Relevant", "Irrelevant"):
            raise CorpusError(
                f"labels line {line_number}: label must be Relevant or Irrelevant,"
                f" got {label!r}"
            )
        by_id[report_id].truth_label = label
    return True


def _load_jsonl(path: Path) -> Corpus:
    records = []
    for line_number, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorpusError(f"bad record at line {line_number}: {exc}") from None
    if not records:
        raise CorpusError(f"no records in {path}")
    records.sort(key=lambda r: (r.get("ordinal", 0), str(r.get("id", ""))))
    reports = []
    labels_present = False
    for position, record in enumerate(records):
        try:
            report = Report(
                id=str(record["id"]),
                ordinal=position,
                body=record["body"],
                title=record.get("title", ""),
                date=record.get("date"),
                truth_label=record.get("truth_label"),
            )
        except Exception as exc:
            raise CorpusError(f"bad record for id {record.get('id')!r}: {exc}") from None
        if report.truth_label is not None:
            labels_present = True
        reports.append(report)
    return Corpus(
        dataset_id=path.stem, reports=reports, labels_present=labels_present
    )


def save_corpus(corpus: Corpus, directory: str | Path) -> Path:
    """Write the canonical directory layout; load(save(c)) round-trips exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(max(len(corpus.reports) - 1, 0))))
    for report in corpus.reports:
        name = f"{report.ordinal:0{width}d}_{report.id}.txt"
        (directory / name).write_text(report.body, encoding="utf-8")
    if corpus.labels_present:
        lines = [
            f"{r.id}\t{r.truth_label}"
            for r in corpus.reports
            if r.truth_label is not None
        ]
        (directory / LABELS_FILENAME).write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )
    if corpus.ground_truth_narrative is not None:
        (directory / GROUND_TRUTH_FILENAME).write_text(
            corpus.ground_truth_narrative, encoding="utf-8"
        )
    return directory


# ------------------------------------------------------------- generation

_CONSONANTS = "bcdfgklmnprstvz"
_VOWELS = "aeiou"


def _invent_token(rng: random.Random, taken: set[str]) -> str:
    while True:
        token = "".join(
            rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(3)
        )
        if token not in taken and token not in STOPWORDS:
            taken.add(token)
            return token


def _sentence(tokens: list[str]) -> str:
    # Glue words are all stopwords so only the planted tokens carry signal.
    glue = ["near the", "and the", "with the", "after the", "by the"]
    parts = [f"The {tokens[0]}"]
    for i, token in enumerate(tokens[1:]):
        parts.append(f"{glue[i % len(glue)]} {token}")
    return " ".join(parts) + "."


def generate_synthetic(
    seed: int,
    n_relevant: int = 12,
    n_noise: int = 8,
    plot_tokens: int | None = None,
    overlap: int = 3,
    window: int | None = None,
    verbose_padding: int = 0,
    dataset_id: str | None = None,
) -> Corpus:
    """Deterministic planted-plot corpus.

    Relevant reports walk a sliding window over one plot vocabulary so that
    consecutive plot reports share at least `overlap` tokens; noise reports
    draw from mutually disjoint vocabularies and share nothing. The ground
    truth narrative is the plot vocabulary rendered as sentences.

    `verbose_padding` > 0 appends a "## <junk>" segment of that many unique
    throwaway tokens to every body, which condensation can split away but a
    raw-body run cannot.
    """
    if n_relevant < 2:
        raise CorpusError("need at least 2 relevant reports")
    if n_noise < 0:
        raise CorpusError("n_noise must be >= 0")
    if overlap < 1:
        raise CorpusError("overlap must be >= 1")
    width = window if window is not None else overlap + 2
    if overlap >= width:
        raise CorpusError(
            f"overlap {overlap} does not fit the body budget (window {width})"
        )
    stride = width - overlap
    if plot_tokens is None:
        # Exactly enough vocabulary for the windows to walk without wrapping.
        plot_tokens = (n_relevant - 1) * stride + width
    if plot_tokens < width + 1:
        raise CorpusError(
            f"plot_tokens {plot_tokens} too small for window {width}"
        )

    rng = random.Random(seed)
    taken: set[str] = set()
    vocabulary = [_invent_token(rng, taken) for _ in range(plot_tokens)]

    bodies: list[tuple[str, str, str]] = []  # (id, body, label)
    for i in range(n_relevant):
        start = (i * stride) % plot_tokens
        tokens = [vocabulary[(start + j) % plot_tokens] for j in range(width)]
        bodies.append((f"plot{i:02d}", _sentence(tokens), "Relevant"))
    for j in range(n_noise):
        tokens = [_invent_token(rng, taken) for _ in range(width)]
        bodies.append((f"noise{j:02d}", _sentence(tokens), "Irrelevant"))

    if verbose_padding > 0:
        padded = []
        for report_id, body, label in bodies:
            junk = " ".join(_invent_token(rng, taken) for _ in range(verbose_padding))
            padded.append((report_id, f"{body} ## The {junk}.", label))
        bodies = padded

    rng.shuffle(bodies)
    reports = [
        Report(
            id=report_id,
            ordinal=position,
            body=body,
            title=f"field note {position}",
            truth_label=label,
        )
        for position, (report_id, body, label) in enumerate(bodies)
    ]

    truth_lines = [
        _sentence(vocabulary[i : i + 6]) for i in range(0, plot_tokens, 6)
    ]
    return Corpus(
        dataset_id=dataset_id or f"synthetic{seed}",
        reports=reports,
        ground_truth_narrative="\n".join(truth_lines) + "\n",
        labels_present=True,
    )
