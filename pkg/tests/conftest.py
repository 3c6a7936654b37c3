from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dotforest.corpus import Report, Corpus
from dotforest.providers import GenerationParams, mock_chain


@pytest.fixture
def chain():
    return mock_chain(seed=0)


@pytest.fixture
def params():
    return GenerationParams(temperature=0.7, word_limit=100)


def make_report(id: str, ordinal: int, body: str, title: str = "", label: str | None = None) -> Report:
    return Report(
        id=id,
        ordinal=ordinal,
        title=title or f"report {ordinal}",
        body=body,
        truth_label=label,
    )


def make_corpus(bodies: list[str], labels: list[str] | None = None, dataset_id: str = "test") -> Corpus:
    reports = []
    for i, body in enumerate(bodies):
        label = labels[i] if labels else None
        reports.append(make_report(f"r{i:02d}", i, body, label=label))
    return Corpus(dataset_id=dataset_id, reports=reports)
