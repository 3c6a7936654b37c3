"""End-to-end orchestration: sequential report ingestion, forest growth,
narrative generation, and the person-centric forest variant.

Reports are processed strictly in ordinal order to simulate evidence arriving
over time. Each report is condensed into dots; each dot is merged against the
existing forest before being indexed itself.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .condenser import condense_report, dynamic_split
from .core import (
    EvidenceForest,
    ForestVariant,
    Report,
    Thread,
    export_dot_graph,
    write_forest,
)
from .corpus import Corpus, load_corpus
from .merger import DEFAULT_MAX_DEPTH, MergeSettings, retrieve_and_merge
from .providers import (
    ChainError,
    GenerationParams,
    ProviderChain,
    load_provider_config,
    mock_chain,
)
from .retriever import DEFAULT_SIMILARITY_FLOOR, DEFAULT_TOP_K
from .textops import collapse_ws, trim_to_words

logger = logging.getLogger(__name__)


class PipelineError(Exception):
    pass


@dataclass
class RunConfig:
    dataset: str | Path | None = None
    variant: ForestVariant = ForestVariant.REGULAR
    provider_config: str | Path | None = None
    temperature: float = 0.7
    word_limit: int = 100
    k: int = DEFAULT_TOP_K
    similarity_floor: float = DEFAULT_SIMILARITY_FLOOR
    max_depth: int = DEFAULT_MAX_DEPTH
    condense: bool = True
    search_all_dots: bool = True
    seed: int = 0
    out_dir: str | Path | None = None

    def generation_params(self) -> GenerationParams:
        return GenerationParams(
            temperature=self.temperature, word_limit=self.word_limit, seed=self.seed
        )

    def merge_settings(self) -> MergeSettings:
        return MergeSettings(
            k=self.k,
            similarity_floor=self.similarity_floor,
            max_depth=self.max_depth,
            search_all_dots=self.search_all_dots,
        )

    def snapshot(self) -> dict:
        data = asdict(self)
        data["variant"] = self.variant.value
        data["dataset"] = None if self.dataset is None else str(self.dataset)
        data["provider_config"] = (
            None if self.provider_config is None else str(self.provider_config)
        )
        data["out_dir"] = None if self.out_dir is None else str(self.out_dir)
        return data


@dataclass
class NarrativeResult:
    narrative: str
    main_thread: Thread
    predicted_relevant: frozenset[str]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "narrative": self.narrative,
            "main_thread": {
                "root": self.main_thread.root,
                "member_dots": sorted(self.main_thread.member_dots),
                "evidential_leaves": sorted(self.main_thread.evidential_leaves),
                "covered_reports": sorted(self.main_thread.covered_reports),
            },
            "predicted_relevant": sorted(self.predicted_relevant),
            "metadata": self.metadata,
        }


def build_chain(config: RunConfig) -> ProviderChain:
    if config.provider_config is not None:
        return load_provider_config(config.provider_config)
    return mock_chain(seed=config.seed, params=config.generation_params())


def run_pipeline(
    config: RunConfig,
    corpus: Corpus | None = None,
    chain: ProviderChain | None = None,
) -> tuple[EvidenceForest, NarrativeResult]:
    """Build the forest for a corpus and narrate its dominant thread.

    Dataset problems abort before any model call. A provider failure while
    processing one report keeps the dot (raw body if condensation failed) and
    skips merging for it; narrative-generation failures propagate.
    """
    if corpus is None:
        if config.dataset is None:
            raise PipelineError("no dataset given")
        corpus = load_corpus(config.dataset)
    chain = chain or build_chain(config)
    if config.variant is ForestVariant.PERSON_BASED:
        return build_person_forest(config, corpus, chain)

    params = config.generation_params()
    settings = config.merge_settings()
    started = time.perf_counter()
    forest = EvidenceForest(
        dataset_id=corpus.dataset_id,
        variant=ForestVariant.REGULAR,
        dimension=chain.dimension,
    )

    failed_reports = 0
    for report in corpus.reports:
        texts, degraded = _dot_texts(chain, report, params, config.condense)
        if degraded:
            failed_reports += 1
        for text in texts:
            dot_id = forest.add_evidential_dot(report, text)
            vector = None
            try:
                vector = chain.embed(text)
            except ChainError as exc:
                logger.warning(
                    "embed failed for %s; dot stays unindexed, merge skipped: %s",
                    dot_id,
                    exc,
                )
            if vector is not None and not degraded:
                retrieve_and_merge(
                    chain,
                    forest,
                    dot_id,
                    settings=settings,
                    params=params,
                    query_vector=vector,
                )
            if vector is not None:
                forest.index.add(dot_id, vector)

    narrative = generate_narrative(chain, forest, params)
    result = _finish(config, corpus, forest, narrative, started)
    result.metadata["failed_reports"] = failed_reports
    if config.out_dir is not None:
        write_run_outputs(config.out_dir, config, forest, result, chain)
    return forest, result


def _dot_texts(
    chain: ProviderChain,
    report: Report,
    params: GenerationParams,
    condense: bool,
) -> tuple[list[str], bool]:
    """Dot texts for one report, plus whether provider failure degraded them."""
    body = trim_to_words(collapse_ws(report.body), params.word_limit * 8)
    if not condense:
        return [body], False
    try:
        texts = condense_report(chain, report, params)
    except ChainError as exc:
        logger.warning("condense failed for report %s; raw body kept: %s", report.id, exc)
        return [body], True
    split: list[str] = []
    for text in texts:
        split.extend(dynamic_split(chain, text, params))
    return split, False


def generate_narrative(
    chain: ProviderChain,
    forest: EvidenceForest,
    params: GenerationParams | None = None,
) -> str:
    """One narrate call over the dominant thread. Failures propagate."""
    if not forest.nodes:
        raise PipelineError("cannot narrate an empty forest")
    effective = params or chain.entries[0].params
    thread = forest.largest_thread()
    leaves = forest.collect_evidential_leaves(thread.root)
    rank = {node_id: i for i, node_id in enumerate(forest.nodes)}
    hypotheses = sorted(
        (
            forest.nodes[d]
            for d in thread.member_dots
            if d not in thread.evidential_leaves
        ),
        key=lambda d: (d.created_at_step, rank[d.id]),
    )
    return chain.chat(
        "narrate",
        {
            "evidence": "\n".join(d.information for d in leaves),
            "hypotheses": "\n".join(d.information for d in hypotheses),
            "word_limit": effective.word_limit,
        },
        params,
    )


def _finish(
    config: RunConfig,
    corpus: Corpus,
    forest: EvidenceForest,
    narrative: str,
    started: float,
) -> NarrativeResult:
    forest.assert_valid()
    thread = forest.largest_thread()
    counts = forest.node_counts()
    metadata = {
        "dataset_id": corpus.dataset_id,
        "variant": forest.variant.value,
        "condensation": config.condense,
        "node_counts": counts,
        "shape": forest.shape_summary(),
        "report_count": len(corpus),
        "elapsed_s": round(time.perf_counter() - started, 3),
        "config": config.snapshot(),
    }
    return NarrativeResult(
        narrative=narrative,
        main_thread=thread,
        predicted_relevant=thread.covered_reports,
        metadata=metadata,
    )


# ------------------------------------------------------------ person forest


def normalize_person(name: str) -> str:
    return collapse_ws(name).casefold()


def build_person_forest(
    config: RunConfig,
    corpus: Corpus | None = None,
    chain: ProviderChain | None = None,
) -> tuple[EvidenceForest, NarrativeResult]:
    """Grow a person-centric forest: one dot per person, connection nodes for
    co-mentions, then the usual narrative machinery.

    Person dots accumulate a snippet from every report that mentions them;
    their source_report stays the first mentioning report. Connection nodes
    are deduplicated by their exact child set. Person forests are not
    vector-indexed (no retrieval happens in this variant).
    """
    if corpus is None:
        if config.dataset is None:
            raise PipelineError("no dataset given")
        corpus = load_corpus(config.dataset)
    chain = chain or build_chain(config)
    if "persons" not in chain.templates:
        raise PipelineError("person variant requires a 'persons' template")

    params = config.generation_params()
    started = time.perf_counter()
    forest = EvidenceForest(
        dataset_id=corpus.dataset_id,
        variant=ForestVariant.PERSON_BASED,
        dimension=chain.dimension,
    )

    person_dot: dict[str, str] = {}
    connections: set[frozenset[str]] = set()
    empty_reports = 0
    for report in corpus.reports:
        try:
            reply = chain.chat(
                "persons", {"title": report.title, "body": report.body}, params
            )
        except ChainError as exc:
            logger.warning("person extraction failed for %s: %s", report.id, exc)
            empty_reports += 1
            continue
        names: list[str] = []
        for line in reply.splitlines():
            name = normalize_person(line)
            if name and name not in names:
                names.append(name)
        if not names:
            empty_reports += 1
            continue

        snippet = trim_to_words(collapse_ws(report.body), params.word_limit)
        for name in names:
            if name in person_dot:
                forest.extend_information(person_dot[name], snippet)
            else:
                person_dot[name] = forest.add_evidential_dot(
                    report, f"{name}: {snippet}"
                )
        if len(names) >= 2:
            members = frozenset(person_dot[n] for n in names)
            if len(members) >= 2 and members not in connections:
                connections.add(members)
                try:
                    text = chain.chat(
                        "synthesize",
                        {
                            "evidence": "\n".join(
                                forest.nodes[m].information for m in sorted(members)
                            ),
                            "word_limit": params.word_limit,
                        },
                        params,
                    )
                except ChainError as exc:
                    logger.warning(
                        "connection synthesis failed in report %s: %s", report.id, exc
                    )
                    continue
                forest.create_hypothesis_dot(
                    sorted(members), text, step=report.ordinal
                )

    if not forest.nodes:
        raise PipelineError("no persons detected anywhere in the corpus")
    narrative = generate_narrative(chain, forest, params)
    result = _finish(config, corpus, forest, narrative, started)
    result.metadata["reports_without_persons"] = empty_reports
    result.metadata["distinct_persons"] = len(person_dot)
    if config.out_dir is not None:
        write_run_outputs(config.out_dir, config, forest, result, chain)
    return forest, result


# ---------------------------------------------------------------- outputs

FOREST_FILENAME = "forest.jsonl"
NARRATIVE_FILENAME = "narrative.txt"
RESULT_FILENAME = "result.json"
RUN_LOG_FILENAME = "run.log"
GRAPH_FILENAME = "graph.dot"
SNAPSHOT_FILENAME = "config_snapshot.json"


def write_run_outputs(
    out_dir: str | Path,
    config: RunConfig,
    forest: EvidenceForest,
    result: NarrativeResult,
    chain: ProviderChain,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_forest(forest, out / FOREST_FILENAME)
    (out / NARRATIVE_FILENAME).write_text(result.narrative + "\n", encoding="utf-8")
    (out / RESULT_FILENAME).write_text(
        json.dumps(result.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    chain.write_log(out / RUN_LOG_FILENAME)
    (out / GRAPH_FILENAME).write_text(export_dot_graph(forest), encoding="utf-8")
    (out / SNAPSHOT_FILENAME).write_text(
        json.dumps(config.snapshot(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return out
