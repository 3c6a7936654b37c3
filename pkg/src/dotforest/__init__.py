"""dotforest: grow dynamic evidence forests from report streams and narrate
the dominant thread.

Reports are condensed into atomic information dots, linked by two-step
retrieval (exact cosine search, then model filtering), consolidated into
hypothesis dots, and finally narrated. Ships a deterministic offline provider,
evaluation metrics built from first principles, and non-LLM baselines.
"""
from .core import (
    Dot,
    DotKind,
    EvidenceForest,
    ForestError,
    ForestVariant,
    InvariantViolation,
    Report,
    Thread,
    deserialize_forest,
    export_dot_graph,
    read_forest,
    serialize_forest,
    write_forest,
)
from .corpus import Corpus, CorpusError, generate_synthetic, load_corpus, save_corpus
from .condenser import condense_report, dynamic_split
from .merger import MergeSettings, retrieve_and_merge, synthesize_hypothesis
from .metrics import (
    EvalReport,
    Score,
    classification_f1,
    evaluate_run,
    judge_narrative,
    meteor,
    pitfall_matrix,
    porter_stem,
    rouge_lsum,
    rouge_n,
)
from .pipeline import (
    NarrativeResult,
    PipelineError,
    RunConfig,
    build_chain,
    build_person_forest,
    generate_narrative,
    run_pipeline,
)
from .providers import (
    ChainError,
    GenerationParams,
    HttpProvider,
    MockProvider,
    PromptTemplate,
    ProviderChain,
    ProviderError,
    load_provider_config,
    load_templates,
    mock_chain,
)
from .retriever import VectorIndex, two_step_retrieve

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusError",
    "ChainError",
    "Dot",
    "DotKind",
    "EvalReport",
    "EvidenceForest",
    "ForestError",
    "ForestVariant",
    "GenerationParams",
    "HttpProvider",
    "InvariantViolation",
    "MergeSettings",
    "MockProvider",
    "NarrativeResult",
    "PipelineError",
    "PromptTemplate",
    "ProviderChain",
    "ProviderError",
    "Report",
    "RunConfig",
    "Score",
    "Thread",
    "VectorIndex",
    "build_chain",
    "build_person_forest",
    "classification_f1",
    "condense_report",
    "deserialize_forest",
    "dynamic_split",
    "evaluate_run",
    "export_dot_graph",
    "generate_narrative",
    "generate_synthetic",
    "judge_narrative",
    "load_corpus",
    "load_provider_config",
    "load_templates",
    "meteor",
    "mock_chain",
    "pitfall_matrix",
    "porter_stem",
    "read_forest",
    "retrieve_and_merge",
    "rouge_lsum",
    "rouge_n",
    "run_pipeline",
    "save_corpus",
    "serialize_forest",
    "synthesize_hypothesis",
    "two_step_retrieve",
    "write_forest",
]
