"""Command-line surface: runs, evaluation, sweeps, baselines, corpus tools.

Exit codes: 0 success, 2 usage errors (bad flags, missing arguments), 1 for
everything else with a single machine-parseable `error-class: message` line
on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import baselines, metrics
from .baselines import BaselineError
from .core import ForestError, ForestVariant, read_forest, export_dot_graph
from .corpus import CorpusError, generate_synthetic, load_corpus, save_corpus
from .merger import DEFAULT_MAX_DEPTH
from .metrics import MetricsError, evaluate_run, pitfall_matrix
from .pipeline import (
    FOREST_FILENAME,
    NARRATIVE_FILENAME,
    PipelineError,
    RESULT_FILENAME,
    RunConfig,
    build_chain,
    run_pipeline,
)
from .providers import ProviderError
from .retriever import DEFAULT_SIMILARITY_FLOOR, DEFAULT_TOP_K, RetrievalError

logger = logging.getLogger(__name__)

_ERROR_CLASSES = (
    (CorpusError, "dataset-error"),
    (ProviderError, "provider-error"),
    (MetricsError, "eval-error"),
    (BaselineError, "baseline-error"),
    (ForestError, "forest-error"),
    (RetrievalError, "run-error"),
    (PipelineError, "run-error"),
    (OSError, "io-error"),
)


def _classify_error(exc: Exception) -> str:
    for exc_type, name in _ERROR_CLASSES:
        if isinstance(exc, exc_type):
            return name
    return "internal-error"


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="corpus directory or JSONL file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--provider-config", default=None, help="provider chain JSON")
    parser.add_argument("--temperature", type=float, default=0.7)
    parser.add_argument("--word-limit", type=int, default=100)
    parser.add_argument("--k", type=int, default=DEFAULT_TOP_K, help="retrieval top-k")
    parser.add_argument(
        "--tau",
        type=float,
        default=DEFAULT_SIMILARITY_FLOOR,
        help="similarity floor for retrieval",
    )
    parser.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    parser.add_argument(
        "--no-condense",
        action="store_true",
        help="ingest raw report bodies without condensation",
    )
    parser.add_argument(
        "--variant",
        choices=[v.value for v in ForestVariant],
        default=ForestVariant.REGULAR.value,
    )
    parser.add_argument("--seed", type=int, default=0)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset=args.dataset,
        variant=ForestVariant(args.variant),
        provider_config=args.provider_config,
        temperature=args.temperature,
        word_limit=args.word_limit,
        k=args.k,
        similarity_floor=args.tau,
        max_depth=args.max_depth,
        condense=not args.no_condense,
        seed=args.seed,
        out_dir=args.out,
    )


# ------------------------------------------------------------ subcommands


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    forest, result = run_pipeline(config)
    print(f"nodes: {forest.shape_summary()}")
    print(f"main thread reports: {len(result.predicted_relevant)}")
    print(f"out: {config.out_dir}")
    return 0


def _cmd_run_person(args: argparse.Namespace) -> int:
    args.variant = ForestVariant.PERSON_BASED.value
    return _cmd_run(args)


def _cmd_evaluate(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    result_path = run_dir / RESULT_FILENAME
    if not result_path.is_file():
        raise PipelineError(f"no {RESULT_FILENAME} under {run_dir}")
    result = json.loads(result_path.read_text(encoding="utf-8"))
    narrative_path = run_dir / NARRATIVE_FILENAME
    narrative = (
        narrative_path.read_text(encoding="utf-8").strip()
        if narrative_path.is_file()
        else None
    )
    corpus = load_corpus(args.truth)
    chain = None
    if args.judge:
        config = RunConfig(provider_config=args.provider_config, seed=args.seed)
        chain = build_chain(config)
    report = evaluate_run(
        predicted=set(result["predicted_relevant"]),
        corpus=corpus,
        narrative=narrative,
        chain=chain,
        use_judge=args.judge,
    )
    out_path = Path(args.out) if args.out else run_dir / "eval.json"
    out_path.write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"P={report.precision:.4f} R={report.recall:.4f} F1={report.f1:.4f}")
    if report.meteor is not None:
        print(
            f"rouge1={report.rouge1.f1:.4f} rouge2={report.rouge2.f1:.4f}"
            f" rougeLsum={report.rougeLsum.f1:.4f} meteor={report.meteor:.4f}"
        )
    if report.judge is not None:
        print("judge=" + "/".join(str(v) for v in report.judge))
    print(f"eval: {out_path}")
    return 0


@dataclass
class SweepSpec:
    temperatures: list[float]
    word_limits: list[int]
    repeats: int = 1

    def __post_init__(self) -> None:
        if not self.temperatures or not self.word_limits:
            raise PipelineError("sweep needs at least one temperature and word limit")
        if self.repeats < 1:
            raise PipelineError("repeats must be >= 1")


_SWEEP_METRICS = ("f1", "rouge1", "rouge2", "rougeLsum", "meteor")


def run_sweep(config: RunConfig, spec: SweepSpec) -> list[dict]:
    """Grid of runs; per cell the metric means over repeats. Cell failures are
    recorded in the row and the sweep continues."""
    corpus = load_corpus(config.dataset)
    rows: list[dict] = []
    for temperature in spec.temperatures:
        for word_limit in spec.word_limits:
            row: dict = {"temperature": temperature, "word_limit": word_limit}
            sums = {name: 0.0 for name in _SWEEP_METRICS}
            completed = 0
            error = None
            for repeat in range(spec.repeats):
                cell = RunConfig(
                    dataset=config.dataset,
                    variant=config.variant,
                    provider_config=config.provider_config,
                    temperature=temperature,
                    word_limit=word_limit,
                    k=config.k,
                    similarity_floor=config.similarity_floor,
                    max_depth=config.max_depth,
                    condense=config.condense,
                    search_all_dots=config.search_all_dots,
                    seed=config.seed + repeat,
                    out_dir=None,
                )
                try:
                    _, result = run_pipeline(cell, corpus=corpus)
                    report = evaluate_run(
                        predicted=set(result.predicted_relevant),
                        corpus=corpus,
                        narrative=result.narrative,
                    )
                except Exception as exc:  # cell failure must not kill the sweep
                    error = f"{_classify_error(exc)}: {exc}"
                    logger.warning("sweep cell (%s, %s) failed: %s", temperature, word_limit, exc)
                    break
                sums["f1"] += report.f1
                for name in ("rouge1", "rouge2", "rougeLsum"):
                    score = getattr(report, name)
                    sums[name] += score.f1 if score is not None else 0.0
                sums["meteor"] += report.meteor if report.meteor is not None else 0.0
                completed += 1
            if error is not None:
                row["status"] = error
                for name in _SWEEP_METRICS:
                    row[name] = None
            else:
                row["status"] = "ok"
                for name in _SWEEP_METRICS:
                    row[name] = sums[name] / completed
            rows.append(row)
    _add_normalized_columns(rows)
    return rows


def _add_normalized_columns(rows: list[dict]) -> None:
    # Min-max per metric over successful rows; constant columns normalize to 0.
    for name in _SWEEP_METRICS:
        values = [row[name] for row in rows if row[name] is not None]
        low, high = (min(values), max(values)) if values else (0.0, 0.0)
        span = high - low
        for row in rows:
            if row[name] is None:
                row[f"norm_{name}"] = None
            else:
                row[f"norm_{name}"] = (row[name] - low) / span if span > 0 else 0.0


def sweep_table(rows: list[dict]) -> str:
    columns = (
        ["temperature", "word_limit", "status"]
        + list(_SWEEP_METRICS)
        + [f"norm_{name}" for name in _SWEEP_METRICS]
    )

    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join(cell(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.out_dir = None
    spec = SweepSpec(
        temperatures=[float(v) for v in args.temperatures.split(",") if v],
        word_limits=[int(v) for v in args.word_limits.split(",") if v],
        repeats=args.repeats,
    )
    rows = run_sweep(config, spec)
    table = sweep_table(rows)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.tsv").write_text(table, encoding="utf-8")
    (out_dir / "sweep_config.json").write_text(
        json.dumps(
            {"config": config.snapshot(), "spec": vars(spec)},
            indent=2,
            default=str,
        )
        + "\n",
        encoding="utf-8",
    )
    print(table, end="")
    print(f"sweep: {out_dir / 'sweep.tsv'}")
    return 0


def _cmd_baseline_cluster(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.dataset)
    if not corpus.labels_present:
        raise BaselineError("clustering baseline needs truth labels")
    config = RunConfig(provider_config=args.provider_config, seed=args.seed)
    chain = build_chain(config)
    vectors = baselines.embed_corpus(chain, corpus)
    labels = [r.truth_label or "" for r in corpus.reports]
    f1, best = baselines.cluster_classify(vectors, labels)
    payload = {"f1": f1, "config": best}
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )
    print(f"best F1={f1:.4f} config={json.dumps(best)}")
    return 0


def _cmd_baseline_entity(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.dataset)
    extractor = None
    if args.llm_extract:
        config = RunConfig(provider_config=args.provider_config, seed=args.seed)
        chain = build_chain(config)

        def extractor(body: str) -> list[str]:
            reply = chain.chat("persons", {"title": "", "body": body})
            return [line for line in reply.splitlines() if line.strip()]

    bipartite, projection = baselines.document_entity_network(corpus, extractor)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "bipartite.dot").write_text(
        baselines.graph_to_dot(bipartite, "document_entity"), encoding="utf-8"
    )
    (out_dir / "projection.dot").write_text(
        baselines.graph_to_dot(projection, "document_projection"), encoding="utf-8"
    )
    import networkx as nx

    components = sorted(
        (len(c) for c in nx.connected_components(projection)), reverse=True
    )
    print(
        f"bipartite: {bipartite.number_of_nodes()} nodes,"
        f" {bipartite.number_of_edges()} edges"
    )
    print(
        f"projection: {projection.number_of_nodes()} nodes,"
        f" {projection.number_of_edges()} edges,"
        f" largest component {components[0] if components else 0}"
    )
    print(f"out: {out_dir}")
    return 0


def _cmd_distances(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.dataset)
    if not corpus.labels_present:
        raise BaselineError("distance analysis needs truth labels")
    config = RunConfig(provider_config=args.provider_config, seed=args.seed)
    chain = build_chain(config)
    vectors = baselines.embed_corpus(chain, corpus)
    labels = [r.truth_label or "" for r in corpus.reports]
    stats = baselines.interclass_distances(vectors, labels)
    csv_text = stats.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    print(csv_text, end="")
    return 0


def _cmd_pitfalls(args: argparse.Namespace) -> int:
    texts = []
    for path_text in args.texts:
        path = Path(path_text)
        texts.append((path.stem, path.read_text(encoding="utf-8")))
    matrix = pitfall_matrix(texts)
    table = matrix.to_tsv()
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def _cmd_gen_synthetic(args: argparse.Namespace) -> int:
    corpus = generate_synthetic(
        seed=args.seed,
        n_relevant=args.n_relevant,
        n_noise=args.n_noise,
        plot_tokens=args.plot_tokens,
        overlap=args.overlap,
        window=args.window,
        verbose_padding=args.verbose_padding,
        dataset_id=args.dataset_id,
    )
    save_corpus(corpus, args.out)
    print(f"{len(corpus)} reports -> {args.out}")
    return 0


def _cmd_export_graph(args: argparse.Namespace) -> int:
    forest_path = (
        Path(args.forest) if args.forest else Path(args.run) / FOREST_FILENAME
    )
    forest = read_forest(forest_path)
    text = export_dot_graph(forest)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"graph: {args.out}")
    else:
        print(text, end="")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dotforest",
        description="Evidence forests: condense reports into dots, grow threads, narrate.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="build a forest and narrative")
    _add_run_flags(run_parser)
    run_parser.set_defaults(func=_cmd_run)

    person_parser = commands.add_parser(
        "run-person", help="run with the person-centric forest variant"
    )
    _add_run_flags(person_parser)
    person_parser.set_defaults(func=_cmd_run_person)

    eval_parser = commands.add_parser("evaluate", help="score a finished run")
    eval_parser.add_argument("--run", required=True, help="run output directory")
    eval_parser.add_argument("--truth", required=True, help="labeled corpus path")
    eval_parser.add_argument("--judge", action="store_true", help="add model-judge scores")
    eval_parser.add_argument("--provider-config", default=None)
    eval_parser.add_argument("--seed", type=int, default=0)
    eval_parser.add_argument("--out", default=None, help="eval report path")
    eval_parser.set_defaults(func=_cmd_evaluate)

    sweep_parser = commands.add_parser("sweep", help="temperature x word-limit grid")
    _add_run_flags(sweep_parser)
    sweep_parser.add_argument(
        "--temperatures", default="0.2,0.7,1.2", help="comma-separated list"
    )
    sweep_parser.add_argument(
        "--word-limits", default="50,100,150", help="comma-separated list"
    )
    sweep_parser.add_argument("--repeats", type=int, default=1)
    sweep_parser.set_defaults(func=_cmd_sweep)

    cluster_parser = commands.add_parser(
        "baseline-cluster", help="clustering classification baseline"
    )
    cluster_parser.add_argument("--dataset", required=True)
    cluster_parser.add_argument("--provider-config", default=None)
    cluster_parser.add_argument("--seed", type=int, default=0)
    cluster_parser.add_argument("--out", default=None)
    cluster_parser.set_defaults(func=_cmd_baseline_cluster)

    entity_parser = commands.add_parser(
        "baseline-entity", help="document-entity network baseline"
    )
    entity_parser.add_argument("--dataset", required=True)
    entity_parser.add_argument("--out", required=True, help="output directory")
    entity_parser.add_argument(
        "--llm-extract", action="store_true", help="extract entities via the chain"
    )
    entity_parser.add_argument("--provider-config", default=None)
    entity_parser.add_argument("--seed", type=int, default=0)
    entity_parser.set_defaults(func=_cmd_baseline_entity)

    distance_parser = commands.add_parser(
        "distances", help="inter/intra-class embedding distances"
    )
    distance_parser.add_argument("--dataset", required=True)
    distance_parser.add_argument("--provider-config", default=None)
    distance_parser.add_argument("--seed", type=int, default=0)
    distance_parser.add_argument("--out", default=None, help="CSV path")
    distance_parser.set_defaults(func=_cmd_distances)

    pitfalls_parser = commands.add_parser(
        "pitfalls", help="pairwise METEOR/ROUGE-1 matrix over text files"
    )
    pitfalls_parser.add_argument("texts", nargs="+", help="text files, >= 2")
    pitfalls_parser.add_argument("--out", default=None)
    pitfalls_parser.set_defaults(func=_cmd_pitfalls)

    gen_parser = commands.add_parser(
        "gen-synthetic", help="write a deterministic planted-plot corpus"
    )
    gen_parser.add_argument("--out", required=True, help="corpus directory")
    gen_parser.add_argument("--seed", type=int, required=True)
    gen_parser.add_argument("--n-relevant", type=int, default=12)
    gen_parser.add_argument("--n-noise", type=int, default=8)
    gen_parser.add_argument("--plot-tokens", type=int, default=None)
    gen_parser.add_argument("--overlap", type=int, default=3)
    gen_parser.add_argument("--window", type=int, default=None)
    gen_parser.add_argument("--verbose-padding", type=int, default=0)
    gen_parser.add_argument("--dataset-id", default=None)
    gen_parser.set_defaults(func=_cmd_gen_synthetic)

    export_parser = commands.add_parser(
        "export-graph", help="render a serialized forest as DOT"
    )
    export_parser.add_argument("--forest", default=None, help="forest file")
    export_parser.add_argument("--run", default=None, help="run directory")
    export_parser.add_argument("--out", default=None)
    export_parser.set_defaults(func=_cmd_export_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "export-graph" and not (args.forest or args.run):
        parser.error("export-graph needs --forest or --run")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"{_classify_error(exc)}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
