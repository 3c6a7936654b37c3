"""Evidence forest data model.

An evidence forest holds information dots: evidential dots extracted from one
source report each, and hypothesis dots synthesized over two or more children.
Links are bidirectional (every parent lists the child and vice versa) and the
child relation is acyclic, so the structure is a DAG whose roots are the
current top-level hypotheses plus any unmerged evidential dots.

The forest also owns a vector index over dot embeddings so that retrieval and
structure mutation stay in lockstep.
"""
from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .retriever import VectorIndex

FORMAT_VERSION = 1

_ID_SUFFIX_RE = re.compile(r"-(\d+)$")


class ForestError(Exception):
    """Any rejected operation or invalid structure."""


class InvariantViolation(ForestError):
    """A named structural invariant does not hold."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


class DotKind(str, Enum):
    EVIDENTIAL = "evidential"
    HYPOTHESIS = "hypothesis"


class ForestVariant(str, Enum):
    REGULAR = "regular"
    PERSON_BASED = "person_based"


@dataclass
class Report:
    """One input document. `ordinal` is its position in ingestion order."""

    id: str
    ordinal: int
    body: str
    title: str = ""
    date: str | None = None
    truth_label: str | None = None  # "Relevant" | "Irrelevant" | None

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ForestError("report id must be non-empty")
        if self.ordinal < 0:
            raise ForestError(f"report {self.id!r}: ordinal must be >= 0")
        if not self.body.strip():
            raise ForestError(f"report {self.id!r}: body must be non-empty")
        if self.truth_label not in (None, "Relevant", "Irrelevant"):
            raise ForestError(
                f"report {self.id!r}: truth_label must be Relevant or Irrelevant"
            )


@dataclass
class Dot:
    """One information dot.

    Evidential dots carry the id of their single source report and never gain
    children. Hypothesis dots have no source report and at least two children.
    """

    id: str
    kind: DotKind
    information: str
    children: list[str] = field(default_factory=list)
    parents: list[str] = field(default_factory=list)
    source_report: str | None = None
    created_at_step: int = 0


@dataclass
class Thread:
    """One root dot together with everything reachable below it."""

    root: str
    member_dots: frozenset[str]
    evidential_leaves: frozenset[str]
    covered_reports: frozenset[str]


class EvidenceForest:
    """Mutable dot store plus link graph plus vector index."""

    def __init__(
        self,
        dataset_id: str = "",
        variant: ForestVariant = ForestVariant.REGULAR,
        dimension: int = 64,
    ):
        self.dataset_id = dataset_id
        self.variant = ForestVariant(variant)
        self.nodes: dict[str, Dot] = {}
        self.index = VectorIndex(dimension)
        self._counter = 0

    # ------------------------------------------------------------------ ids

    def _next_id(self) -> str:
        prefix = self.dataset_id or "dot"
        while True:
            candidate = f"{prefix}-{self._counter:05d}"
            self._counter += 1
            if candidate not in self.nodes:
                return candidate

    def _insertion_rank(self) -> dict[str, int]:
        return {dot_id: i for i, dot_id in enumerate(self.nodes)}

    # ------------------------------------------------------------- mutation

    def add_evidential_dot(
        self, report: Report, information: str, step: int | None = None
    ) -> str:
        """Store a leaf dot extracted from `report`; returns the new dot id."""
        if not information.strip():
            raise ForestError(f"empty information for report {report.id!r}")
        dot_id = self._next_id()
        self.nodes[dot_id] = Dot(
            id=dot_id,
            kind=DotKind.EVIDENTIAL,
            information=information,
            source_report=report.id,
            created_at_step=report.ordinal if step is None else step,
        )
        return dot_id

    def create_hypothesis_dot(
        self, children: Iterable[str], information: str, step: int | None = None
    ) -> str:
        """Synthesize a parent over >=2 distinct existing dots; returns its id.

        Links are written on both sides. A fresh node with no parents cannot
        close a cycle, so no reachability check is needed here; `audit`
        still verifies acyclicity globally.
        """
        ordered: list[str] = []
        for child in children:
            if child not in self.nodes:
                raise ForestError(f"unknown child dot {child!r}")
            if child not in ordered:
                ordered.append(child)
        if len(ordered) < 2:
            raise ForestError("a hypothesis dot needs at least 2 distinct children")
        if not information.strip():
            raise ForestError("empty hypothesis information")
        if step is None:
            step = max(self.nodes[c].created_at_step for c in ordered)
        dot_id = self._next_id()
        self.nodes[dot_id] = Dot(
            id=dot_id,
            kind=DotKind.HYPOTHESIS,
            information=information,
            children=ordered,
            created_at_step=step,
        )
        for child in ordered:
            self.nodes[child].parents.append(dot_id)
        return dot_id

    def extend_information(self, dot_id: str, extra: str) -> None:
        """Append text to an existing dot (person dots accumulate this way)."""
        dot = self._get(dot_id)
        extra = extra.strip()
        if extra:
            dot.information = f"{dot.information} {extra}".strip()

    # ------------------------------------------------------------ traversal

    def _get(self, dot_id: str) -> Dot:
        try:
            return self.nodes[dot_id]
        except KeyError:
            raise ForestError(f"unknown dot {dot_id!r}") from None

    def _reach(self, dot_id: str, forward: bool) -> set[str]:
        self._get(dot_id)
        seen: set[str] = set()
        queue = deque([dot_id])
        while queue:
            current = queue.popleft()
            links = (
                self.nodes[current].children if forward else self.nodes[current].parents
            )
            for nxt in links:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        seen.discard(dot_id)
        return seen

    def ancestors(self, dot_id: str) -> set[str]:
        """Everything reachable via parent links, excluding the dot itself."""
        return self._reach(dot_id, forward=False)

    def descendants(self, dot_id: str) -> set[str]:
        """Everything reachable via child links, excluding the dot itself."""
        return self._reach(dot_id, forward=True)

    def roots(self) -> list[str]:
        """Dots with no parents, in insertion order."""
        return [dot_id for dot_id, dot in self.nodes.items() if not dot.parents]

    def depth(self, dot_id: str) -> int:
        """Longest parent-path length from any root down to this dot."""
        self._get(dot_id)
        memo: dict[str, int] = {}

        def walk(node: str) -> int:
            if node in memo:
                return memo[node]
            parents = self.nodes[node].parents
            memo[node] = 0 if not parents else 1 + max(walk(p) for p in parents)
            return memo[node]

        return walk(dot_id)

    def evidential_descendants(self, dot_id: str) -> frozenset[str]:
        """Evidential dots at or below `dot_id` (the dot itself if evidential)."""
        pool = self.descendants(dot_id) | {dot_id}
        return frozenset(
            d for d in pool if self.nodes[d].kind is DotKind.EVIDENTIAL
        )

    def collect_evidential_leaves(self, root: str) -> list[Dot]:
        """Evidential dots under `root`, ordered by source report ordinal.

        `created_at_step` carries the report ordinal for evidential dots, so
        ordering keys on (step, insertion order).
        """
        rank = self._insertion_rank()
        leaves = [self.nodes[d] for d in self.evidential_descendants(root)]
        leaves.sort(key=lambda d: (d.created_at_step, rank[d.id]))
        return leaves

    def collect_evidential_leaves_multi(self, roots: Iterable[str]) -> list[Dot]:
        """Union of evidential leaves under several dots, same ordering."""
        pool: set[str] = set()
        for r in roots:
            pool |= self.evidential_descendants(r)
        rank = self._insertion_rank()
        leaves = [self.nodes[d] for d in pool]
        leaves.sort(key=lambda d: (d.created_at_step, rank[d.id]))
        return leaves

    # -------------------------------------------------------- consolidation

    def consolidate_hypothesis_nodes(self, candidates: Iterable[str]) -> set[str]:
        """Map retrieved dots up to the structures that already subsume them.

        Candidates are grouped by undirected connected component. Each group
        is replaced by its deepest hypothesis dominator: the hypothesis dot,
        among the intersection of the members' ancestor-or-self sets, with the
        greatest depth (ties: later step, then smaller id). A group with no
        common hypothesis dominator falls back to the union of its members'
        topmost ancestors (the member itself when parentless).

        The result never contains two dots related by ancestry, and running
        the operation on its own output returns it unchanged.
        """
        ids = list(dict.fromkeys(candidates))
        if not ids:
            raise ForestError("consolidation requires at least one candidate")
        for dot_id in ids:
            self._get(dot_id)

        groups = self._group_by_component(ids)
        rank = self._insertion_rank()
        result: set[str] = set()
        for group in groups:
            common: set[str] | None = None
            for member in group:
                dominators = self.ancestors(member) | {member}
                common = dominators if common is None else common & dominators
            hyp_common = [
                d for d in (common or set())
                if self.nodes[d].kind is DotKind.HYPOTHESIS
            ]
            if hyp_common:
                hyp_common.sort(
                    key=lambda d: (
                        -self.depth(d),
                        -self.nodes[d].created_at_step,
                        rank[d],
                    )
                )
                result.add(hyp_common[0])
            else:
                for member in group:
                    ancestors = self.ancestors(member)
                    tops = [a for a in ancestors if not self.nodes[a].parents]
                    result.update(tops if tops else [member])

        # Drop any result dot that sits below another result dot.
        final = {
            d for d in result
            if not (self.ancestors(d) & result)
        }
        return final

    def _group_by_component(self, ids: list[str]) -> list[list[str]]:
        """Group ids by undirected connectivity through the whole graph."""
        assigned: dict[str, int] = {}
        groups: list[list[str]] = []
        for dot_id in ids:
            if dot_id in assigned:
                continue
            component = self.ancestors(dot_id) | self.descendants(dot_id) | {dot_id}
            # Grow to the full undirected component.
            frontier = deque(component)
            while frontier:
                node = frontier.popleft()
                for nxt in self.nodes[node].parents + self.nodes[node].children:
                    if nxt not in component:
                        component.add(nxt)
                        frontier.append(nxt)
            group_index = len(groups)
            groups.append([])
            for other in ids:
                if other in component and other not in assigned:
                    assigned[other] = group_index
                    groups[group_index].append(other)
        return groups

    # ---------------------------------------------------------- thread view

    def thread_of(self, root: str) -> Thread:
        members = self.descendants(root) | {root}
        leaves = self.evidential_descendants(root)
        covered = frozenset(
            self.nodes[d].source_report
            for d in leaves
            if self.nodes[d].source_report is not None
        )
        return Thread(
            root=root,
            member_dots=frozenset(members),
            evidential_leaves=leaves,
            covered_reports=covered,
        )

    def largest_thread(self) -> Thread:
        """The root with the most evidential leaves.

        Ties break by member count, then most recent created_at_step of the
        root, then lexicographically smallest root id.
        """
        roots = self.roots()
        if not roots:
            raise ForestError("empty forest has no threads")
        threads = [self.thread_of(r) for r in roots]
        threads.sort(
            key=lambda t: (
                -len(t.evidential_leaves),
                -len(t.member_dots),
                -self.nodes[t.root].created_at_step,
                t.root,
            )
        )
        return threads[0]

    # --------------------------------------------------------------- checks

    def audit(self) -> list[str]:
        """Return invariant violations, empty when the forest is valid."""
        problems: list[str] = []
        for dot_id, dot in self.nodes.items():
            if dot.id != dot_id:
                problems.append(f"id mismatch: key {dot_id!r} holds dot {dot.id!r}")
            for child in dot.children:
                if child not in self.nodes:
                    problems.append(
                        f"unknown id reference: {dot_id!r} -> child {child!r}"
                    )
                elif dot_id not in self.nodes[child].parents:
                    problems.append(
                        f"link symmetry: {dot_id!r} lists child {child!r}"
                        f" but {child!r} does not list it as parent"
                    )
            for parent in dot.parents:
                if parent not in self.nodes:
                    problems.append(
                        f"unknown id reference: {dot_id!r} -> parent {parent!r}"
                    )
                elif dot_id not in self.nodes[parent].children:
                    problems.append(
                        f"link symmetry: {dot_id!r} lists parent {parent!r}"
                        f" but {parent!r} does not list it as child"
                    )
            if dot.kind is DotKind.EVIDENTIAL:
                if dot.children:
                    problems.append(f"evidential leaf: {dot_id!r} has children")
                if dot.source_report is None:
                    problems.append(
                        f"evidential source: {dot_id!r} has no source report"
                    )
            else:
                if len(dict.fromkeys(dot.children)) < 2:
                    problems.append(
                        f"hypothesis arity: {dot_id!r} has fewer than 2 children"
                    )
                if dot.source_report is not None:
                    problems.append(
                        f"hypothesis source: {dot_id!r} carries a source report"
                    )
            if not dot.information.strip():
                problems.append(f"information: {dot_id!r} is empty")
        problems.extend(self._check_acyclic())
        return problems

    def _check_acyclic(self) -> list[str]:
        indegree = {d: 0 for d in self.nodes}
        for dot in self.nodes.values():
            for child in dot.children:
                if child in indegree:
                    indegree[child] += 1
        queue = deque(d for d, n in indegree.items() if n == 0)
        visited = 0
        while queue:
            node = queue.popleft()
            visited += 1
            for child in self.nodes[node].children:
                if child in indegree:
                    indegree[child] -= 1
                    if indegree[child] == 0:
                        queue.append(child)
        if visited != len(self.nodes):
            return ["acyclicity: child links contain a cycle"]
        return []

    def assert_valid(self) -> None:
        problems = self.audit()
        if problems:
            first = problems[0]
            invariant, _, detail = first.partition(": ")
            raise InvariantViolation(invariant, detail or first)

    def node_counts(self) -> dict[str, int]:
        hyp = sum(1 for d in self.nodes.values() if d.kind is DotKind.HYPOTHESIS)
        return {"total": len(self.nodes), "hypothesis": hyp, "evidential": len(self.nodes) - hyp}

    def shape_summary(self) -> str:
        """Render node counts as 'total (hypothesis/evidential)'."""
        c = self.node_counts()
        return f"{c['total']} ({c['hypothesis']}/{c['evidential']})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvidenceForest):
            return NotImplemented
        return (
            self.dataset_id == other.dataset_id
            and self.variant == other.variant
            and list(self.nodes) == list(other.nodes)
            and self.nodes == other.nodes
            and self.index.entries_equal(other.index)
        )


# ------------------------------------------------------------- persistence


def serialize_forest(forest: EvidenceForest) -> str:
    """Versioned line-delimited text: one header object, then one dot per line.

    Embeddings are emitted as decimal float lists (null when unindexed) and
    round-trip exactly through repr-based JSON floats.
    """
    header = {
        "format_version": FORMAT_VERSION,
        "dataset_id": forest.dataset_id,
        "variant": forest.variant.value,
        "dimension": forest.index.dimension,
        # Index insertion order is a tie-break input for search, and it can
        # differ from node order (merges index hypothesis dots mid-ingest).
        "index_order": forest.index.ids,
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    for dot in forest.nodes.values():
        vector = forest.index.vector_of(dot.id)
        record = {
            "id": dot.id,
            "kind": dot.kind.value,
            "information": dot.information,
            "children": dot.children,
            "parents": dot.parents,
            "source_report": dot.source_report,
            "created_at_step": dot.created_at_step,
            "embedding": None if vector is None else [float(x) for x in vector],
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def deserialize_forest(text: str) -> EvidenceForest:
    """Inverse of serialize_forest; validates structure, names the first failure."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ForestError("empty forest document")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ForestError(f"malformed header: {exc}") from None
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ForestError(f"format version: expected {FORMAT_VERSION}, got {version!r}")
    try:
        forest = EvidenceForest(
            dataset_id=header.get("dataset_id", ""),
            variant=ForestVariant(header.get("variant", "regular")),
            dimension=int(header.get("dimension", 64)),
        )
    except ValueError as exc:
        raise ForestError(f"malformed header: {exc}") from None

    max_suffix = -1
    embeddings: dict[str, list] = {}
    for line_number, line in enumerate(lines[1:], start=2):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ForestError(f"malformed record at line {line_number}: {exc}") from None
        try:
            dot = Dot(
                id=record["id"],
                kind=DotKind(record["kind"]),
                information=record["information"],
                children=list(record["children"]),
                parents=list(record["parents"]),
                source_report=record["source_report"],
                created_at_step=int(record["created_at_step"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ForestError(f"malformed record at line {line_number}: {exc}") from None
        if dot.id in forest.nodes:
            raise ForestError(f"duplicate dot id {dot.id!r}")
        forest.nodes[dot.id] = dot
        embedding = record.get("embedding")
        if embedding is not None:
            embeddings[dot.id] = embedding
        match = _ID_SUFFIX_RE.search(dot.id)
        if match:
            max_suffix = max(max_suffix, int(match.group(1)))

    # Rebuild the index in its original insertion order (search tie-breaks
    # depend on it); documents without the order list fall back to node order.
    order = header.get("index_order")
    if order is None:
        order = list(embeddings)
    elif sorted(order) != sorted(embeddings):
        raise ForestError("index_order does not match the embedded dot ids")
    for dot_id in order:
        forest.index.add(dot_id, embeddings[dot_id])

    forest._counter = max_suffix + 1
    forest.assert_valid()
    return forest


def write_forest(forest: EvidenceForest, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_forest(forest))


def read_forest(path) -> EvidenceForest:
    with open(path, "r", encoding="utf-8") as handle:
        return deserialize_forest(handle.read())


def export_dot_graph(forest: EvidenceForest) -> str:
    """Graphviz DOT rendering: parent -> child edges, labels truncated."""

    def escape(text: str) -> str:
        return text.replace("\\", "\\\\").replace('"', '\\"')

    lines = ["digraph evidence {", "  rankdir=TB;"]
    for dot in forest.nodes.values():
        label = dot.information if len(dot.information) <= 40 else dot.information[:37] + "..."
        shape = "box" if dot.kind is DotKind.HYPOTHESIS else "ellipse"
        lines.append(
            f'  "{escape(dot.id)}" [shape={shape} label="{escape(dot.id)}\\n{escape(label)}"];'
        )
    for dot in forest.nodes.values():
        for child in dot.children:
            lines.append(f'  "{escape(dot.id)}" -> "{escape(child)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
