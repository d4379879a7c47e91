"""Graph depth, depth-limited sub-graphs, and curriculum buckets.

Depth counts concept nodes along the DFS spanning tree: the root sits at
level 1 and each child frame one level deeper.  Attribute constants do not
open frames and therefore live at their parent's level; re-entrant edges
reuse the target's first-visit level and never deepen the graph.  A graph's
depth is the maximum level over its variables.

Bucket index always equals depth, so a bucket set keeps empty buckets
rather than compacting them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .graph import (
    KIND_RELATION,
    AmrGraph,
    InvalidDepth,
    Triple,
    serialize_penman,
)
from .linearize import TokenSequence, linearize

if TYPE_CHECKING:  # circular at runtime: corpus-io builds Instances from buckets
    from .corpus import Instance

STRUCTURE_LEVEL = "structure"
INSTANCE_LEVEL = "instance"


class EmptyCorpus(ValueError):
    """Raised when bucket construction receives no graphs."""


@dataclass(frozen=True)
class DepthAnnotatedGraph:
    graph: AmrGraph
    node_depth: dict[str, int] = field(hash=False)  # variable -> level, root = 1
    graph_depth: int = 1


def compute_depth(graph: AmrGraph) -> DepthAnnotatedGraph:
    """Assign each variable its DFS first-visit level and the graph its depth.

    Children are taken in stored triple order, matching serialization and
    linearization, so a re-entrant variable's level is fixed by whichever
    mention the traversal reaches first.
    """
    concepts = graph.concepts()
    outgoing = graph.outgoing()
    node_depth: dict[str, int] = {}

    def walk(v: str, level: int) -> None:
        node_depth[v] = level
        for t in outgoing.get(v, ()):
            if t.kind == KIND_RELATION and t.target in concepts and t.target not in node_depth:
                walk(t.target, level + 1)

    walk(graph.root, 1)
    return DepthAnnotatedGraph(graph=graph, node_depth=node_depth, graph_depth=max(node_depth.values()))


def extract_subgraph(graph: AmrGraph, depth: int) -> AmrGraph:
    """Restrict a graph to variables at level <= depth.

    Keeps instance triples of surviving variables, relations with both
    endpoints surviving, and attributes whose source survives, in stored
    order.  Re-entrant edges crossing the cut are dropped with their deeper
    endpoint.  For depth >= the graph's depth this is the identity.
    """
    if depth < 1:
        raise InvalidDepth(f"depth must be >= 1, got {depth}")
    annotated = compute_depth(graph)
    keep = {v for v, lv in annotated.node_depth.items() if lv <= depth}
    triples: list[Triple] = []
    for t in graph.triples:
        if t.source not in keep:
            continue
        if t.kind == KIND_RELATION and t.target not in keep:
            continue
        triples.append(t)
    return AmrGraph(root=graph.root, triples=tuple(triples))


@dataclass(frozen=True)
class BucketSet:
    """Instance ids grouped by depth, one bucket per level from 1 to max_index.

    `level` says what the index means: the target sub-graph depth for
    structure buckets, the full-graph depth for instance buckets.
    """

    level: str  # STRUCTURE_LEVEL | INSTANCE_LEVEL
    max_index: int
    buckets: dict[int, tuple[str, ...]] = field(hash=False)

    def sizes(self) -> dict[int, int]:
        return {i: len(ids) for i, ids in self.buckets.items()}

    def total(self) -> int:
        return sum(len(ids) for ids in self.buckets.values())


def build_buckets(
    corpus: Sequence[tuple[str, str, AmrGraph]],
    level: str,
) -> tuple[BucketSet, list["Instance"]]:
    """Group a corpus of (id, sentence, graph) into depth buckets.

    Instance level: each full graph goes to bucket graph_depth; the returned
    instances are the inputs re-annotated (kind "full", plain linearization).
    Structure level: a depth-D graph yields D sub-instances `{id}::d{i}` for
    i = 1..D, each the depth-i sub-graph with a leading depth token, placed
    in bucket i.  max_index is the largest depth seen either way.
    """
    from .corpus import Instance  # deferred: corpus-io imports this module

    if level not in (STRUCTURE_LEVEL, INSTANCE_LEVEL):
        raise ValueError(f"level must be {STRUCTURE_LEVEL!r} or {INSTANCE_LEVEL!r}, got {level!r}")
    if not corpus:
        raise EmptyCorpus("no graphs to bucket")

    annotated = [(gid, snt, g, compute_depth(g)) for gid, snt, g in corpus]
    max_index = max(a.graph_depth for _, _, _, a in annotated)
    buckets: dict[int, list[str]] = {i: [] for i in range(1, max_index + 1)}
    instances: list[Instance] = []

    if level == INSTANCE_LEVEL:
        for gid, snt, g, ann in annotated:
            buckets[ann.graph_depth].append(gid)
            instances.append(
                Instance(
                    id=gid,
                    snt=snt,
                    graph=g,
                    depth=ann.graph_depth,
                    bucket=ann.graph_depth,
                    kind="full",
                    tokens=tuple(linearize(g).as_list()),
                )
            )
    else:
        for gid, snt, g, ann in annotated:
            for d in range(1, ann.graph_depth + 1):
                sub = extract_subgraph(g, d)
                seq = TokenSequence(tokens=linearize(sub).tokens, depth_tag=d)
                sub_id = f"{gid}::d{d}"
                buckets[d].append(sub_id)
                instances.append(
                    Instance(
                        id=sub_id,
                        snt=snt,
                        graph=sub,
                        depth=d,
                        bucket=d,
                        kind="sub",
                        tokens=tuple(seq.as_list()),
                        parent_id=gid,
                    )
                )

    bucket_set = BucketSet(
        level=level,
        max_index=max_index,
        buckets={i: tuple(ids) for i, ids in buckets.items()},
    )
    return bucket_set, instances


def depth_histogram(graphs: Sequence[AmrGraph]) -> dict[int, int]:
    """Count of graphs per depth; used by corpus reports."""
    hist: dict[int, int] = {}
    for g in graphs:
        d = compute_depth(g).graph_depth
        hist[d] = hist.get(d, 0) + 1
    return dict(sorted(hist.items()))


def subgraph_penman(graph: AmrGraph, depth: int) -> str:
    return serialize_penman(extract_subgraph(graph, depth))
