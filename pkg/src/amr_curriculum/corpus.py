"""Corpus ingestion, synthetic corpus generation, and JSONL persistence.

Reads the LDC release text format (blank-line-separated PENMAN blocks with
`# ::id` / `# ::snt` headers) without aborting on bad blocks, generates
license-free synthetic corpora with controlled depth, and persists the
three artifact kinds (instances, bucket sets, schedules) as JSONL with a
versioned header line each.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .curriculum import (
    Schedule,
    canonical_json,
    child_rng,
    schedule_from_lines,
    schedule_lines,
)
from .graph import AmrGraph, PenmanError, Triple, parse_penman, serialize_penman, validate
from .linearize import linearize
from .structure import BucketSet, compute_depth

INSTANCES_FORMAT_VERSION = 1
BUCKETS_FORMAT_VERSION = 1

KIND_FULL = "full"
KIND_SUB = "sub"


class VersionMismatch(ValueError):
    pass


class JsonlError(ValueError):
    """Malformed artifact file; message names the 1-based line."""


class InvalidRange(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    """One training example: a sentence paired with a (sub-)graph target."""

    id: str
    snt: str
    graph: AmrGraph
    depth: int
    bucket: int
    kind: str  # KIND_FULL | KIND_SUB
    tokens: tuple[str, ...]
    parent_id: str | None = None


class BlockError(NamedTuple):
    line: int  # first line of the failing block
    message: str


@dataclass(frozen=True)
class CorpusReadResult:
    instances: tuple[Instance, ...]
    errors: tuple[BlockError, ...] = field(default_factory=tuple)


def make_full_instance(gid: str, snt: str, graph: AmrGraph) -> Instance:
    depth = compute_depth(graph).graph_depth
    return Instance(
        id=gid,
        snt=snt,
        graph=graph,
        depth=depth,
        bucket=depth,
        kind=KIND_FULL,
        tokens=tuple(linearize(graph).as_list()),
    )


# --- LDC corpus format -----------------------------------------------------

def _iter_blocks(text: str) -> Iterable[tuple[int, list[str]]]:
    block: list[str] = []
    start = 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not block:
                start = lineno
            block.append(line)
        elif block:
            yield start, block
            block = []
    if block:
        yield start, block


def read_amr_corpus(path: str | Path) -> CorpusReadResult:
    """Read blank-line-separated PENMAN blocks with `# ::` metadata.

    A block that fails to parse or validate becomes an error record with its
    starting line number; the rest of the file still loads.  Blocks without
    `# ::id` get a synthesized `<filename>:<line>` id.
    """
    path = Path(path)
    instances: list[Instance] = []
    errors: list[BlockError] = []
    for start, lines in _iter_blocks(path.read_text(encoding="utf-8")):
        gid = None
        snt = ""
        graph_lines: list[str] = []
        for line in lines:
            stripped = line.strip()
            if stripped.startswith("# ::id"):
                rest = stripped[len("# ::id") :].strip()
                gid = rest.split()[0] if rest else None
            elif stripped.startswith("# ::snt"):
                snt = stripped[len("# ::snt") :].strip()
            elif stripped.startswith("#"):
                continue
            else:
                graph_lines.append(line)
        if gid is None:
            gid = f"{path.name}:{start}"
        if not graph_lines:
            errors.append(BlockError(start, f"block {gid!r} has no PENMAN expression"))
            continue
        try:
            graph = parse_penman("\n".join(graph_lines))
        except PenmanError as e:
            errors.append(BlockError(start, f"block {gid!r}: {e}"))
            continue
        violations = validate(graph)
        if violations:
            errors.append(BlockError(start, f"block {gid!r}: {violations[0].message}"))
            continue
        instances.append(make_full_instance(gid, snt, graph))
    return CorpusReadResult(instances=tuple(instances), errors=tuple(errors))


def write_corpus(instances: Sequence[Instance], path: str | Path) -> None:
    """Write instances back out in the LDC block format."""
    blocks = []
    for inst in instances:
        blocks.append(f"# ::id {inst.id}\n# ::snt {inst.snt}\n{serialize_penman(inst.graph)}\n")
    Path(path).write_text("\n".join(blocks), encoding="utf-8")


# --- synthetic corpus ------------------------------------------------------

_FRAMES = (
    "want-01", "go-02", "die-01", "say-01", "believe-01", "see-01",
    "help-01", "make-02", "know-01", "give-01", "leave-11", "find-01",
    "increase-01", "describe-01", "fear-01",
)
_ENTITIES = (
    "person", "soldier", "city", "country", "organization", "team",
    "car", "book", "dog", "house", "government-organization", "thing",
)
_NAMES = ("Adana", "Boston", "Carmen", "Delhi", "Elbe", "Fargo", "Gaia", "Hanoi")
_ARG_ROLES = (":ARG0", ":ARG1", ":ARG2", ":ARG3", ":ARG4")
_MOD_ROLES = (":mod", ":time", ":location", ":manner", ":topic", ":purpose", ":degree")

_MAX_NODES = 24
_REENTRANCY_P = 0.15


class _TreeNode:
    __slots__ = ("var", "concept", "level", "children", "attrs", "reentrant")

    def __init__(self, var: str, concept: str, level: int):
        self.var = var
        self.concept = concept
        self.level = level
        self.children: list[tuple[str, _TreeNode]] = []
        self.attrs: list[tuple[str, str]] = []
        self.reentrant: list[tuple[str, str]] = []  # (role, target var)


def _gen_graph(rng: random.Random, target_depth: int) -> AmrGraph:
    """One random graph of exactly `target_depth` levels.

    A backbone chain guarantees the depth; extra nodes, attributes, name
    structures and re-entrant edges decorate it.  Re-entrant edges only
    point at nodes earlier in DFS order that are not ancestors, which keeps
    the graph acyclic and every node at its tree level.
    """
    counter = 0

    def fresh(concept: str, level: int) -> _TreeNode:
        nonlocal counter
        var = f"v{counter}"
        counter += 1
        return _TreeNode(var, concept, level)

    def pick_concept(level: int) -> str:
        if level == 1 or rng.random() < 0.55:
            return rng.choice(_FRAMES)
        return rng.choice(_ENTITIES)

    root = fresh(pick_concept(1), 1)
    nodes = [root]
    # backbone: one chain reaching the target depth
    tip = root
    for level in range(2, target_depth + 1):
        child = fresh(pick_concept(level), level)
        tip.children.append((_ARG_ROLES[len(tip.children) % len(_ARG_ROLES)], child))
        nodes.append(child)
        tip = child
    # decoration: random extra children anywhere above the depth limit
    budget = _MAX_NODES - len(nodes)
    for node in list(nodes):
        if budget <= 0:
            break
        if node.level >= target_depth:
            continue
        for _ in range(rng.randrange(0, 3)):
            if budget <= 0:
                break
            child = fresh(pick_concept(node.level + 1), node.level + 1)
            role = rng.choice(_ARG_ROLES + _MOD_ROLES)
            node.children.append((role, child))
            nodes.append(child)
            budget -= 1

    # attributes and name structures
    for node in nodes:
        if node.concept in _ENTITIES and node.level < target_depth and budget > 0 and rng.random() < 0.3:
            name = fresh("name", node.level + 1)
            words = rng.sample(_NAMES, k=rng.randrange(1, 3))
            name.attrs = [(f":op{i + 1}", f'"{w}"') for i, w in enumerate(words)]
            node.children.append((":name", name))
            nodes.append(name)
            budget -= 1
            if rng.random() < 0.5:
                node.attrs.append((":wiki", f'"{words[0]}"'))
        if rng.random() < 0.15:
            node.attrs.append((":polarity", "-"))
        if rng.random() < 0.2:
            node.attrs.append((":quant", str(rng.randrange(1, 100))))

    # DFS order and ancestor sets for safe re-entrant targets
    dfs: list[_TreeNode] = []
    ancestors: dict[str, set[str]] = {}

    def walk(node: _TreeNode, anc: set[str]) -> None:
        dfs.append(node)
        ancestors[node.var] = set(anc)
        for _role, child in node.children:
            walk(child, anc | {node.var})

    walk(root, set())
    position = {node.var: i for i, node in enumerate(dfs)}
    for node in dfs:
        if rng.random() >= _REENTRANCY_P:
            continue
        candidates = [
            t for t in dfs
            if position[t.var] < position[node.var]
            and t.var not in ancestors[node.var]
            and t.concept != "name"
        ]
        if candidates:
            target = candidates[rng.randrange(len(candidates))]
            node.reentrant.append((rng.choice(_ARG_ROLES), target.var))

    triples: list[Triple] = []

    def emit(node: _TreeNode) -> None:
        triples.append(Triple(node.var, ":instance", node.concept, "instance"))
        for role, child in node.children:
            triples.append(Triple(node.var, role, child.var, "relation"))
            emit(child)
        for role, target in node.reentrant:
            triples.append(Triple(node.var, role, target, "relation"))
        for role, value in node.attrs:
            triples.append(Triple(node.var, role, value, "attribute"))

    emit(root)
    return AmrGraph(root=root.var, triples=tuple(triples))


def _render_sentence(graph: AmrGraph, rng: random.Random) -> str:
    lemmas = []
    for _v, concept in graph.instances:
        if concept == "name":
            continue
        lemma = concept.rsplit("-", 1)[0] if concept.split("-")[-1].isdigit() else concept
        lemmas.append(lemma.replace("-", " "))
    templates = (
        "The {} happened .",
        "They saw the {} today .",
        "A report about the {} came out .",
        "Nobody expected the {} .",
    )
    return templates[rng.randrange(len(templates))].format(" ".join(lemmas))


def gen_synthetic_corpus(
    n: int,
    depth_range: tuple[int, int] = (1, 6),
    seed: int = 0,
    id_prefix: str = "synth",
) -> list[Instance]:
    """Deterministic corpus of n graphs, depths cycling over depth_range.

    Each graph draws from its own seeded stream, so corpora of different
    sizes share a prefix and regeneration is reproducible.
    """
    lo, hi = depth_range
    if n < 1:
        raise InvalidRange(f"n must be >= 1, got {n}")
    if lo < 1 or hi > 12 or lo > hi:
        raise InvalidRange(f"depth_range must lie within [1, 12], got {depth_range}")
    out: list[Instance] = []
    depths = list(range(lo, hi + 1))
    for i in range(n):
        rng = child_rng(seed, f"graph:{i}")
        target = depths[i % len(depths)]
        graph = _gen_graph(rng, target)
        gid = f"{id_prefix}-{i:05d}"
        out.append(make_full_instance(gid, _render_sentence(graph, rng), graph))
    return out


# --- JSONL persistence -----------------------------------------------------

def _read_lines(path: str | Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _parse_header(line: str, expect_format: str, expect_version: int, path: str | Path) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise JsonlError(f"{path}: line 1: not JSON ({e})") from None
    if not isinstance(header, dict) or header.get("format") != expect_format:
        raise JsonlError(f"{path}: line 1: expected a {expect_format!r} header, got {line[:80]!r}")
    if header.get("format_version") != expect_version:
        raise VersionMismatch(
            f"{path}: format_version {header.get('format_version')!r}, this reader supports {expect_version}"
        )
    return header


def write_instances(instances: Sequence[Instance], path: str | Path) -> None:
    lines = [canonical_json({"format": "instances", "format_version": INSTANCES_FORMAT_VERSION})]
    for inst in instances:
        lines.append(
            canonical_json(
                {
                    "id": inst.id,
                    "snt": inst.snt,
                    "tokens": list(inst.tokens),
                    "depth": inst.depth,
                    "bucket": inst.bucket,
                    "kind": inst.kind,
                    "penman": serialize_penman(inst.graph),
                    "parent_id": inst.parent_id,
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instances(path: str | Path) -> list[Instance]:
    """Load an instance file; every graph is re-parsed and re-validated."""
    lines = _read_lines(path)
    if not lines:
        raise JsonlError(f"{path}: empty file")
    _parse_header(lines[0], "instances", INSTANCES_FORMAT_VERSION, path)
    out: list[Instance] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            graph = parse_penman(d["penman"])
        except (json.JSONDecodeError, KeyError, PenmanError) as e:
            raise JsonlError(f"{path}: line {lineno}: {e}") from None
        violations = validate(graph)
        if violations:
            raise JsonlError(f"{path}: line {lineno}: invalid graph: {violations[0].message}")
        if compute_depth(graph).graph_depth != d["depth"]:
            raise JsonlError(f"{path}: line {lineno}: stored depth {d['depth']} disagrees with the graph")
        out.append(
            Instance(
                id=d["id"],
                snt=d["snt"],
                graph=graph,
                depth=d["depth"],
                bucket=d["bucket"],
                kind=d["kind"],
                tokens=tuple(d["tokens"]),
                parent_id=d.get("parent_id"),
            )
        )
    return out


def write_buckets(bucket_set: BucketSet, path: str | Path) -> None:
    lines = [
        canonical_json(
            {
                "format": "buckets",
                "format_version": BUCKETS_FORMAT_VERSION,
                "level": bucket_set.level,
                "max_index": bucket_set.max_index,
            }
        )
    ]
    for idx in sorted(bucket_set.buckets):
        lines.append(
            canonical_json({"level": bucket_set.level, "bucket": idx, "instance_ids": list(bucket_set.buckets[idx])})
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_buckets(path: str | Path) -> BucketSet:
    lines = _read_lines(path)
    if not lines:
        raise JsonlError(f"{path}: empty file")
    header = _parse_header(lines[0], "buckets", BUCKETS_FORMAT_VERSION, path)
    buckets: dict[int, tuple[str, ...]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            buckets[int(d["bucket"])] = tuple(d["instance_ids"])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise JsonlError(f"{path}: line {lineno}: {e}") from None
    max_index = header["max_index"]
    if sorted(buckets) != list(range(1, max_index + 1)):
        raise JsonlError(f"{path}: bucket indices {sorted(buckets)} are not contiguous 1..{max_index}")
    return BucketSet(level=header["level"], max_index=max_index, buckets=buckets)


def write_schedule(schedule: Schedule, path: str | Path) -> None:
    Path(path).write_text("\n".join(schedule_lines(schedule)) + "\n", encoding="utf-8")


def read_schedule(path: str | Path) -> Schedule:
    lines = _read_lines(path)
    if not lines:
        raise JsonlError(f"{path}: empty file")
    try:
        schedule = schedule_from_lines(lines)
    except (ValueError, KeyError, TypeError) as e:
        if isinstance(e, ValueError) and "format_version" in str(e):
            raise VersionMismatch(f"{path}: {e}") from None
        raise JsonlError(f"{path}: {e}") from None
    for i, step in enumerate(schedule.steps, start=1):
        if step.step != i:
            raise JsonlError(f"{path}: step numbering breaks at position {i} (found {step.step})")
    return schedule
