"""Smatch scoring: hill-climbing variable alignment, an exhaustive oracle,
fine-grained metric breakdowns, and depth-stratified reporting.

Graphs are scored over canonical triple bags (instances, attributes with a
synthetic `:top` entry for the root, relations).  The matched count between
two bags under a variable mapping is multiset min-count, so duplicated
triples never match more often than they occur on either side.  Comparison
of roles, concepts and constants is case-sensitive.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Sequence

from .curriculum import child_rng
from .graph import AmrGraph
from .structure import compute_depth

TOP_ROLE = ":top"
UNLABELED_ROLE = ":rel"

FINE_GRAINED_METRICS = (
    "unlabeled",
    "no_wsd",
    "concepts",
    "named_entities",
    "negation",
    "wikification",
    "reentrancies",
    "srl",
)

_SENSE_RE = re.compile(r"-\d{2,}$")
_SRL_RE = re.compile(r"^:ARG\d+(-of)?$")
_OP_RE = re.compile(r"^:op\d+$")

DEFAULT_RESTARTS = 4  # 1 greedy-seeded + 3 random


class TooLarge(ValueError):
    """Oracle enumeration guard exceeded."""


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ScoredPair:
    gold_id: str
    precision: float
    recall: float
    f1: float
    matched: int
    gold_total: int
    pred_total: int
    mapping: dict[str, str] = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class TripleBag:
    """Canonical triple sets for one side of a comparison."""

    instances: tuple[tuple[str, str], ...]  # (var, concept)
    attributes: tuple[tuple[str, str, str], ...]  # (var, role, constant)
    relations: tuple[tuple[str, str, str], ...]  # (source, role, target)

    def total(self) -> int:
        return len(self.instances) + len(self.attributes) + len(self.relations)

    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for v, _c in self.instances:
            seen.setdefault(v)
        for v, _r, _x in self.attributes:
            seen.setdefault(v)
        for s, _r, t in self.relations:
            seen.setdefault(s)
            seen.setdefault(t)
        return tuple(seen)


def graph_bag(graph: AmrGraph, include_top: bool = True) -> TripleBag:
    """Graph -> canonical bag; the root contributes (root, :top, concept)."""
    concepts = graph.concepts()
    attributes = list(graph.attributes)
    if include_top and graph.root in concepts:
        attributes.append((graph.root, TOP_ROLE, concepts[graph.root]))
    return TripleBag(
        instances=graph.instances,
        attributes=tuple(attributes),
        relations=graph.relations,
    )


class _Matcher:
    """Match-count evaluation for mappings between two bags' variables."""

    def __init__(self, gold: TripleBag, pred: TripleBag):
        self.gv = gold.variables()
        self.pv = pred.variables()
        self.g_index = {v: i for i, v in enumerate(self.gv)}
        p_index = {v: i for i, v in enumerate(self.pv)}
        self.gold_total = gold.total()
        self.pred_total = pred.total()

        self.g_instances = [(self.g_index[v], c) for v, c in gold.instances]
        self.g_attributes = [(self.g_index[v], r, x) for v, r, x in gold.attributes]
        self.g_relations = [(self.g_index[s], r, self.g_index[t]) for s, r, t in gold.relations]

        self.p_instances = Counter((p_index[v], c) for v, c in pred.instances)
        self.p_attributes = Counter((p_index[v], r, x) for v, r, x in pred.attributes)
        self.p_relations = Counter((p_index[s], r, p_index[t]) for s, r, t in pred.relations)

        # concept buckets drive greedy seeding
        self.p_by_concept: dict[str, list[int]] = {}
        for v, c in pred.instances:
            self.p_by_concept.setdefault(c, []).append(p_index[v])
        self.g_concept: dict[int, str] = {self.g_index[v]: c for v, c in gold.instances}

    def match_count(self, mapping: Sequence[int]) -> int:
        inst = Counter()
        for gi, c in self.g_instances:
            if mapping[gi] >= 0:
                inst[(mapping[gi], c)] += 1
        attr = Counter()
        for gi, r, x in self.g_attributes:
            if mapping[gi] >= 0:
                attr[(mapping[gi], r, x)] += 1
        rel = Counter()
        for gs, r, gt in self.g_relations:
            if mapping[gs] >= 0 and mapping[gt] >= 0:
                rel[(mapping[gs], r, mapping[gt])] += 1
        matched = 0
        for k, n in inst.items():
            matched += min(n, self.p_instances[k])
        for k, n in attr.items():
            matched += min(n, self.p_attributes[k])
        for k, n in rel.items():
            matched += min(n, self.p_relations[k])
        return matched

    def greedy_mapping(self) -> list[int]:
        """Pair variables with equal concepts in order; rest unmapped."""
        mapping = [-1] * len(self.gv)
        used: set[int] = set()
        for gi in range(len(self.gv)):
            concept = self.g_concept.get(gi)
            if concept is None:
                continue
            for pj in self.p_by_concept.get(concept, ()):
                if pj not in used:
                    mapping[gi] = pj
                    used.add(pj)
                    break
        return mapping

    def random_mapping(self, rng) -> list[int]:
        n, m = len(self.gv), len(self.pv)
        mapping = [-1] * n
        k = min(n, m)
        for gi, pj in zip(rng.sample(range(n), k), rng.sample(range(m), k)):
            mapping[gi] = pj
        return mapping

    def climb(self, mapping: list[int]) -> int:
        """First-improvement hill climbing; returns the final match count."""
        current = self.match_count(mapping)
        best_possible = min(self.gold_total, self.pred_total)
        while current < best_possible:
            current, improved = self._one_pass(mapping, current)
            if not improved:
                break
        return current

    def _one_pass(self, mapping: list[int], current: int) -> tuple[int, bool]:
        n, m = len(self.gv), len(self.pv)
        used = {p for p in mapping if p >= 0}
        for gi in range(n):
            old = mapping[gi]
            options = [pj for pj in range(m) if pj not in used]
            if old >= 0:
                options.append(-1)
            for pj in options:
                mapping[gi] = pj
                c = self.match_count(mapping)
                if c > current:
                    return c, True
                mapping[gi] = old
        for gi in range(n):
            for gk in range(gi + 1, n):
                if mapping[gi] == mapping[gk]:
                    continue  # both unmapped
                mapping[gi], mapping[gk] = mapping[gk], mapping[gi]
                c = self.match_count(mapping)
                if c > current:
                    return c, True
                mapping[gi], mapping[gk] = mapping[gk], mapping[gi]
        return current, False

    def as_var_mapping(self, mapping: Sequence[int]) -> dict[str, str]:
        return {self.gv[gi]: self.pv[pj] for gi, pj in enumerate(mapping) if pj >= 0}


def _finish(
    gold_id: str,
    matched: int,
    gold_total: int,
    pred_total: int,
    mapping: dict[str, str],
    empty_as_perfect: bool = False,
) -> ScoredPair:
    if empty_as_perfect and gold_total == 0 and pred_total == 0:
        return ScoredPair(gold_id, 1.0, 1.0, 1.0, 0, 0, 0, mapping)
    precision = matched / pred_total if pred_total else 0.0
    recall = matched / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ScoredPair(gold_id, precision, recall, f1, matched, gold_total, pred_total, mapping)


def score_bags(
    gold: TripleBag,
    pred: TripleBag,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    gold_id: str = "",
    empty_as_perfect: bool = False,
) -> ScoredPair:
    """Hill-climbing Smatch over two triple bags.

    Restart 0 seeds from greedy concept pairing; later restarts use seeded
    random injective mappings.  Stops early once the best match count hits
    min(gold_total, pred_total), which no mapping can exceed.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    matcher = _Matcher(gold, pred)
    bound = min(matcher.gold_total, matcher.pred_total)
    best_matched = -1
    best_mapping: list[int] = []
    for r in range(restarts):
        if r == 0:
            mapping = matcher.greedy_mapping()
        else:
            mapping = matcher.random_mapping(child_rng(seed, f"restart:{r}"))
        matched = matcher.climb(mapping)
        if matched > best_matched:
            best_matched = matched
            best_mapping = list(mapping)
        if best_matched >= bound:
            break
    return _finish(
        gold_id,
        best_matched,
        matcher.gold_total,
        matcher.pred_total,
        matcher.as_var_mapping(best_mapping),
        empty_as_perfect,
    )


def smatch_score(
    gold: AmrGraph,
    pred: AmrGraph,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    gold_id: str = "",
) -> ScoredPair:
    return score_bags(graph_bag(gold), graph_bag(pred), restarts, seed, gold_id)


def oracle_bags(
    gold: TripleBag,
    pred: TripleBag,
    gold_id: str = "",
    max_vars: int = 8,
    max_enumerations: int = 2_000_000,
    empty_as_perfect: bool = False,
) -> ScoredPair:
    """True optimum by exhausting injective mappings of the smaller side.

    Extending a mapping never lowers the match count, so only maximal
    injective mappings need enumeration.
    """
    matcher = _Matcher(gold, pred)
    n, m = len(matcher.gv), len(matcher.pv)
    small = min(n, m)
    if small > max_vars:
        raise TooLarge(f"min variable count {small} exceeds the oracle guard {max_vars}")
    if math.perm(max(n, m), small) > max_enumerations:
        raise TooLarge(f"{math.perm(max(n, m), small)} mappings exceed the enumeration cap")

    best_matched = -1
    best: list[int] = [-1] * n
    if n <= m:
        for images in permutations(range(m), n):
            matched = matcher.match_count(images)
            if matched > best_matched:
                best_matched = matched
                best = list(images)
    else:
        for images in permutations(range(n), m):
            mapping = [-1] * n
            for pj, gi in enumerate(images):
                mapping[gi] = pj
            matched = matcher.match_count(mapping)
            if matched > best_matched:
                best_matched = matched
                best = mapping
    return _finish(
        gold_id,
        best_matched,
        matcher.gold_total,
        matcher.pred_total,
        matcher.as_var_mapping(best),
        empty_as_perfect,
    )


def smatch_oracle(gold: AmrGraph, pred: AmrGraph, gold_id: str = "") -> ScoredPair:
    return oracle_bags(graph_bag(gold), graph_bag(pred), gold_id)


# --- fine-grained metrics --------------------------------------------------

def _strip_sense(concept: str) -> str:
    return _SENSE_RE.sub("", concept)


def _transform(bag: TripleBag, metric: str) -> TripleBag:
    if metric == "unlabeled":
        return TripleBag(
            instances=bag.instances,
            attributes=bag.attributes,
            relations=tuple((s, UNLABELED_ROLE, t) for s, _r, t in bag.relations),
        )
    if metric == "no_wsd":
        return TripleBag(
            instances=tuple((v, _strip_sense(c)) for v, c in bag.instances),
            attributes=tuple(
                (v, r, _strip_sense(x) if r == TOP_ROLE else x) for v, r, x in bag.attributes
            ),
            relations=bag.relations,
        )
    if metric == "concepts":
        return TripleBag(instances=bag.instances, attributes=(), relations=())
    if metric == "named_entities":
        named = {s for s, r, _t in bag.relations if r == ":name"}
        name_nodes = {t for s, r, t in bag.relations if r == ":name"}
        keep_vars = named | name_nodes
        return TripleBag(
            instances=tuple((v, c) for v, c in bag.instances if v in keep_vars),
            attributes=tuple((v, r, x) for v, r, x in bag.attributes if v in name_nodes and _OP_RE.match(r)),
            relations=tuple((s, r, t) for s, r, t in bag.relations if r == ":name"),
        )
    if metric == "negation":
        return TripleBag(
            instances=(),
            attributes=tuple((v, r, x) for v, r, x in bag.attributes if r == ":polarity"),
            relations=tuple((s, r, t) for s, r, t in bag.relations if r == ":polarity"),
        )
    if metric == "wikification":
        return TripleBag(
            instances=(),
            attributes=tuple((v, r, x) for v, r, x in bag.attributes if r == ":wiki"),
            relations=tuple((s, r, t) for s, r, t in bag.relations if r == ":wiki"),
        )
    if metric == "reentrancies":
        incoming = Counter(t for _s, _r, t in bag.relations)
        reentrant = {v for v, k in incoming.items() if k >= 2}
        return TripleBag(
            instances=tuple((v, c) for v, c in bag.instances if v in reentrant),
            attributes=(),
            relations=tuple(
                (s, r, t) for s, r, t in bag.relations if s in reentrant or t in reentrant
            ),
        )
    if metric == "srl":
        return TripleBag(
            instances=(),
            attributes=(),
            relations=tuple((s, r, t) for s, r, t in bag.relations if _SRL_RE.match(r)),
        )
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class FineGrainedReport:
    gold_id: str
    metrics: dict[str, ScoredPair] = field(hash=False)

    def f1(self, metric: str) -> float:
        return self.metrics[metric].f1


def fine_grained(
    gold: AmrGraph,
    pred: AmrGraph,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    gold_id: str = "",
) -> FineGrainedReport:
    """Smatch over eight transformed bag pairs.

    Metrics over bags that are empty on both sides score 1.0 (the graphs
    agree the phenomenon is absent); empty against non-empty scores 0.0.
    The transformed bags follow the per-metric rules in `_transform` and can
    be inspected directly via that function.
    """
    gold_bag = graph_bag(gold)
    pred_bag = graph_bag(pred)
    metrics: dict[str, ScoredPair] = {}
    for metric in FINE_GRAINED_METRICS:
        metrics[metric] = score_bags(
            _transform(gold_bag, metric),
            _transform(pred_bag, metric),
            restarts=restarts,
            seed=seed,
            gold_id=gold_id,
            empty_as_perfect=True,
        )
    return FineGrainedReport(gold_id=gold_id, metrics=metrics)


# --- aggregation -----------------------------------------------------------

def micro_average(pairs: Sequence[ScoredPair]) -> ScoredPair:
    """Corpus score from pooled matched/gold/pred counts."""
    if not pairs:
        raise EmptyInput("no scored pairs to aggregate")
    matched = sum(p.matched for p in pairs)
    gold_total = sum(p.gold_total for p in pairs)
    pred_total = sum(p.pred_total for p in pairs)
    return _finish("micro", matched, gold_total, pred_total, {})


@dataclass(frozen=True)
class DepthBin:
    label: str
    lo: int
    hi: int | None  # None = open-ended

    def contains(self, depth: int) -> bool:
        return depth >= self.lo and (self.hi is None or depth <= self.hi)


def parse_bin_spec(spec: str) -> list[DepthBin]:
    """Parse "1,2,3,4-6,7+" into depth bins; the trailing "k+" is open."""
    bins: list[DepthBin] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if part.endswith("+"):
            lo = int(part[:-1])
            bins.append(DepthBin(label=f"{lo}+", lo=lo, hi=None))
        elif "-" in part:
            lo_s, hi_s = part.split("-", 1)
            bins.append(DepthBin(label=part, lo=int(lo_s), hi=int(hi_s)))
        else:
            d = int(part)
            bins.append(DepthBin(label=part, lo=d, hi=d))
    if not bins:
        raise ValueError(f"empty bin spec {spec!r}")
    return bins


@dataclass(frozen=True)
class DepthRow:
    bin: DepthBin
    count: int
    mean_f1: float


def depth_stratified_report(
    pairs: Sequence[tuple[AmrGraph, AmrGraph]],
    bin_spec: str | Sequence[DepthBin] = "1,2,3,4,5,6,7+",
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
) -> list[DepthRow]:
    """Mean Smatch f1 per gold-depth bin; bin populations sum to |pairs|
    when the bins cover every observed depth."""
    if not pairs:
        raise EmptyInput("no graph pairs to report on")
    bins = parse_bin_spec(bin_spec) if isinstance(bin_spec, str) else list(bin_spec)
    grouped: dict[int, list[float]] = {i: [] for i in range(len(bins))}
    for gold, pred in pairs:
        depth = compute_depth(gold).graph_depth
        f1 = smatch_score(gold, pred, restarts=restarts, seed=seed).f1
        for i, b in enumerate(bins):
            if b.contains(depth):
                grouped[i].append(f1)
                break
    return [
        DepthRow(bin=b, count=len(grouped[i]), mean_f1=(sum(grouped[i]) / len(grouped[i]) if grouped[i] else 0.0))
        for i, b in enumerate(bins)
    ]


def depth_fraction(graphs: Iterable[AmrGraph], at_least: int) -> float:
    """Fraction of graphs with depth >= at_least."""
    total = 0
    hits = 0
    for g in graphs:
        total += 1
        if compute_depth(g).graph_depth >= at_least:
            hits += 1
    if not total:
        raise EmptyInput("no graphs")
    return hits / total
