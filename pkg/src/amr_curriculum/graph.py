"""AMR graphs and their PENMAN text form.

The graph representation used across the toolkit is a root variable plus a
flat, ordered sequence of triples (instance / relation / attribute).  Triple
order is the order of appearance in the source text and is the tie-break for
every depth-first traversal downstream (serialization, linearization, depth
assignment), so it is preserved verbatim and never sorted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

INSTANCE_ROLE = ":instance"
TOP_ROLE = ":top"

KIND_INSTANCE = "instance"
KIND_RELATION = "relation"
KIND_ATTRIBUTE = "attribute"


class PenmanError(Exception):
    """Base class for PENMAN parse failures."""


class UnbalancedParens(PenmanError):
    pass


class DuplicateVariable(PenmanError):
    pass


class DanglingReference(PenmanError):
    pass


class EmptyGraph(PenmanError):
    pass


class InvalidDepth(ValueError):
    """Raised when a depth argument is < 1."""


class Triple(NamedTuple):
    source: str
    role: str
    target: str
    kind: str  # KIND_INSTANCE | KIND_RELATION | KIND_ATTRIBUTE


@dataclass(frozen=True)
class AmrGraph:
    """Rooted directed labeled graph over variables, concepts and constants.

    Immutable after construction; safe to share across threads.  `triples`
    interleaves all three kinds in source order, so per-node child order
    (relations and attributes together) survives round trips.
    """

    root: str
    triples: tuple[Triple, ...]

    @property
    def instances(self) -> tuple[tuple[str, str], ...]:
        return tuple((t.source, t.target) for t in self.triples if t.kind == KIND_INSTANCE)

    @property
    def relations(self) -> tuple[tuple[str, str, str], ...]:
        return tuple((t.source, t.role, t.target) for t in self.triples if t.kind == KIND_RELATION)

    @property
    def attributes(self) -> tuple[tuple[str, str, str], ...]:
        return tuple((t.source, t.role, t.target) for t in self.triples if t.kind == KIND_ATTRIBUTE)

    def concepts(self) -> dict[str, str]:
        """Variable -> concept map (first binding wins)."""
        out: dict[str, str] = {}
        for t in self.triples:
            if t.kind == KIND_INSTANCE and t.source not in out:
                out[t.source] = t.target
        return out

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.instances)

    def outgoing(self) -> dict[str, list[Triple]]:
        """Per-variable relation/attribute triples, in stored order."""
        out: dict[str, list[Triple]] = {v: [] for v, _ in self.instances}
        for t in self.triples:
            if t.kind != KIND_INSTANCE:
                out.setdefault(t.source, []).append(t)
        return out


@dataclass(frozen=True)
class Violation:
    code: str
    element: str
    message: str


def make_graph(
    root: str,
    instances: Iterable[tuple[str, str]],
    relations: Iterable[tuple[str, str, str]] = (),
    attributes: Iterable[tuple[str, str, str]] = (),
) -> AmrGraph:
    """Build a graph from separate triple lists (instances first, then
    relations, then attributes).  Convenience for tests and synthesis; parsed
    graphs keep their source interleaving instead."""
    triples = [Triple(v, INSTANCE_ROLE, c, KIND_INSTANCE) for v, c in instances]
    triples += [Triple(s, r, t, KIND_RELATION) for s, r, t in relations]
    triples += [Triple(s, r, t, KIND_ATTRIBUTE) for s, r, t in attributes]
    return AmrGraph(root=root, triples=tuple(triples))


# --- tokenizer -------------------------------------------------------------

# Alignment markup (~e.N / ~N,M) is stripped from atoms; quoted strings keep
# their quotes so constants survive round trips verbatim.
_TOKEN_RE = re.compile(
    r"""
    (?P<string>"(?:[^"\\]|\\.)*"(?:~[^\s()]*)?)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<slash>/)
  | (?P<atom>[^\s()/]+)
    """,
    re.VERBOSE,
)

_NUMBER_RE = re.compile(r"^[+-]?\d+(\.\d+)?([eE][+-]?\d+)?$")

# Short lowercase tokens are how AMR variables look (d, s2, ii, z14).  A bare
# token of this shape after a role is a re-entrant mention and must be bound;
# anything longer or oddly shaped is read as a symbol constant.
_VARLIKE_RE = re.compile(r"^[a-z][a-z]?\d*$")


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    for m in _TOKEN_RE.finditer(text):
        if m.start() != pos and text[pos : m.start()].strip():
            raise PenmanError(f"unreadable input near {text[pos:m.start()]!r}")
        pos = m.end()
        if m.lastgroup == "string":
            raw = m.group("string")
            tokens.append(raw[: raw.rindex('"') + 1])
        elif m.lastgroup == "atom":
            tokens.append(m.group("atom").split("~", 1)[0])
        else:
            tokens.append(m.group())
    if text[pos:].strip():
        raise PenmanError(f"unreadable input near {text[pos:]!r}")
    return tokens


# --- parsing ---------------------------------------------------------------

_SPECIAL = {"(", ")", "/"}


class _Node:
    __slots__ = ("var", "concept", "children")

    def __init__(self, var: str, concept: str):
        self.var = var
        self.concept = concept
        self.children: list[tuple[str, object]] = []  # (role, _Node | leaf token)


def _parse_node(tokens: list[str], pos: int, bound: dict[str, str]) -> tuple[_Node, int]:
    if pos >= len(tokens):
        raise UnbalancedParens("unexpected end of input")
    if tokens[pos] != "(":
        raise PenmanError(f"expected '(' at token {pos}, found {tokens[pos]!r}")
    pos += 1
    if pos >= len(tokens) or tokens[pos] in _SPECIAL or tokens[pos].startswith('"'):
        raise PenmanError("expected a variable after '('")
    var = tokens[pos]
    pos += 1
    if pos >= len(tokens) or tokens[pos] != "/":
        raise PenmanError(f"expected '/' after variable {var!r}")
    pos += 1
    if pos >= len(tokens) or tokens[pos] in _SPECIAL:
        raise PenmanError(f"expected a concept for variable {var!r}")
    concept = tokens[pos]
    pos += 1
    if var in bound:
        raise DuplicateVariable(f"variable {var!r} bound to {bound[var]!r} and {concept!r}")
    bound[var] = concept
    node = _Node(var, concept)
    while True:
        if pos >= len(tokens):
            raise UnbalancedParens(f"missing ')' closing {var!r}")
        tok = tokens[pos]
        if tok == ")":
            return node, pos + 1
        if not tok.startswith(":") or len(tok) < 2:
            raise PenmanError(f"expected a :role inside {var!r}, found {tok!r}")
        role = tok
        pos += 1
        if pos >= len(tokens):
            raise UnbalancedParens(f"role {role!r} has no target")
        nxt = tokens[pos]
        if nxt == "(":
            child, pos = _parse_node(tokens, pos, bound)
            node.children.append((role, child))
        elif nxt in (")", "/"):
            raise PenmanError(f"role {role!r} has no target")
        else:
            node.children.append((role, nxt))
            pos += 1


def _emit_triples(node: _Node, bound: dict[str, str], out: list[Triple]) -> None:
    out.append(Triple(node.var, INSTANCE_ROLE, node.concept, KIND_INSTANCE))
    for role, child in node.children:
        if isinstance(child, _Node):
            out.append(Triple(node.var, role, child.var, KIND_RELATION))
            _emit_triples(child, bound, out)
        else:
            tok = str(child)
            if not tok.startswith('"') and tok in bound:
                out.append(Triple(node.var, role, tok, KIND_RELATION))
            elif tok.startswith('"') or _NUMBER_RE.match(tok) or tok in ("-", "+"):
                out.append(Triple(node.var, role, tok, KIND_ATTRIBUTE))
            elif _VARLIKE_RE.match(tok):
                raise DanglingReference(f"variable {tok!r} used under {node.var}{role} but never bound")
            else:
                out.append(Triple(node.var, role, tok, KIND_ATTRIBUTE))


def strip_comments(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))


def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN expression (optionally preceded by `# ::` comment
    lines) into an AmrGraph.

    Bare tokens after a role are relations when the token is bound somewhere
    in the expression; otherwise numbers, quoted strings, `-`/`+` and long
    symbols are constants, while short variable-shaped tokens raise
    DanglingReference.
    """
    tokens = _tokenize(strip_comments(text))
    if not tokens:
        raise EmptyGraph("no PENMAN expression found")
    bound: dict[str, str] = {}
    node, pos = _parse_node(tokens, 0, bound)
    if pos != len(tokens):
        if tokens[pos] == ")":
            raise UnbalancedParens(f"unmatched ')' at token {pos}")
        raise PenmanError(f"trailing content after graph: {tokens[pos]!r}")
    triples: list[Triple] = []
    _emit_triples(node, bound, triples)
    return AmrGraph(root=node.var, triples=tuple(triples))


# --- traversal helpers -----------------------------------------------------

def dfs_order(graph: AmrGraph) -> list[str]:
    """Variables in first-visit DFS order from the root, children taken in
    stored triple order.  Re-entrant edges do not revisit."""
    concepts = graph.concepts()
    outgoing = graph.outgoing()
    order: list[str] = []
    seen: set[str] = set()

    def walk(v: str) -> None:
        seen.add(v)
        order.append(v)
        for t in outgoing.get(v, ()):
            if t.kind == KIND_RELATION and t.target in concepts and t.target not in seen:
                walk(t.target)

    if graph.root in concepts:
        walk(graph.root)
    return order


def canonical_rename(graph: AmrGraph, prefix: str = "z") -> AmrGraph:
    """Rename variables to `<prefix>0`, `<prefix>1`, ... by first DFS visit.

    Two graphs are equal up to variable naming iff their canonical renamings
    have equal triple multisets.
    """
    mapping = {v: f"{prefix}{i}" for i, v in enumerate(dfs_order(graph))}
    concepts = graph.concepts()
    triples = []
    for t in graph.triples:
        src = mapping.get(t.source, t.source)
        tgt = mapping.get(t.target, t.target) if t.kind == KIND_RELATION and t.target in concepts else t.target
        triples.append(Triple(src, t.role, tgt, t.kind))
    return AmrGraph(root=mapping.get(graph.root, graph.root), triples=tuple(triples))


def graphs_equal(a: AmrGraph, b: AmrGraph, rename: bool = True) -> bool:
    """Triple-multiset equality, by default up to variable renaming."""
    if rename:
        a, b = canonical_rename(a), canonical_rename(b)
    return a.root == b.root and sorted(a.triples) == sorted(b.triples)


# --- serialization ---------------------------------------------------------

def serialize_penman(graph: AmrGraph) -> str:
    """Render a valid graph as a single-line PENMAN string.

    DFS from the root in stored triple order: the first visit of a variable
    prints `(var / concept ...)`, later visits print the bare variable.
    """
    concepts = graph.concepts()
    outgoing = graph.outgoing()
    visited: set[str] = set()

    def emit(v: str) -> str:
        visited.add(v)
        parts = [f"({v} / {concepts[v]}"]
        for t in outgoing.get(v, ()):
            if t.kind == KIND_ATTRIBUTE:
                parts.append(f"{t.role} {t.target}")
            elif t.target in visited or t.target not in concepts:
                parts.append(f"{t.role} {t.target}")
            else:
                parts.append(f"{t.role} {emit(t.target)}")
        return " ".join(parts) + ")"

    return emit(graph.root)


# --- validation ------------------------------------------------------------

def validate(graph: AmrGraph) -> list[Violation]:
    """Check every AmrGraph invariant; an empty list means the graph is valid.

    Violations are data, not exceptions, so corpus tooling can report them
    without aborting.
    """
    out: list[Violation] = []
    instances = graph.instances
    if not instances:
        return [Violation("empty-graph", "", "graph has no instance triples")]

    seen_vars: set[str] = set()
    for v, _concept in instances:
        if v in seen_vars:
            out.append(Violation("duplicate-variable", v, f"variable {v!r} has multiple instance triples"))
        seen_vars.add(v)

    if graph.root not in seen_vars:
        out.append(Violation("root-unbound", graph.root, f"root {graph.root!r} has no instance triple"))

    for t in graph.triples:
        if t.kind == KIND_INSTANCE:
            if t.role != INSTANCE_ROLE:
                out.append(Violation("bad-role", t.role, f"instance triple for {t.source!r} has role {t.role!r}"))
            continue
        if not t.role.startswith(":"):
            out.append(Violation("bad-role", t.role, f"role {t.role!r} does not begin with ':'"))
        if t.source not in seen_vars:
            out.append(Violation("dangling-reference", t.source, f"{t.kind} source {t.source!r} is unbound"))
        if t.kind == KIND_RELATION and t.target not in seen_vars:
            out.append(Violation("dangling-reference", t.target, f"relation target {t.target!r} is unbound"))
        if t.kind not in (KIND_RELATION, KIND_ATTRIBUTE):
            out.append(Violation("bad-kind", t.kind, f"unknown triple kind {t.kind!r}"))

    # Undirected connectivity over variables, then directed root-reachability
    # (the latter is what serialization and depth assignment rely on).
    if graph.root in seen_vars:
        adj: dict[str, set[str]] = {v: set() for v in seen_vars}
        for s, _r, t in graph.relations:
            if s in adj and t in adj:
                adj[s].add(t)
                adj[t].add(s)
        reached = {graph.root}
        stack = [graph.root]
        while stack:
            for n in adj[stack.pop()]:
                if n not in reached:
                    reached.add(n)
                    stack.append(n)
        for v, _concept in instances:
            if v not in reached:
                out.append(Violation("disconnected", v, f"variable {v!r} is not connected to the root"))
        if len(reached) == len(seen_vars):
            directed = set(dfs_order(graph))
            for v, _concept in instances:
                if v not in directed:
                    out.append(Violation("unreachable", v, f"variable {v!r} is not reachable from the root along edge direction"))
    return out


def reentrant_variables(graph: AmrGraph) -> list[str]:
    """Variables with two or more incoming relation edges, in instance order."""
    incoming: dict[str, int] = {}
    for _s, _r, t in graph.relations:
        incoming[t] = incoming.get(t, 0) + 1
    return [v for v, _c in graph.instances if incoming.get(v, 0) >= 2]
