"""Pointer-token linearization of AMR graphs and its inverse.

A graph becomes a flat token sequence by walking it depth-first from the
root: each variable's first visit opens a `( <Ri> concept ... )` frame, and
later mentions of the same variable emit just the pointer `<Ri>`.  Pointer
indices count first visits, so `<R0>` is always the root.  Attribute
constants appear inline after their role.

Sub-graph training targets additionally carry a literal depth token such as
`<2>` in front of the sequence; the decoder consumes it in place of its
usual start token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .graph import (
    INSTANCE_ROLE,
    KIND_ATTRIBUTE,
    KIND_INSTANCE,
    KIND_RELATION,
    AmrGraph,
    InvalidDepth,
    PenmanError,
    Triple,
)

POINTER_RE = re.compile(r"^<R(\d+)>$")
DEPTH_RE = re.compile(r"^<(\d+)>$")

UNKNOWN_CONCEPT = "amr-unknown"


class Unrecoverable(PenmanError):
    """Token sequence too damaged to rebuild any graph from."""


@dataclass(frozen=True)
class TokenSequence:
    """Linearized graph, optionally prefixed by a depth token.

    `tokens` excludes the depth tag; `as_list()` gives the full decoder
    target including it.
    """

    tokens: tuple[str, ...]
    depth_tag: int | None = None

    def as_list(self) -> list[str]:
        if self.depth_tag is None:
            return list(self.tokens)
        return [f"<{self.depth_tag}>", *self.tokens]

    def text(self) -> str:
        return " ".join(self.as_list())


def with_depth_token(seq: TokenSequence, depth: int) -> TokenSequence:
    if depth < 1:
        raise InvalidDepth(f"depth must be >= 1, got {depth}")
    return TokenSequence(tokens=seq.tokens, depth_tag=depth)


def linearize(graph: AmrGraph) -> TokenSequence:
    """Graph -> pointer-token sequence, DFS in stored triple order."""
    concepts = graph.concepts()
    outgoing = graph.outgoing()
    pointer: dict[str, int] = {}
    tokens: list[str] = []

    def visit(v: str) -> None:
        pointer[v] = len(pointer)
        tokens.append("(")
        tokens.append(f"<R{pointer[v]}>")
        tokens.append(concepts[v])
        for t in outgoing.get(v, ()):
            tokens.append(t.role)
            if t.kind == KIND_ATTRIBUTE or t.target not in concepts:
                tokens.append(t.target)
            elif t.target in pointer:
                tokens.append(f"<R{pointer[t.target]}>")
            else:
                visit(t.target)
        tokens.append(")")

    visit(graph.root)
    return TokenSequence(tokens=tuple(tokens))


# --- delinearization -------------------------------------------------------

_NUMBER_RE = re.compile(r"^[+-]?\d+(\.\d+)?([eE][+-]?\d+)?$")


class _Frame:
    __slots__ = ("var", "concept", "children", "explicit")

    def __init__(self, var: str, explicit: bool):
        self.var = var
        self.concept: str | None = None
        self.children: list[tuple[str, object]] = []
        self.explicit = explicit  # opened by a literal '(' (vs. implied by a bare pointer)


def delinearize(tokens: list[str] | tuple[str, ...]) -> AmrGraph:
    """Pointer-token sequence -> graph, tolerating common decoder damage.

    Recovery rules: unbalanced trailing frames are auto-closed; a pointer
    with no concept becomes `amr-unknown`; a role with no following node is
    dropped; tokens after the root frame closes are ignored.  Raises
    Unrecoverable when no root frame can be found at all.
    """
    toks = list(tokens)
    if toks and DEPTH_RE.match(toks[0]) and not POINTER_RE.match(toks[0]):
        toks = toks[1:]
    # skip leading junk before the first '(' or pointer
    start = 0
    while start < len(toks) and toks[start] != "(" and not POINTER_RE.match(toks[start]):
        start += 1
    toks = toks[start:]
    if not toks:
        raise Unrecoverable("no frame opener in token sequence")

    frames: dict[int, _Frame] = {}  # pointer index -> frame
    anon = 0

    def frame_for(idx: int) -> _Frame:
        if idx not in frames:
            frames[idx] = _Frame(f"z{idx}", explicit=False)
        return frames[idx]

    root: _Frame | None = None
    stack: list[_Frame] = []
    pending_role: str | None = None
    i = 0

    def attach(child: object) -> None:
        nonlocal pending_role
        if stack:
            role = pending_role if pending_role is not None else ":rel"
            stack[-1].children.append((role, child))
        pending_role = None

    while i < len(toks):
        tok = toks[i]
        if root is not None and not stack:
            break  # rule (d): after the root frame closes, stop reading
        if tok == "(":
            i += 1
            ptr = None
            if i < len(toks):
                m = POINTER_RE.match(toks[i])
                if m:
                    ptr = int(m.group(1))
                    i += 1
            if ptr is not None and ptr in frames and frames[ptr].explicit:
                # duplicate open of a known pointer: treat as a re-entrant mention
                attach(frames[ptr])
                continue
            if ptr is None:
                f = _Frame(f"u{anon}", explicit=True)
                anon += 1
            else:
                f = frame_for(ptr)
                f.explicit = True
            if i < len(toks) and toks[i] not in ("(", ")") and not toks[i].startswith(":") and not POINTER_RE.match(toks[i]):
                f.concept = toks[i]
                i += 1
            attach(f)
            stack.append(f)
            if root is None:
                root = f
        elif tok == ")":
            pending_role = None
            if stack:
                stack.pop()
            i += 1
        elif tok.startswith(":") and len(tok) > 1:
            pending_role = tok  # rule (c): an earlier unconsumed role is dropped
            i += 1
        elif POINTER_RE.match(tok):
            idx = int(POINTER_RE.match(tok).group(1))
            if not stack and root is None:
                # bare pointer opens the root implicitly
                f = frame_for(idx)
                root = f
                stack.append(f)
                if i + 1 < len(toks) and toks[i + 1] not in ("(", ")") and not toks[i + 1].startswith(":") and not POINTER_RE.match(toks[i + 1]):
                    f.concept = toks[i + 1]
                    i += 1
                i += 1
            else:
                attach(frame_for(idx))
                i += 1
        else:
            if pending_role is not None:
                attach(tok)
            # bare constant with no role: noise, skip
            i += 1

    if root is None:
        raise Unrecoverable("no frame opener in token sequence")
    # rule (a): frames still open here are simply treated as closed

    emitted: set[str] = set()
    order: list[Triple] = []

    def emit(f: _Frame) -> None:
        if f.var in emitted:
            return
        emitted.add(f.var)
        concept = f.concept if f.concept is not None else UNKNOWN_CONCEPT
        order.append(Triple(f.var, INSTANCE_ROLE, concept, KIND_INSTANCE))
        for role, child in f.children:
            if isinstance(child, _Frame):
                order.append(Triple(f.var, role, child.var, KIND_RELATION))
                emit(child)
            else:
                order.append(Triple(f.var, role, str(child), KIND_ATTRIBUTE))

    emit(root)
    # mentioned-but-never-opened pointers need instance bindings too (rule b)
    for idx in sorted(frames):
        f = frames[idx]
        if f.var not in emitted:
            order.append(Triple(f.var, INSTANCE_ROLE, f.concept or UNKNOWN_CONCEPT, KIND_INSTANCE))
            emitted.add(f.var)
    return AmrGraph(root=root.var, triples=tuple(order))


def parse_token_text(text: str) -> list[str]:
    """Whitespace-split a serialized token sequence."""
    return text.split()


__all__ = [
    "DEPTH_RE",
    "POINTER_RE",
    "TokenSequence",
    "Unrecoverable",
    "delinearize",
    "linearize",
    "parse_token_text",
    "with_depth_token",
]
