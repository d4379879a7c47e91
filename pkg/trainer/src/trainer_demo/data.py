"""Readers for the instance and schedule JSONL wire formats, plus the
whitespace-token vocabularies built from them.

This package talks to the curriculum tooling through files and its CLI only,
so the parsers here are deliberately independent of that implementation.
Both file kinds start with a header line carrying `format` and
`format_version`; records follow one JSON object per line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

INSTANCES_FORMAT = "instances"
SCHEDULE_FORMAT = "schedule"
SUPPORTED_VERSION = 1

KIND_FULL = "full"
KIND_SUB = "sub"

PAD = "<pad>"
UNK = "<unk>"
BOS = "<bos>"
EOS = "<eos>"
SPECIALS = (PAD, UNK, BOS, EOS)


class FormatError(ValueError):
    """Wire-format violation: bad JSON, header, version, or record shape."""


class ManifestMismatch(ValueError):
    """A schedule step references an instance id that was never loaded."""

    def __init__(self, step: int, instance_id: str):
        self.step = step
        self.instance_id = instance_id
        super().__init__(f"step {step}: unknown instance id {instance_id!r}")


@dataclass(frozen=True)
class Record:
    """One training instance as read off the wire.

    `tokens` is the linearized target sequence; for kind="sub" records its
    first element is the literal depth token that replaces the decoder start.
    """

    id: str
    snt: str
    tokens: tuple[str, ...]
    depth: int
    bucket: int
    kind: str


class Step(NamedTuple):
    step: int
    phase: str
    episode: int
    ids: tuple[str, ...]


@dataclass(frozen=True)
class Manifest:
    config: dict
    n: int
    m: int
    bucket_digest: str
    steps: tuple[Step, ...]


def _parse_lines(path: str | Path, expected_format: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for every record line after the header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    for number, line in enumerate(lines, start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{number}: bad JSON ({e.msg})") from None
        if not isinstance(obj, dict):
            raise FormatError(f"{path}:{number}: expected an object")
        if number == 1:
            if obj.get("format") != expected_format:
                raise FormatError(f"{path}: expected format {expected_format!r}, got {obj.get('format')!r}")
            if obj.get("format_version") != SUPPORTED_VERSION:
                raise FormatError(
                    f"{path}: unsupported format_version {obj.get('format_version')!r} "
                    f"(this reader speaks {SUPPORTED_VERSION})"
                )
        yield number, obj


def read_records(*paths: str | Path) -> dict[str, Record]:
    """Load one or more instance files into an id-keyed map.

    Full-graph and sub-graph instances ship in separate files, so callers
    usually pass both; ids must stay unique across the union.
    """
    records: dict[str, Record] = {}
    for path in paths:
        for number, obj in _parse_lines(path, INSTANCES_FORMAT):
            if number == 1:
                continue
            try:
                rec = Record(
                    id=str(obj["id"]),
                    snt=str(obj["snt"]),
                    tokens=tuple(str(t) for t in obj["tokens"]),
                    depth=int(obj["depth"]),
                    bucket=int(obj["bucket"]),
                    kind=str(obj["kind"]),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"{path}:{number}: bad instance record ({e})") from None
            if rec.kind not in (KIND_FULL, KIND_SUB):
                raise FormatError(f"{path}:{number}: unknown kind {rec.kind!r}")
            if not rec.tokens:
                raise FormatError(f"{path}:{number}: empty token sequence")
            if rec.id in records:
                raise FormatError(f"{path}:{number}: duplicate instance id {rec.id!r}")
            records[rec.id] = rec
    return records


def read_manifest(path: str | Path) -> Manifest:
    header: dict | None = None
    steps: list[Step] = []
    for number, obj in _parse_lines(path, SCHEDULE_FORMAT):
        if number == 1:
            header = obj
            continue
        try:
            step = Step(
                step=int(obj["step"]),
                phase=str(obj["phase"]),
                episode=int(obj["episode"]),
                ids=tuple(str(i) for i in obj["ids"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{path}:{number}: bad step record ({e})") from None
        if step.step != len(steps) + 1:
            raise FormatError(f"{path}:{number}: step numbering breaks (found {step.step}, expected {len(steps) + 1})")
        steps.append(step)
    assert header is not None
    try:
        return Manifest(
            config=dict(header["config"]),
            n=int(header["n"]),
            m=int(header["m"]),
            bucket_digest=str(header["bucket_digest"]),
            steps=tuple(steps),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: bad header ({e})") from None


def check_coverage(manifest: Manifest, records: dict[str, Record]) -> None:
    """Abort with the offending step index when the manifest references an
    instance the loaded files do not contain."""
    for step in manifest.steps:
        for instance_id in step.ids:
            if instance_id not in records:
                raise ManifestMismatch(step.step, instance_id)


class Vocab:
    """Token-to-id map with reserved specials and an unknown fallback.

    Ids are assigned in first-seen order after the specials, so a vocabulary
    built from the same instance file is always identical.
    """

    def __init__(self, tokens: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        for tok in SPECIALS:
            self._ids[tok] = len(self._ids)
        for tok in tokens:
            if tok not in self._ids:
                self._ids[tok] = len(self._ids)
        self._tokens = list(self._ids)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    def id(self, token: str) -> int:
        return self._ids.get(token, self._ids[UNK])

    def token(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        unk = self._ids[UNK]
        return [self._ids.get(t, unk) for t in tokens]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self._tokens[i] for i in ids]

    def as_list(self) -> list[str]:
        """Serializable form; `Vocab(lst[len(SPECIALS):])` rebuilds it."""
        return list(self._tokens)


def source_vocab(records: Iterable[Record]) -> Vocab:
    def toks() -> Iterator[str]:
        for rec in records:
            yield from rec.snt.split()

    return Vocab(toks())


def target_vocab(records: Iterable[Record]) -> Vocab:
    def toks() -> Iterator[str]:
        for rec in records:
            yield from rec.tokens

    return Vocab(toks())
