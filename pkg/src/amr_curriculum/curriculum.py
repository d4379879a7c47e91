"""Deterministic curriculum schedule compilation.

A schedule is compiled, not sampled at training time: given the two bucket
sets and a config it lists every training step's instance ids up front, so
two runs with the same inputs and seed produce byte-identical manifests.
Phases run sequentially: SC (structure curriculum over sub-graph buckets),
then IC (instance curriculum over full-graph buckets), then FINAL
(seeded-shuffled epochs over the full corpus).

All randomness flows through sha256-derived child seeds, one stream per
phase and episode, so inserting or removing an episode never perturbs the
draws of its neighbors.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

from .structure import BucketSet

log = logging.getLogger(__name__)

PHASE_SC = "SC"
PHASE_IC = "IC"
PHASE_FINAL = "FINAL"
PHASE_RANDOM = "RANDOM"

MODE_FORWARD = "forward"
MODE_INVERSE = "inverse"
MODE_RANDOM = "random"

SAMPLING_UNIFORM_INSTANCE = "uniform-instance"
SAMPLING_UNIFORM_BUCKET = "uniform-bucket"

SCHEDULE_FORMAT_VERSION = 1


class EmptyBucketUnion(ValueError):
    """An episode's admissible bucket union holds no instances."""


class EmptyCorpus(ValueError):
    pass


def _hash_to_u64(s: str) -> int:
    return int.from_bytes(hashlib.sha256(s.encode("utf-8")).digest()[:8], "big")


def child_rng(seed: int, label: str) -> random.Random:
    """Independent RNG stream for one (seed, label) pair."""
    return random.Random(_hash_to_u64(f"{seed}:{label}"))


@dataclass(frozen=True)
class CurriculumConfig:
    t_sc: int = 1000
    t_ic: int = 500
    batch_size: int = 16
    final_epochs: int = 30
    mode: str = MODE_FORWARD
    seed: int = 0
    sampling: str = SAMPLING_UNIFORM_INSTANCE
    # Token-count batching is the trainer's concern; the hint rides along in
    # the manifest so a trainer can honor it.
    batch_tokens_hint: int | None = None

    def __post_init__(self) -> None:
        if self.t_sc < 1 or self.t_ic < 1:
            raise ValueError("t_sc and t_ic must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.final_epochs < 0:
            raise ValueError("final_epochs must be >= 0")
        if self.mode not in (MODE_FORWARD, MODE_INVERSE, MODE_RANDOM):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.sampling not in (SAMPLING_UNIFORM_INSTANCE, SAMPLING_UNIFORM_BUCKET):
            raise ValueError(f"unknown sampling policy {self.sampling!r}")


class ScheduleStep(NamedTuple):
    step: int  # global, 1-based
    phase: str
    episode: int  # episode for SC/IC, epoch for FINAL, 1-based
    ids: tuple[str, ...]


@dataclass(frozen=True)
class Provenance:
    config: CurriculumConfig
    n: int  # number of structure buckets
    m: int  # number of instance buckets
    bucket_digest: str
    phase_order: tuple[str, ...] = (PHASE_SC, PHASE_IC, PHASE_FINAL)
    depth_token_policy: str = "sub-only"  # depth tokens appear only on kind="sub" targets


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ScheduleStep, ...]
    provenance: Provenance

    def phase_steps(self, phase: str) -> list[ScheduleStep]:
        return [s for s in self.steps if s.phase == phase]


def canonical_json(obj: object) -> str:
    """Stable, compact JSON used for digests and manifest lines."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def bucket_digest(*bucket_sets: BucketSet) -> str:
    payload = [
        {"level": b.level, "max_index": b.max_index, "buckets": {str(k): list(v) for k, v in b.buckets.items()}}
        for b in bucket_sets
    ]
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _admissible(mode: str, episode: int, max_index: int) -> list[int]:
    if mode == MODE_INVERSE:
        return list(range(max_index - episode + 1, max_index + 1))
    return list(range(1, episode + 1))


def _episode_union(
    buckets: BucketSet,
    mode: str,
    episode: int,
    lenient: bool,
    phase: str,
) -> list[str]:
    """Pool of ids admissible in the given episode.

    With `lenient`, an empty union advances to the first later episode whose
    union is non-empty (possible when shallow buckets are empty); the episode
    itself still runs its full step budget.
    """
    union = [i for idx in _admissible(mode, episode, buckets.max_index) for i in buckets.buckets[idx]]
    if union:
        return union
    if not lenient:
        raise EmptyBucketUnion(f"{phase} episode {episode}: admissible buckets are all empty")
    for later in range(episode + 1, buckets.max_index + 1):
        union = [i for idx in _admissible(mode, later, buckets.max_index) for i in buckets.buckets[idx]]
        if union:
            log.warning(
                "%s episode %d has an empty bucket union; drawing from episode %d's union instead",
                phase,
                episode,
                later,
            )
            return union
    raise EmptyBucketUnion(f"{phase} episode {episode}: every bucket is empty")


def _draw_batch(
    rng: random.Random,
    union: Sequence[str],
    nonempty_buckets: list[list[str]] | None,
    batch_size: int,
    sampling: str,
) -> tuple[str, ...]:
    if sampling == SAMPLING_UNIFORM_BUCKET:
        assert nonempty_buckets is not None
        out = []
        for _ in range(batch_size):
            bucket = nonempty_buckets[rng.randrange(len(nonempty_buckets))]
            out.append(bucket[rng.randrange(len(bucket))])
        return tuple(out)
    if len(union) >= batch_size:
        return tuple(rng.sample(list(union), batch_size))
    # union smaller than a batch: fill with replacement
    return tuple(rng.choices(list(union), k=batch_size))


def _curriculum_phase(
    phase: str,
    buckets: BucketSet,
    config: CurriculumConfig,
    steps_per_episode: int,
    start_step: int,
    lenient: bool,
) -> list[ScheduleStep]:
    out: list[ScheduleStep] = []
    step = start_step
    for episode in range(1, buckets.max_index + 1):
        union = _episode_union(buckets, config.mode, episode, lenient, phase)
        admissible_nonempty = [
            list(buckets.buckets[idx])
            for idx in _admissible(config.mode, episode, buckets.max_index)
            if buckets.buckets[idx]
        ]
        if not admissible_nonempty:
            # lenient advance happened; bucket-mode draws use the advanced pool
            admissible_nonempty = [list(union)]
        rng = child_rng(config.seed, f"{phase.lower()}:{episode}")
        for _ in range(steps_per_episode):
            ids = _draw_batch(rng, union, admissible_nonempty, config.batch_size, config.sampling)
            out.append(ScheduleStep(step=step, phase=phase, episode=episode, ids=ids))
            step += 1
    return out


def _final_phase(
    full_ids: Sequence[str],
    config: CurriculumConfig,
    start_step: int,
) -> list[ScheduleStep]:
    out: list[ScheduleStep] = []
    step = start_step
    for epoch in range(1, config.final_epochs + 1):
        order = list(full_ids)
        child_rng(config.seed, f"final:{epoch}").shuffle(order)
        for i in range(0, len(order), config.batch_size):
            out.append(
                ScheduleStep(step=step, phase=PHASE_FINAL, episode=epoch, ids=tuple(order[i : i + config.batch_size]))
            )
            step += 1
    return out


def make_schedule(
    sc_buckets: BucketSet,
    ic_buckets: BucketSet,
    config: CurriculumConfig,
    lenient: bool = False,
) -> Schedule:
    """Compile the full SC -> IC -> FINAL schedule.

    SC runs N episodes of t_sc steps over the structure buckets, IC runs M
    episodes of t_ic steps over the instance buckets, and FINAL covers every
    full-graph instance exactly final_epochs times in per-epoch shuffled
    order.  Forward mode admits buckets {j <= i} in episode i, inverse mode
    {j >= max_index - i + 1}; mode "random" keeps the same step budget but
    samples every SC/IC step from all buckets of its phase.
    """
    if config.mode == MODE_RANDOM:
        # same episode structure, but every episode admits everything
        fwd = CurriculumConfig(**{**asdict(config), "mode": MODE_FORWARD})
        widened_sc = BucketSet(
            level=sc_buckets.level,
            max_index=sc_buckets.max_index,
            buckets={
                i: tuple(x for ids in sc_buckets.buckets.values() for x in ids) if i == 1 else ()
                for i in range(1, sc_buckets.max_index + 1)
            },
        )
        widened_ic = BucketSet(
            level=ic_buckets.level,
            max_index=ic_buckets.max_index,
            buckets={
                i: tuple(x for ids in ic_buckets.buckets.values() for x in ids) if i == 1 else ()
                for i in range(1, ic_buckets.max_index + 1)
            },
        )
        inner = make_schedule(widened_sc, widened_ic, fwd, lenient=True)
        steps = tuple(
            ScheduleStep(step=s.step, phase=PHASE_RANDOM if s.phase in (PHASE_SC, PHASE_IC) else s.phase,
                         episode=s.episode, ids=s.ids)
            for s in inner.steps
        )
        prov = Provenance(
            config=config,
            n=sc_buckets.max_index,
            m=ic_buckets.max_index,
            bucket_digest=bucket_digest(sc_buckets, ic_buckets),
        )
        return Schedule(steps=steps, provenance=prov)

    steps: list[ScheduleStep] = []
    steps += _curriculum_phase(PHASE_SC, sc_buckets, config, config.t_sc, 1, lenient)
    steps += _curriculum_phase(PHASE_IC, ic_buckets, config, config.t_ic, len(steps) + 1, lenient)
    full_ids = [i for idx in sorted(ic_buckets.buckets) for i in ic_buckets.buckets[idx]]
    steps += _final_phase(full_ids, config, len(steps) + 1)
    prov = Provenance(
        config=config,
        n=sc_buckets.max_index,
        m=ic_buckets.max_index,
        bucket_digest=bucket_digest(sc_buckets, ic_buckets),
    )
    return Schedule(steps=tuple(steps), provenance=prov)


def make_random_baseline(
    full_instances: Sequence[str] | Sequence[object],
    config: CurriculumConfig,
    n: int | None = None,
    m: int | None = None,
) -> Schedule:
    """Matched-budget control: same step count as the curriculum schedule,
    uniform sampling over all full-graph instances throughout.

    N and M default to the maximum instance depth (the values a bucket build
    over this corpus would produce); pass them explicitly to match a
    schedule built from filtered bucket sets.  FINAL epochs stay covering
    permutations so the control differs only where the curriculum does.
    """
    ids: list[str] = []
    max_depth = 0
    for inst in full_instances:
        if isinstance(inst, str):
            ids.append(inst)
        else:
            ids.append(inst.id)  # type: ignore[attr-defined]
            max_depth = max(max_depth, getattr(inst, "depth", 0))
    if not ids:
        raise EmptyCorpus("no instances for the random baseline")
    if n is None:
        n = max_depth if max_depth else 1
    if m is None:
        m = max_depth if max_depth else 1

    steps: list[ScheduleStep] = []
    step = 1
    episode = 0
    for phase_episodes, per_episode in ((n, config.t_sc), (m, config.t_ic)):
        for _ in range(phase_episodes):
            episode += 1
            rng = child_rng(config.seed, f"random:{episode}")
            for _ in range(per_episode):
                if len(ids) >= config.batch_size:
                    batch = tuple(rng.sample(ids, config.batch_size))
                else:
                    batch = tuple(rng.choices(ids, k=config.batch_size))
                steps.append(ScheduleStep(step=step, phase=PHASE_RANDOM, episode=episode, ids=batch))
                step += 1
    steps += _final_phase(ids, config, step)
    digest = hashlib.sha256(canonical_json(sorted(ids)).encode("utf-8")).hexdigest()
    prov = Provenance(config=config, n=n, m=m, bucket_digest=digest)
    return Schedule(steps=tuple(steps), provenance=prov)


def bucket_exposure_stats(
    schedule: Schedule,
    *bucket_sets: BucketSet,
) -> dict[tuple[str, int], dict[int, int]]:
    """Histogram of sampled bucket indices per (phase, episode).

    Ids are resolved through the given bucket sets; ids not found in any of
    them are counted under index 0.
    """
    by_id: dict[str, int] = {}
    for bs in bucket_sets:
        for idx, ids in bs.buckets.items():
            for i in ids:
                by_id.setdefault(i, idx)
    out: dict[tuple[str, int], dict[int, int]] = {}
    for s in schedule.steps:
        hist = out.setdefault((s.phase, s.episode), {})
        for i in s.ids:
            idx = by_id.get(i, 0)
            hist[idx] = hist.get(idx, 0) + 1
    return out


# --- manifest (wire form) --------------------------------------------------

def schedule_header(schedule: Schedule) -> dict:
    p = schedule.provenance
    return {
        "format": "schedule",
        "format_version": SCHEDULE_FORMAT_VERSION,
        "config": asdict(p.config),
        "n": p.n,
        "m": p.m,
        "bucket_digest": p.bucket_digest,
        "phase_order": list(p.phase_order),
        "depth_token_policy": p.depth_token_policy,
    }


def schedule_lines(schedule: Schedule) -> Iterable[str]:
    """Manifest lines: header then one line per step, canonically encoded."""
    yield canonical_json(schedule_header(schedule))
    for s in schedule.steps:
        yield canonical_json({"step": s.step, "phase": s.phase, "episode": s.episode, "ids": list(s.ids)})


def schedule_digest(schedule: Schedule) -> str:
    h = hashlib.sha256()
    for line in schedule_lines(schedule):
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def schedule_from_lines(lines: Iterable[str]) -> Schedule:
    """Inverse of schedule_lines; raises ValueError on version mismatch."""
    it = iter(lines)
    try:
        header = json.loads(next(it))
    except StopIteration:
        raise ValueError("empty schedule manifest") from None
    if header.get("format") != "schedule":
        raise ValueError(f"not a schedule manifest (header {header!r})")
    if header.get("format_version") != SCHEDULE_FORMAT_VERSION:
        raise ValueError(f"unsupported schedule format_version {header.get('format_version')!r}")
    cfg = CurriculumConfig(**header["config"])
    steps = []
    for line in it:
        if not line.strip():
            continue
        d = json.loads(line)
        steps.append(ScheduleStep(step=d["step"], phase=d["phase"], episode=d["episode"], ids=tuple(d["ids"])))
    prov = Provenance(
        config=cfg,
        n=header["n"],
        m=header["m"],
        bucket_digest=header["bucket_digest"],
        phase_order=tuple(header.get("phase_order", (PHASE_SC, PHASE_IC, PHASE_FINAL))),
        depth_token_policy=header.get("depth_token_policy", "sub-only"),
    )
    return Schedule(steps=tuple(steps), provenance=prov)


def expected_step_count(n: int, m: int, corpus_size: int, config: CurriculumConfig) -> int:
    final_steps = config.final_epochs * math.ceil(corpus_size / config.batch_size) if corpus_size else 0
    return n * config.t_sc + m * config.t_ic + final_steps
