"""Schedule-driven training.

Batch composition comes solely from the manifest: no shuffling, no sampling,
no re-ordering happens here.  Every consumed batch is appended to a log that
can be diffed against the schedule file to prove it.

For kind="sub" instances the stored token sequence already starts with the
literal depth token, which takes the place of the decoder start symbol; full
instances get the ordinary <bos>.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .data import (
    KIND_SUB,
    Manifest,
    Record,
    Vocab,
    check_coverage,
    read_manifest,
    read_records,
    source_vocab,
    target_vocab,
)
from .model import Seq2Seq

LOSS_FILE = "loss.csv"
CONSUMED_FILE = "consumed_ids.tsv"
CHECKPOINT_FILE = "model.pt"
RUN_FILE = "run.json"


@dataclass(frozen=True)
class Hyperparams:
    embed_dim: int = 64
    hidden_dim: int = 128
    lr: float = 3e-3
    grad_clip: float = 1.0
    seed: int = 0
    max_decode_len: int = 128


@dataclass
class TrainerRun:
    """Summary of one training run; serialized to run.json."""

    config_digest: str
    step_losses: list[tuple[int, str, int, float]]
    episode_means: dict[str, float]
    predictions_path: str | None = None

    def phase_mean(self, phase: str) -> float:
        losses = [loss for _, p, _, loss in self.step_losses if p == phase]
        return sum(losses) / len(losses)

    def episode_mean(self, phase: str, episode: int) -> float:
        return self.episode_means[f"{phase}:{episode}"]


def _canonical(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_digest(hparams: Hyperparams, manifest: Manifest) -> str:
    """Ties a run to both its hyperparameters and the exact schedule."""
    payload = {
        "hyperparams": asdict(hparams),
        "schedule_config": manifest.config,
        "bucket_digest": manifest.bucket_digest,
    }
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def make_batch(
    batch: Sequence[Record],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad one manifest step into (src, decoder input, decoder target).

    Decoder input is the depth token plus tokens for sub instances, <bos>
    plus tokens for full ones; the target is that sequence shifted left with
    <eos> appended, so both always share a length.
    """
    src_rows = [src_vocab.encode(rec.snt.split()) for rec in batch]
    dec_rows: list[list[int]] = []
    for rec in batch:
        ids = tgt_vocab.encode(rec.tokens)
        if rec.kind != KIND_SUB:
            ids = [tgt_vocab.bos_id] + ids
        dec_rows.append(ids + [tgt_vocab.eos_id])

    pad = src_vocab.pad_id
    src_len = max(len(r) for r in src_rows)
    dec_len = max(len(r) for r in dec_rows) - 1
    src = torch.full((len(batch), src_len), pad, dtype=torch.long)
    dec_in = torch.full((len(batch), dec_len), pad, dtype=torch.long)
    dec_out = torch.full((len(batch), dec_len), pad, dtype=torch.long)
    for i, row in enumerate(src_rows):
        src[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    for i, row in enumerate(dec_rows):
        dec_in[i, : len(row) - 1] = torch.tensor(row[:-1], dtype=torch.long)
        dec_out[i, : len(row) - 1] = torch.tensor(row[1:], dtype=torch.long)
    return src, dec_in, dec_out


def build_model(src_vocab: Vocab, tgt_vocab: Vocab, hparams: Hyperparams) -> Seq2Seq:
    torch.manual_seed(hparams.seed)
    return Seq2Seq(
        len(src_vocab),
        len(tgt_vocab),
        embed_dim=hparams.embed_dim,
        hidden_dim=hparams.hidden_dim,
        pad_id=src_vocab.pad_id,
    )


def train(
    instance_paths: Sequence[str | Path],
    schedule_path: str | Path,
    hparams: Hyperparams,
    out_dir: str | Path,
) -> TrainerRun:
    """Consume a manifest end to end and leave loss.csv, consumed_ids.tsv,
    model.pt and run.json in out_dir."""
    records = read_records(*instance_paths)
    manifest = read_manifest(schedule_path)
    check_coverage(manifest, records)

    src_vocab = source_vocab(records.values())
    tgt_vocab = target_vocab(records.values())
    model = build_model(src_vocab, tgt_vocab, hparams)
    optimizer = torch.optim.Adam(model.parameters(), lr=hparams.lr)
    loss_fn = nn.CrossEntropyLoss(ignore_index=tgt_vocab.pad_id)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    step_losses: list[tuple[int, str, int, float]] = []
    consumed_lines: list[str] = []

    model.train()
    for step in manifest.steps:
        batch = [records[i] for i in step.ids]
        src, dec_in, dec_out = make_batch(batch, src_vocab, tgt_vocab)
        optimizer.zero_grad()
        logits = model(src, dec_in)
        loss = loss_fn(logits.reshape(-1, len(tgt_vocab)), dec_out.reshape(-1))
        loss.backward()
        nn.utils.clip_grad_norm_(model.parameters(), hparams.grad_clip)
        optimizer.step()
        step_losses.append((step.step, step.phase, step.episode, float(loss.item())))
        consumed_lines.append(f"{step.step}\t{' '.join(step.ids)}")

    with (out / LOSS_FILE).open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "phase", "episode", "loss"])
        for row in step_losses:
            writer.writerow([row[0], row[1], row[2], f"{row[3]:.6f}"])
    (out / CONSUMED_FILE).write_text("\n".join(consumed_lines) + "\n", encoding="utf-8")

    torch.save(
        {
            "model": model.state_dict(),
            "hyperparams": asdict(hparams),
            "src_vocab": src_vocab.as_list(),
            "tgt_vocab": tgt_vocab.as_list(),
        },
        out / CHECKPOINT_FILE,
    )

    run = TrainerRun(
        config_digest=config_digest(hparams, manifest),
        step_losses=step_losses,
        episode_means=_episode_means(step_losses),
    )
    write_run(run, out / RUN_FILE)
    return run


def _episode_means(step_losses: Sequence[tuple[int, str, int, float]]) -> dict[str, float]:
    sums: dict[str, list[float]] = {}
    for _, phase, episode, loss in step_losses:
        sums.setdefault(f"{phase}:{episode}", []).append(loss)
    return {key: sum(v) / len(v) for key, v in sums.items()}


def write_run(run: TrainerRun, path: str | Path) -> None:
    Path(path).write_text(json.dumps(asdict(run), indent=2) + "\n", encoding="utf-8")


def read_run(path: str | Path) -> TrainerRun:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return TrainerRun(
        config_digest=obj["config_digest"],
        step_losses=[(int(s), str(p), int(e), float(v)) for s, p, e, v in obj["step_losses"]],
        episode_means={k: float(v) for k, v in obj["episode_means"].items()},
        predictions_path=obj.get("predictions_path"),
    )


def diff_consumed(manifest: Manifest, consumed_path: str | Path) -> list[int]:
    """Step numbers where the consumption log departs from the manifest.

    Empty means the trainer provably processed exactly the scheduled batches
    in order.
    """
    expected = [f"{s.step}\t{' '.join(s.ids)}" for s in manifest.steps]
    actual = [ln for ln in Path(consumed_path).read_text(encoding="utf-8").splitlines() if ln]
    bad = [i + 1 for i, (e, a) in enumerate(zip(expected, actual)) if e != a]
    if len(expected) != len(actual):
        bad.extend(range(min(len(expected), len(actual)) + 1, max(len(expected), len(actual)) + 1))
    return bad
