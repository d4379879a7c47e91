"""Greedy decoding of held-out instances and scoring through the
`amr-curriculum` CLI.

The scorer runs as an external program on purpose: this package must only
ever touch the curriculum tooling through files and its command line, and a
nonzero scorer exit propagates unchanged.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch

from .data import SPECIALS, Record, Vocab
from .model import Seq2Seq
from .train import Hyperparams

DEFAULT_SCORER = "amr-curriculum"
STATUS_OK = "ok"


class ScorerError(RuntimeError):
    def __init__(self, returncode: int, stderr: str):
        self.returncode = returncode
        super().__init__(f"scorer exited {returncode}: {stderr.strip()}")


@dataclass(frozen=True)
class Checkpoint:
    model: Seq2Seq
    src_vocab: Vocab
    tgt_vocab: Vocab
    hyperparams: Hyperparams


def load_checkpoint(path: str | Path) -> Checkpoint:
    state = torch.load(path, map_location="cpu", weights_only=True)
    hparams = Hyperparams(**state["hyperparams"])
    # as_list() round trip: specials sit at the front of the saved list
    src_vocab = Vocab(state["src_vocab"][len(SPECIALS):])
    tgt_vocab = Vocab(state["tgt_vocab"][len(SPECIALS):])
    model = Seq2Seq(
        len(src_vocab),
        len(tgt_vocab),
        embed_dim=hparams.embed_dim,
        hidden_dim=hparams.hidden_dim,
        pad_id=src_vocab.pad_id,
    )
    model.load_state_dict(state["model"])
    model.eval()
    return Checkpoint(model, src_vocab, tgt_vocab, hparams)


def decode_predictions(
    ckpt: Checkpoint,
    records: Sequence[Record],
    out_path: str | Path,
    batch_size: int = 32,
) -> int:
    """Greedy-decode every record and write `id<TAB>tokens` lines."""
    lines: list[str] = []
    pad = ckpt.src_vocab.pad_id
    for lo in range(0, len(records), batch_size):
        batch = records[lo : lo + batch_size]
        rows = [ckpt.src_vocab.encode(rec.snt.split()) for rec in batch]
        width = max(len(r) for r in rows)
        src = torch.full((len(batch), width), pad, dtype=torch.long)
        for i, row in enumerate(rows):
            src[i, : len(row)] = torch.tensor(row, dtype=torch.long)
        decoded = ckpt.model.greedy(
            src,
            start_id=ckpt.tgt_vocab.bos_id,
            eos_id=ckpt.tgt_vocab.eos_id,
            max_len=ckpt.hyperparams.max_decode_len,
        )
        for rec, ids in zip(batch, decoded):
            lines.append(f"{rec.id}\t{' '.join(ckpt.tgt_vocab.decode(ids))}")
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(lines)


def _run(cmd: list[str]) -> subprocess.CompletedProcess:
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ScorerError(proc.returncode, proc.stderr)
    return proc


def score_predictions(
    gold_path: str | Path,
    pred_path: str | Path,
    scores_out: str | Path,
    depth_out: str | Path | None = None,
    restarts: int = 4,
    seed: int = 0,
    scorer: str = DEFAULT_SCORER,
) -> None:
    """Run the external Smatch scorer, then its depth-stratified report."""
    exe = shutil.which(scorer)
    if exe is None:
        raise ScorerError(127, f"scorer {scorer!r} not found on PATH")
    _run(
        [
            exe, "smatch",
            "--gold", str(gold_path),
            "--pred", str(pred_path),
            "--pred-format", "tokens",
            "--restarts", str(restarts),
            "--seed", str(seed),
            "-o", str(scores_out),
        ]
    )
    if depth_out is not None:
        _run([exe, "report", "--scores", str(scores_out), "--by-depth", "-o", str(depth_out)])


@dataclass(frozen=True)
class ScoreSummary:
    micro_f1: float
    pairs: int
    well_formed: int

    @property
    def well_formed_rate(self) -> float:
        return self.well_formed / self.pairs if self.pairs else 0.0


def read_scores(scores_path: str | Path) -> ScoreSummary:
    """Digest the scorer's TSV: micro F1 plus how many predictions parsed.

    A prediction counts as well formed when the scorer recovered a graph
    from its tokens (status "ok"); unrecoverable or missing rows do not.
    """
    lines = Path(scores_path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split("\t")
    id_col = header.index("id")
    status_col = header.index("status")
    f1_col = header.index("f1")
    micro_f1 = 0.0
    pairs = well_formed = 0
    for line in lines[1:]:
        cells = line.split("\t")
        if cells[id_col] == "micro":
            micro_f1 = float(cells[f1_col])
            continue
        pairs += 1
        if cells[status_col] == STATUS_OK:
            well_formed += 1
    return ScoreSummary(micro_f1=micro_f1, pairs=pairs, well_formed=well_formed)


def read_depth_table(depth_path: str | Path) -> list[tuple[str, int, float]]:
    rows: list[tuple[str, int, float]] = []
    for line in Path(depth_path).read_text(encoding="utf-8").splitlines()[1:]:
        label, count, mean_f1 = line.split("\t")
        if label == "micro":
            continue
        rows.append((label, int(count), float(mean_f1)))
    return rows


def print_summary(summary: ScoreSummary, stream=None) -> None:
    stream = stream or sys.stdout
    rate = 100.0 * summary.well_formed_rate
    stream.write(
        f"micro F1 {summary.micro_f1:.4f} over {summary.pairs} pairs; "
        f"{summary.well_formed}/{summary.pairs} well formed ({rate:.1f}%)\n"
    )
