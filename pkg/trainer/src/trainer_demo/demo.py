"""End-to-end contract demo.

Builds a synthetic corpus and a schedule with the `amr-curriculum` CLI,
trains on the manifest exactly as written, decodes a held-out set, and scores
the predictions back through the same CLI.  Everything lands under one output
directory so each stage can be inspected afterwards.
"""

from __future__ import annotations

import shutil
import subprocess
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .data import read_manifest, read_records
from .evaluate import (
    DEFAULT_SCORER,
    Checkpoint,
    ScoreSummary,
    ScorerError,
    decode_predictions,
    load_checkpoint,
    read_depth_table,
    read_scores,
    score_predictions,
)
from .train import (
    CHECKPOINT_FILE,
    CONSUMED_FILE,
    RUN_FILE,
    Hyperparams,
    TrainerRun,
    build_model,
    diff_consumed,
    train,
    write_run,
)


@dataclass(frozen=True)
class DemoParams:
    corpus_size: int = 500
    heldout_size: int = 60
    depths: str = "1..4"
    seed: int = 7
    t_sc: int = 40
    t_ic: int = 30
    batch_size: int = 16
    final_epochs: int = 8
    mode: str = "forward"
    restarts: int = 4
    scorer: str = DEFAULT_SCORER
    hyperparams: Hyperparams = field(default_factory=Hyperparams)


@dataclass
class DemoResult:
    out_dir: Path
    run: TrainerRun
    manifest_steps: int
    steps_consumed: int
    consumed_diff: list[int]
    first_episode_mean: float
    final_phase_mean: float
    trained: ScoreSummary
    untrained: ScoreSummary
    depth_rows: list[tuple[str, int, float]]
    elapsed_seconds: float


def _scorer_exe(name: str) -> str:
    exe = shutil.which(name)
    if exe is None:
        raise ScorerError(127, f"curriculum CLI {name!r} not found on PATH")
    return exe


def _cli(exe: str, *args: str) -> None:
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise ScorerError(proc.returncode, proc.stderr)


def run_demo(out_dir: str | Path, params: DemoParams | None = None) -> DemoResult:
    params = params or DemoParams()
    started = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exe = _scorer_exe(params.scorer)

    train_txt = out / "train.txt"
    heldout_txt = out / "heldout.txt"
    full_jsonl = out / "train_full.jsonl"
    sub_jsonl = out / "train_sub.jsonl"
    heldout_jsonl = out / "heldout_full.jsonl"
    sc_buckets = out / "sc_buckets.jsonl"
    ic_buckets = out / "ic_buckets.jsonl"
    schedule_jsonl = out / "schedule.jsonl"
    run_dir = out / "run"

    # Data and schedule come from the external pipeline, never from here.
    _cli(exe, "synth", "-n", str(params.corpus_size), "--depths", params.depths,
         "--seed", str(params.seed), "-o", str(train_txt))
    _cli(exe, "synth", "-n", str(params.heldout_size), "--depths", params.depths,
         "--seed", str(params.seed + 1000), "-o", str(heldout_txt))
    _cli(exe, "linearize", str(train_txt), "-o", str(full_jsonl))
    _cli(exe, "linearize", str(heldout_txt), "-o", str(heldout_jsonl))
    _cli(exe, "buckets", str(full_jsonl), "--level", "structure",
         "-o", str(sc_buckets), "--instances-out", str(sub_jsonl))
    _cli(exe, "buckets", str(full_jsonl), "--level", "instance", "-o", str(ic_buckets))
    _cli(exe, "schedule", "--sc-buckets", str(sc_buckets), "--ic-buckets", str(ic_buckets),
         "--t-sc", str(params.t_sc), "--t-ic", str(params.t_ic),
         "--batch-size", str(params.batch_size), "--final-epochs", str(params.final_epochs),
         "--mode", params.mode, "--seed", str(params.seed), "-o", str(schedule_jsonl))

    run = train([full_jsonl, sub_jsonl], schedule_jsonl, params.hyperparams, run_dir)
    manifest = read_manifest(schedule_jsonl)
    consumed_diff = diff_consumed(manifest, run_dir / CONSUMED_FILE)

    heldout_records = list(read_records(heldout_jsonl).values())
    ckpt = load_checkpoint(run_dir / CHECKPOINT_FILE)
    preds = out / "predictions.txt"
    scores = out / "scores.tsv"
    depth_table = out / "depth_report.tsv"
    decode_predictions(ckpt, heldout_records, preds)
    score_predictions(heldout_txt, preds, scores, depth_table,
                      restarts=params.restarts, seed=params.seed, scorer=params.scorer)
    trained = read_scores(scores)
    depth_rows = read_depth_table(depth_table)

    # Same vocabularies, freshly initialized weights: the comparison shows
    # the schedule actually taught the model something.
    blank = Checkpoint(
        model=build_model(ckpt.src_vocab, ckpt.tgt_vocab,
                          replace(ckpt.hyperparams, seed=ckpt.hyperparams.seed + 1)),
        src_vocab=ckpt.src_vocab,
        tgt_vocab=ckpt.tgt_vocab,
        hyperparams=ckpt.hyperparams,
    )
    blank.model.eval()
    untrained_preds = out / "predictions_untrained.txt"
    untrained_scores = out / "scores_untrained.tsv"
    decode_predictions(blank, heldout_records, untrained_preds)
    score_predictions(heldout_txt, untrained_preds, untrained_scores,
                      restarts=params.restarts, seed=params.seed, scorer=params.scorer)
    untrained = read_scores(untrained_scores)

    run.predictions_path = str(preds)
    write_run(run, run_dir / RUN_FILE)

    first_phase, first_episode = manifest.steps[0].phase, manifest.steps[0].episode
    final_phase = manifest.steps[-1].phase
    return DemoResult(
        out_dir=out,
        run=run,
        manifest_steps=len(manifest.steps),
        steps_consumed=len(run.step_losses),
        consumed_diff=consumed_diff,
        first_episode_mean=run.episode_mean(first_phase, first_episode),
        final_phase_mean=run.phase_mean(final_phase),
        trained=trained,
        untrained=untrained,
        depth_rows=depth_rows,
        elapsed_seconds=time.perf_counter() - started,
    )


def contract_failures(result: DemoResult, max_seconds: float = 900.0) -> list[str]:
    """Which demo contract conditions failed; empty means a clean pass."""
    failures: list[str] = []
    if result.steps_consumed != result.manifest_steps:
        failures.append(
            f"consumed {result.steps_consumed} of {result.manifest_steps} manifest steps"
        )
    if result.consumed_diff:
        failures.append(f"consumed-id log departs from manifest at steps {result.consumed_diff[:5]}")
    if not result.final_phase_mean < result.first_episode_mean:
        failures.append(
            f"final-phase mean loss {result.final_phase_mean:.4f} did not improve on "
            f"first-episode mean {result.first_episode_mean:.4f}"
        )
    if result.trained.well_formed_rate < 0.95:
        failures.append(
            f"only {100 * result.trained.well_formed_rate:.1f}% of decoded predictions recovered"
        )
    if result.elapsed_seconds >= max_seconds:
        failures.append(f"run took {result.elapsed_seconds:.0f}s (budget {max_seconds:.0f}s)")
    return failures


def format_summary(result: DemoResult) -> str:
    lines = [
        f"steps consumed        {result.steps_consumed} / {result.manifest_steps}",
        f"consumed-id diff      {'clean' if not result.consumed_diff else result.consumed_diff[:5]}",
        f"first episode loss    {result.first_episode_mean:.4f}",
        f"final phase loss      {result.final_phase_mean:.4f}",
        f"well-formed decodes   {result.trained.well_formed}/{result.trained.pairs}"
        f" ({100 * result.trained.well_formed_rate:.1f}%)",
        f"micro F1 trained      {result.trained.micro_f1:.4f}",
        f"micro F1 untrained    {result.untrained.micro_f1:.4f}",
        f"wall time             {result.elapsed_seconds:.1f}s",
    ]
    failures = contract_failures(result)
    lines.append("contract              " + ("PASS" if not failures else "FAIL"))
    lines.extend(f"  - {f}" for f in failures)
    return "\n".join(lines)
