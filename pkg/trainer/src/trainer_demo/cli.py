"""Trainer command line: train on a manifest, evaluate a checkpoint, or run
the whole synthetic demo pipeline.

Exit codes mirror the curriculum CLI: 0 success, 1 data or scorer error,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .data import FormatError, ManifestMismatch, read_records
from .demo import DemoParams, contract_failures, format_summary, run_demo
from .evaluate import (
    DEFAULT_SCORER,
    ScorerError,
    decode_predictions,
    load_checkpoint,
    print_summary,
    read_scores,
    score_predictions,
)
from .train import RUN_FILE, Hyperparams, read_run, train, write_run

EXIT_OK = 0
EXIT_DATA = 1


def _hyperparams(args: argparse.Namespace) -> Hyperparams:
    return Hyperparams(
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        lr=args.lr,
        grad_clip=args.grad_clip,
        seed=args.seed,
        max_decode_len=args.max_decode_len,
    )


def cmd_train(args: argparse.Namespace) -> int:
    run = train(args.instances, args.schedule, _hyperparams(args), args.out_dir)
    print(f"consumed {len(run.step_losses)} steps; run digest {run.config_digest[:12]}")
    print(f"artifacts in {args.out_dir}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    records = list(read_records(args.instances).values())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    preds = out / "predictions.txt"
    scores = out / "scores.tsv"
    depth_table = out / "depth_report.tsv"
    n = decode_predictions(ckpt, records, preds)
    print(f"decoded {n} predictions to {preds}", file=sys.stderr)
    score_predictions(args.gold, preds, scores, depth_table,
                      restarts=args.restarts, seed=args.seed, scorer=args.scorer)
    summary = read_scores(scores)
    print_summary(summary)
    run_file = out / RUN_FILE
    if run_file.exists():
        run = read_run(run_file)
        run.predictions_path = str(preds)
        write_run(run, run_file)
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    params = DemoParams(
        corpus_size=args.corpus_size,
        heldout_size=args.heldout_size,
        depths=args.depths,
        seed=args.seed,
        t_sc=args.t_sc,
        t_ic=args.t_ic,
        batch_size=args.batch_size,
        final_epochs=args.final_epochs,
        mode=args.mode,
        restarts=args.restarts,
        scorer=args.scorer,
    )
    result = run_demo(args.out_dir, params)
    print(format_summary(result))
    return EXIT_OK if not contract_failures(result) else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amr-trainer",
        description="Toy seq2seq trainer that consumes depth-curriculum schedule manifests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a schedule manifest")
    p.add_argument("--instances", action="append", required=True,
                   help="instance JSONL; repeat for the sub-graph file")
    p.add_argument("--schedule", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--hidden-dim", type=int, default=128)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-decode-len", type=int, default=128)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="decode a held-out set and score it")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--instances", required=True, help="held-out instance JSONL")
    p.add_argument("--gold", required=True, help="held-out gold corpus file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scorer", default=DEFAULT_SCORER)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo", help="synthetic end-to-end pipeline with contract checks")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--corpus-size", type=int, default=500)
    p.add_argument("--heldout-size", type=int, default=60)
    p.add_argument("--depths", default="1..4")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--t-sc", type=int, default=40)
    p.add_argument("--t-ic", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--final-epochs", type=int, default=8)
    p.add_argument("--mode", choices=("forward", "inverse", "random"), default="forward")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--scorer", default=DEFAULT_SCORER)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ManifestMismatch as e:
        print(f"aborted: {e}", file=sys.stderr)
        return EXIT_DATA
    except (FormatError, ScorerError, OSError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
