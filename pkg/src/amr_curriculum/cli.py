"""Command-line pipeline: synth -> linearize -> buckets -> schedule, plus
validation, depth inspection, sub-graph extraction, Smatch scoring, and
depth-stratified reporting.

Exit codes: 0 success, 1 data error, 2 usage error.  Every subcommand is
deterministic given its inputs, flags and seed; the default seed comes from
AMR_CURRICULUM_SEED when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_io
from .curriculum import (
    CurriculumConfig,
    EmptyBucketUnion,
    make_schedule,
    schedule_digest,
)
from .graph import AmrGraph, PenmanError, parse_penman, serialize_penman
from .linearize import Unrecoverable, delinearize
from .smatch import (
    DEFAULT_RESTARTS,
    FINE_GRAINED_METRICS,
    EmptyInput,
    fine_grained,
    parse_bin_spec,
    smatch_score,
)
from .structure import build_buckets, extract_subgraph

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _default_seed() -> int:
    try:
        return int(os.environ.get("AMR_CURRICULUM_SEED", "0"))
    except ValueError:
        return 0


def _write_or_stdout(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- subcommands -----------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    result = corpus_io.read_amr_corpus(args.corpus)
    for err in result.errors:
        print(f"{args.corpus}:{err.line}: {err.message}", file=sys.stderr)
    print(f"{len(result.instances)} valid, {len(result.errors)} failed")
    if args.strict and result.errors:
        return EXIT_DATA
    return EXIT_OK


def cmd_linearize(args: argparse.Namespace) -> int:
    result = corpus_io.read_amr_corpus(args.corpus)
    for err in result.errors:
        print(f"{args.corpus}:{err.line}: {err.message}", file=sys.stderr)
    if args.strict and result.errors:
        return EXIT_DATA
    if not result.instances:
        print("no valid instances to write", file=sys.stderr)
        return EXIT_DATA
    corpus_io.write_instances(result.instances, args.output)
    print(f"wrote {len(result.instances)} instances to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_depth(args: argparse.Namespace) -> int:
    result = corpus_io.read_amr_corpus(args.corpus)
    for err in result.errors:
        print(f"{args.corpus}:{err.line}: {err.message}", file=sys.stderr)
    rows = ["id\tdepth"]
    for inst in result.instances:
        rows.append(f"{inst.id}\t{inst.depth}")
    _write_or_stdout("\n".join(rows) + "\n", args.output)
    return EXIT_DATA if args.strict and result.errors else EXIT_OK


def cmd_subgraph(args: argparse.Namespace) -> int:
    result = corpus_io.read_amr_corpus(args.corpus)
    for err in result.errors:
        print(f"{args.corpus}:{err.line}: {err.message}", file=sys.stderr)
    blocks = []
    for inst in result.instances:
        sub = extract_subgraph(inst.graph, args.depth)
        blocks.append(f"# ::id {inst.id}::d{args.depth}\n# ::snt {inst.snt}\n{serialize_penman(sub)}\n")
    _write_or_stdout("\n".join(blocks), args.output)
    return EXIT_DATA if args.strict and result.errors else EXIT_OK


def cmd_buckets(args: argparse.Namespace) -> int:
    try:
        instances = corpus_io.read_instances(args.instances)
    except (corpus_io.JsonlError, corpus_io.VersionMismatch) as e:
        print(str(e), file=sys.stderr)
        return EXIT_DATA
    triples = [(i.id, i.snt, i.graph) for i in instances if i.kind == corpus_io.KIND_FULL]
    if not triples:
        print("no full-graph instances in input", file=sys.stderr)
        return EXIT_DATA
    bucket_set, generated = build_buckets(triples, args.level)
    corpus_io.write_buckets(bucket_set, args.output)
    sizes = " ".join(f"{i}:{n}" for i, n in sorted(bucket_set.sizes().items()))
    print(f"{args.level} buckets (index:size) {sizes}", file=sys.stderr)
    if args.instances_out:
        corpus_io.write_instances(generated, args.instances_out)
        print(f"wrote {len(generated)} {args.level}-level instances to {args.instances_out}", file=sys.stderr)
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    try:
        sc = corpus_io.read_buckets(args.sc_buckets)
        ic = corpus_io.read_buckets(args.ic_buckets)
    except (corpus_io.JsonlError, corpus_io.VersionMismatch) as e:
        print(str(e), file=sys.stderr)
        return EXIT_DATA
    config = CurriculumConfig(
        t_sc=args.t_sc,
        t_ic=args.t_ic,
        batch_size=args.batch_size,
        final_epochs=args.final_epochs,
        mode=args.mode,
        seed=args.seed,
        sampling=args.sampling,
        batch_tokens_hint=args.batch_tokens_hint,
    )
    try:
        schedule = make_schedule(sc, ic, config, lenient=args.lenient)
    except EmptyBucketUnion as e:
        print(f"{e} (use --lenient to advance past empty unions)", file=sys.stderr)
        return EXIT_DATA
    corpus_io.write_schedule(schedule, args.output)
    print(
        f"wrote {len(schedule.steps)} steps (digest {schedule_digest(schedule)[:12]}) to {args.output}",
        file=sys.stderr,
    )
    return EXIT_OK


def _read_pred_tokens(path: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        gid, _sep, rest = line.partition("\t")
        out[gid] = rest.split()
    return out


def _score_one(payload: tuple) -> dict:
    """Worker for one gold/pred pair; must stay picklable for --jobs."""
    gid, depth, gold_penman, pred_kind, pred_payload, restarts, seed, fine = payload
    gold = parse_penman(gold_penman)
    row: dict = {"id": gid, "depth": depth, "status": "ok"}
    pred: AmrGraph | None = None
    if pred_payload is None:
        row["status"] = "missing"
    elif pred_kind == "tokens":
        try:
            pred = delinearize(pred_payload)
        except Unrecoverable:
            row["status"] = "unrecoverable"
    else:
        try:
            pred = parse_penman(pred_payload)
        except PenmanError:
            row["status"] = "parse-error"
    if pred is None:
        gold_total = smatch_score(gold, gold, restarts=1).gold_total
        row.update(matched=0, gold_total=gold_total, pred_total=0, precision=0.0, recall=0.0, f1=0.0)
        if fine:
            row["fine"] = {m: 0.0 for m in FINE_GRAINED_METRICS}
        return row
    scored = smatch_score(gold, pred, restarts=restarts, seed=seed, gold_id=gid)
    row.update(
        matched=scored.matched,
        gold_total=scored.gold_total,
        pred_total=scored.pred_total,
        precision=scored.precision,
        recall=scored.recall,
        f1=scored.f1,
    )
    if fine:
        report = fine_grained(gold, pred, restarts=restarts, seed=seed, gold_id=gid)
        row["fine"] = {m: report.metrics[m].f1 for m in FINE_GRAINED_METRICS}
    return row


def cmd_smatch(args: argparse.Namespace) -> int:
    gold_result = corpus_io.read_amr_corpus(args.gold)
    for err in gold_result.errors:
        print(f"{args.gold}:{err.line}: {err.message}", file=sys.stderr)
    if not gold_result.instances:
        print("no valid gold graphs", file=sys.stderr)
        return EXIT_DATA

    if args.pred_format == "tokens":
        preds: dict[str, object] = dict(_read_pred_tokens(args.pred))
    else:
        pred_result = corpus_io.read_amr_corpus(args.pred)
        for err in pred_result.errors:
            print(f"{args.pred}:{err.line}: {err.message}", file=sys.stderr)
        preds = {i.id: serialize_penman(i.graph) for i in pred_result.instances}

    payloads = [
        (
            inst.id,
            inst.depth,
            serialize_penman(inst.graph),
            args.pred_format,
            preds.get(inst.id),
            args.restarts,
            args.seed,
            args.fine_grained,
        )
        for inst in gold_result.instances
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_score_one, payloads, chunksize=16))
    else:
        rows = [_score_one(p) for p in payloads]

    header = ["id", "depth", "status", "matched", "gold_total", "pred_total", "precision", "recall", "f1"]
    if args.fine_grained:
        header += [f"f1:{m}" for m in FINE_GRAINED_METRICS]
    out_lines = ["\t".join(header)]
    matched = gold_total = pred_total = 0
    for row in rows:
        cells = [
            row["id"],
            str(row["depth"]),
            row["status"],
            str(row["matched"]),
            str(row["gold_total"]),
            str(row["pred_total"]),
            f"{row['precision']:.4f}",
            f"{row['recall']:.4f}",
            f"{row['f1']:.4f}",
        ]
        if args.fine_grained:
            cells += [f"{row['fine'][m]:.4f}" for m in FINE_GRAINED_METRICS]
        out_lines.append("\t".join(cells))
        matched += row["matched"]
        gold_total += row["gold_total"]
        pred_total += row["pred_total"]
    precision = matched / pred_total if pred_total else 0.0
    recall = matched / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    micro = ["micro", "-", "summary", str(matched), str(gold_total), str(pred_total),
             f"{precision:.4f}", f"{recall:.4f}", f"{f1:.4f}"]
    if args.fine_grained:
        micro += ["-"] * len(FINE_GRAINED_METRICS)
    out_lines.append("\t".join(micro))
    _write_or_stdout("\n".join(out_lines) + "\n", args.output)
    print(f"Smatch F1: {f1:.4f} over {len(rows)} pairs", file=sys.stderr)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    lines = Path(args.scores).read_text(encoding="utf-8").splitlines()
    if not lines:
        print("empty scores file", file=sys.stderr)
        return EXIT_DATA
    header = lines[0].split("\t")
    try:
        idx = {name: header.index(name) for name in ("id", "depth", "matched", "gold_total", "pred_total", "f1")}
    except ValueError as e:
        print(f"scores file missing column: {e}", file=sys.stderr)
        return EXIT_DATA
    try:
        bins = parse_bin_spec(args.bins)
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    grouped: list[list[float]] = [[] for _ in bins]
    matched = gold_total = pred_total = 0
    total_rows = 0
    for line in lines[1:]:
        cells = line.split("\t")
        if len(cells) < len(header) or cells[idx["id"]] == "micro":
            continue
        total_rows += 1
        matched += int(cells[idx["matched"]])
        gold_total += int(cells[idx["gold_total"]])
        pred_total += int(cells[idx["pred_total"]])
        depth = int(cells[idx["depth"]])
        f1 = float(cells[idx["f1"]])
        for i, b in enumerate(bins):
            if b.contains(depth):
                grouped[i].append(f1)
                break
    out = ["bin\tcount\tmean_f1"]
    for b, group in zip(bins, grouped):
        mean = sum(group) / len(group) if group else 0.0
        out.append(f"{b.label}\t{len(group)}\t{mean:.4f}")
    precision = matched / pred_total if pred_total else 0.0
    recall = matched / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    out.append(f"micro\t{total_rows}\t{f1:.4f}")
    _write_or_stdout("\n".join(out) + "\n", args.output)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        lo, hi = _parse_depths(args.depths)
        instances = corpus_io.gen_synthetic_corpus(args.n, (lo, hi), seed=args.seed)
    except corpus_io.InvalidRange as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    corpus_io.write_corpus(instances, args.output)
    print(f"wrote {len(instances)} graphs (depths {lo}..{hi}) to {args.output}", file=sys.stderr)
    return EXIT_OK


def _parse_depths(spec: str) -> tuple[int, int]:
    if ".." in spec:
        lo_s, hi_s = spec.split("..", 1)
        return int(lo_s), int(hi_s)
    d = int(spec)
    return d, d


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amr-curriculum",
        description="Depth-curriculum data tooling for AMR parsing: graphs, "
        "linearizations, buckets, schedules, and Smatch scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_strict(p: argparse.ArgumentParser) -> None:
        p.add_argument("--strict", action="store_true", help="exit 1 if any record fails")

    p = sub.add_parser("validate", help="check every graph in a corpus file")
    p.add_argument("corpus")
    add_strict(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("linearize", help="corpus file -> instance JSONL with pointer tokens")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    add_strict(p)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("depth", help="per-graph depth TSV")
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    add_strict(p)
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("subgraph", help="extract depth-limited sub-graphs")
    p.add_argument("corpus")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("-o", "--output")
    add_strict(p)
    p.set_defaults(func=cmd_subgraph)

    p = sub.add_parser("buckets", help="group instances into depth buckets")
    p.add_argument("instances", help="instance JSONL from `linearize`")
    p.add_argument("--level", choices=("structure", "instance"), required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--instances-out", help="also write the (sub-)instances produced by bucketing")
    p.set_defaults(func=cmd_buckets)

    p = sub.add_parser("schedule", help="compile a deterministic training schedule")
    p.add_argument("--sc-buckets", required=True)
    p.add_argument("--ic-buckets", required=True)
    p.add_argument("--t-sc", type=int, default=1000, help="steps per structure episode")
    p.add_argument("--t-ic", type=int, default=500, help="steps per instance episode")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--final-epochs", type=int, default=30)
    p.add_argument("--mode", choices=("forward", "inverse", "random"), default="forward")
    p.add_argument("--sampling", choices=("uniform-instance", "uniform-bucket"), default="uniform-instance")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--batch-tokens-hint", type=int, default=None,
                   help="advisory token budget per batch, recorded in the manifest")
    p.add_argument("--lenient", action="store_true", help="advance past empty bucket unions")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("smatch", help="score predictions against gold graphs")
    p.add_argument("--gold", required=True, help="gold corpus file")
    p.add_argument("--pred", required=True, help="predictions: corpus file or id<TAB>tokens lines")
    p.add_argument("--pred-format", choices=("penman", "tokens"), default="penman")
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fine-grained", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_smatch)

    p = sub.add_parser("report", help="depth-stratified table from a scores TSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--by-depth", action="store_true", help="group by gold depth (the default grouping)")
    p.add_argument("--bins", default="1,2,3,4,5,6,7+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--depths", default="1..6", help="depth range, e.g. 1..6")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PenmanError, corpus_io.JsonlError, corpus_io.VersionMismatch, EmptyInput, OSError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
