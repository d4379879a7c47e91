"""Toy schedule-consuming trainer: reference consumer for the curriculum
wire formats (instance JSONL plus schedule manifest)."""

from .data import (
    FormatError,
    Manifest,
    ManifestMismatch,
    Record,
    Step,
    Vocab,
    check_coverage,
    read_manifest,
    read_records,
    source_vocab,
    target_vocab,
)
from .demo import DemoParams, DemoResult, contract_failures, run_demo
from .evaluate import (
    Checkpoint,
    ScoreSummary,
    ScorerError,
    decode_predictions,
    load_checkpoint,
    read_scores,
    score_predictions,
)
from .model import Seq2Seq
from .train import Hyperparams, TrainerRun, config_digest, diff_consumed, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "DemoParams",
    "DemoResult",
    "FormatError",
    "Hyperparams",
    "Manifest",
    "ManifestMismatch",
    "Record",
    "ScoreSummary",
    "ScorerError",
    "Seq2Seq",
    "Step",
    "TrainerRun",
    "Vocab",
    "check_coverage",
    "config_digest",
    "contract_failures",
    "decode_predictions",
    "diff_consumed",
    "load_checkpoint",
    "read_manifest",
    "read_records",
    "read_scores",
    "run_demo",
    "score_predictions",
    "source_vocab",
    "target_vocab",
    "train",
    "__version__",
]
