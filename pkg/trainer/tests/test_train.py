"""Training loop contract on handcrafted wire files: manifest-only batch
composition, artifact layout, depth-token handling, and determinism."""

import json

import pytest
import torch

from trainer_demo.data import (
    ManifestMismatch,
    read_manifest,
    read_records,
    source_vocab,
    target_vocab,
)
from trainer_demo.train import (
    CHECKPOINT_FILE,
    CONSUMED_FILE,
    LOSS_FILE,
    RUN_FILE,
    Hyperparams,
    config_digest,
    diff_consumed,
    make_batch,
    read_run,
    train,
)

HEADER = {"format": "instances", "format_version": 1}
SCHED_HEADER = {
    "format": "schedule",
    "format_version": 1,
    "config": {"seed": 0},
    "n": 1,
    "m": 2,
    "bucket_digest": "beef",
}

RECORDS = [
    {
        "id": "g1", "snt": "the cat sleeps",
        "tokens": ["(", "<R0>", "sleep-01", ":ARG0", "(", "<R1>", "cat", ")", ")"],
        "depth": 2, "bucket": 2, "kind": "full",
    },
    {
        "id": "g2", "snt": "the dog runs",
        "tokens": ["(", "<R0>", "run-02", ":ARG0", "(", "<R1>", "dog", ")", ")"],
        "depth": 2, "bucket": 2, "kind": "full",
    },
    {
        "id": "g1::d1", "snt": "the cat sleeps",
        "tokens": ["<1>", "(", "<R0>", "sleep-01", ")"],
        "depth": 1, "bucket": 1, "kind": "sub",
    },
    {
        "id": "g2::d1", "snt": "the dog runs",
        "tokens": ["<1>", "(", "<R0>", "run-02", ")"],
        "depth": 1, "bucket": 1, "kind": "sub",
    },
]

STEPS = [
    {"step": 1, "phase": "SC", "episode": 1, "ids": ["g1::d1", "g2::d1"]},
    {"step": 2, "phase": "SC", "episode": 1, "ids": ["g2::d1", "g1::d1"]},
    {"step": 3, "phase": "IC", "episode": 1, "ids": ["g1", "g2"]},
    {"step": 4, "phase": "FINAL", "episode": 1, "ids": ["g2", "g1"]},
]

TINY = Hyperparams(embed_dim=16, hidden_dim=24, seed=0)


def jsonl(*objs):
    return "\n".join(json.dumps(o) for o in objs) + "\n"


@pytest.fixture()
def wire(tmp_path):
    inst = tmp_path / "instances.jsonl"
    inst.write_text(jsonl(HEADER, *RECORDS), encoding="utf-8")
    sched = tmp_path / "schedule.jsonl"
    sched.write_text(jsonl(SCHED_HEADER, *STEPS), encoding="utf-8")
    return inst, sched


def test_train_leaves_expected_artifacts(wire, tmp_path):
    inst, sched = wire
    out = tmp_path / "run"
    run = train([inst], sched, TINY, out)
    for name in (LOSS_FILE, CONSUMED_FILE, CHECKPOINT_FILE, RUN_FILE):
        assert (out / name).exists()
    assert len(run.step_losses) == len(STEPS)
    assert [s for s, _, _, _ in run.step_losses] == [1, 2, 3, 4]
    assert set(run.episode_means) == {"SC:1", "IC:1", "FINAL:1"}
    loss_lines = (out / LOSS_FILE).read_text().strip().splitlines()
    assert loss_lines[0] == "step,phase,episode,loss"
    assert len(loss_lines) == 1 + len(STEPS)


def test_consumed_log_matches_manifest_exactly(wire, tmp_path):
    inst, sched = wire
    out = tmp_path / "run"
    train([inst], sched, TINY, out)
    manifest = read_manifest(sched)
    assert diff_consumed(manifest, out / CONSUMED_FILE) == []
    lines = (out / CONSUMED_FILE).read_text().splitlines()
    assert lines[0] == "1\tg1::d1 g2::d1"
    assert lines[1] == "2\tg2::d1 g1::d1"


def test_diff_consumed_flags_divergence(wire, tmp_path):
    inst, sched = wire
    out = tmp_path / "run"
    train([inst], sched, TINY, out)
    manifest = read_manifest(sched)
    log = out / CONSUMED_FILE
    lines = log.read_text().splitlines()
    lines[2] = "3\tg2 g1"  # swapped order must be caught
    log.write_text("\n".join(lines) + "\n")
    assert diff_consumed(manifest, log) == [3]
    log.write_text("\n".join(lines[:-1]) + "\n")
    assert 4 in diff_consumed(manifest, log)


def test_mismatched_manifest_aborts_with_step_index(wire, tmp_path):
    inst, sched = wire
    broken = tmp_path / "broken.jsonl"
    steps = [dict(s) for s in STEPS]
    steps[2]["ids"] = ["g1", "ghost"]
    broken.write_text(jsonl(SCHED_HEADER, *steps), encoding="utf-8")
    with pytest.raises(ManifestMismatch) as err:
        train([inst], broken, TINY, tmp_path / "run")
    assert err.value.step == 3


def test_same_seed_same_loss_curve(wire, tmp_path):
    inst, sched = wire
    train([inst], sched, TINY, tmp_path / "a")
    train([inst], sched, TINY, tmp_path / "b")
    assert (tmp_path / "a" / LOSS_FILE).read_bytes() == (tmp_path / "b" / LOSS_FILE).read_bytes()


def test_run_json_round_trip(wire, tmp_path):
    inst, sched = wire
    out = tmp_path / "run"
    run = train([inst], sched, TINY, out)
    loaded = read_run(out / RUN_FILE)
    assert loaded.config_digest == run.config_digest
    assert loaded.step_losses == run.step_losses
    assert loaded.predictions_path is None
    manifest = read_manifest(sched)
    assert run.config_digest == config_digest(TINY, manifest)
    assert run.config_digest != config_digest(Hyperparams(seed=1), manifest)


def test_depth_token_replaces_decoder_start():
    records = read_records_from(RECORDS)
    src_vocab = source_vocab(records)
    tgt_vocab = target_vocab(records)
    sub = next(r for r in records if r.kind == "sub")
    full = next(r for r in records if r.kind == "full")
    _, dec_in, dec_out = make_batch([sub, full], src_vocab, tgt_vocab)

    # Sub targets start with their literal depth token, full ones with <bos>;
    # the shifted output begins with the opening paren either way.
    assert dec_in[0, 0].item() == tgt_vocab.id("<1>")
    assert dec_in[1, 0].item() == tgt_vocab.bos_id
    assert dec_out[0, 0].item() == tgt_vocab.id("(")
    assert dec_out[1, 0].item() == tgt_vocab.id("(")
    sub_len = len(sub.tokens)
    assert dec_out[0, sub_len - 1].item() == tgt_vocab.eos_id
    assert dec_out[1, len(full.tokens)].item() == tgt_vocab.eos_id
    assert dec_in[0, sub_len:].eq(src_vocab.pad_id).all()


def read_records_from(raw):
    from trainer_demo.data import Record

    return [
        Record(
            id=r["id"], snt=r["snt"], tokens=tuple(r["tokens"]),
            depth=r["depth"], bucket=r["bucket"], kind=r["kind"],
        )
        for r in raw
    ]


def test_checkpoint_contains_vocabs(wire, tmp_path):
    inst, sched = wire
    out = tmp_path / "run"
    train([inst], sched, TINY, out)
    state = torch.load(out / CHECKPOINT_FILE, map_location="cpu", weights_only=True)
    assert state["hyperparams"]["embed_dim"] == 16
    assert "<R0>" in state["tgt_vocab"]
    assert "cat" in state["src_vocab"]
