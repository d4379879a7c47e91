"""Corpus reading, synthetic generation, and JSONL persistence."""

from __future__ import annotations

from collections import Counter

import pytest

from amr_curriculum.corpus import (
    CorpusReadResult,
    Instance,
    InvalidRange,
    JsonlError,
    VersionMismatch,
    gen_synthetic_corpus,
    make_full_instance,
    read_amr_corpus,
    read_buckets,
    read_instances,
    read_schedule,
    write_buckets,
    write_corpus,
    write_instances,
    write_schedule,
)
from amr_curriculum.curriculum import CurriculumConfig, make_schedule, schedule_digest
from amr_curriculum.graph import graphs_equal, parse_penman, validate
from amr_curriculum.structure import build_buckets

TWO_BLOCKS = """\
# ::id ex-1
# ::snt The soldier died.
(d / die-01
   :ARG1 (s / soldier))

# ::id ex-2
# ::snt The boy wants to go.
(w / want-01
   :ARG0 (b / boy)
   :ARG1 (g / go-02 :ARG0 b))
"""


def test_read_two_block_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text(TWO_BLOCKS, encoding="utf-8")
    result = read_amr_corpus(path)
    assert [i.id for i in result.instances] == ["ex-1", "ex-2"]
    assert result.instances[0].snt == "The soldier died."
    assert result.instances[1].depth == 2
    assert result.errors == ()


def test_read_skips_bad_block_keeps_rest(tmp_path):
    text = TWO_BLOCKS + "\n# ::id ex-3\n(broken / \n\n# ::id ex-4\n(o / ok-01)\n"
    path = tmp_path / "corpus.txt"
    path.write_text(text, encoding="utf-8")
    result = read_amr_corpus(path)
    assert [i.id for i in result.instances] == ["ex-1", "ex-2", "ex-4"]
    assert len(result.errors) == 1
    assert "ex-3" in result.errors[0].message
    assert result.errors[0].line > 1


def test_read_synthesizes_missing_ids(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("(a / alpha)\n\n(b / beta)\n", encoding="utf-8")
    result = read_amr_corpus(path)
    assert [i.id for i in result.instances] == ["c.txt:1", "c.txt:3"]


def test_read_rejects_invalid_graph_as_error(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# ::id dup\n(a / alpha :ARG0 (a / beta))\n", encoding="utf-8")
    result = read_amr_corpus(path)
    assert result.instances == ()
    assert "dup" in result.errors[0].message


def test_write_read_corpus_round_trip(tmp_path):
    instances = gen_synthetic_corpus(8, (1, 4), seed=3)
    path = tmp_path / "corpus.txt"
    write_corpus(instances, path)
    back = read_amr_corpus(path)
    assert back.errors == ()
    assert [i.id for i in back.instances] == [i.id for i in instances]
    for a, b in zip(instances, back.instances):
        assert graphs_equal(a.graph, b.graph, rename=False)
        assert a.snt == b.snt


# --- synthetic generation --------------------------------------------------

def test_synth_deterministic():
    a = gen_synthetic_corpus(100, (1, 6), seed=7)
    b = gen_synthetic_corpus(100, (1, 6), seed=7)
    assert a == b


def test_synth_prefix_stability():
    short = gen_synthetic_corpus(10, (1, 6), seed=7)
    long = gen_synthetic_corpus(40, (1, 6), seed=7)
    assert long[:10] == short


def test_synth_all_graphs_valid():
    for inst in gen_synthetic_corpus(200, (1, 8), seed=13):
        assert validate(inst.graph) == []
        assert inst.kind == "full"
        assert inst.depth == inst.bucket


def test_synth_depth_histogram_near_uniform():
    corpus = gen_synthetic_corpus(10_000, (1, 8), seed=21)
    hist = Counter(i.depth for i in corpus)
    share = 10_000 / 8
    for d in range(1, 9):
        assert abs(hist[d] - share) <= 0.2 * share, hist


def test_synth_rejects_bad_ranges():
    with pytest.raises(InvalidRange):
        gen_synthetic_corpus(0, (1, 6), seed=0)
    with pytest.raises(InvalidRange):
        gen_synthetic_corpus(5, (0, 6), seed=0)
    with pytest.raises(InvalidRange):
        gen_synthetic_corpus(5, (1, 13), seed=0)
    with pytest.raises(InvalidRange):
        gen_synthetic_corpus(5, (4, 2), seed=0)


def test_synth_exercises_attribute_inventory():
    corpus = gen_synthetic_corpus(300, (2, 6), seed=2)
    roles = {r for i in corpus for _v, r, _x in i.graph.attributes}
    assert {":polarity", ":quant", ":wiki"} <= roles
    op_roles = {r for r in roles if r.startswith(":op")}
    assert op_roles
    assert any(c == "name" for i in corpus for _v, c in i.graph.instances)


def test_synth_produces_reentrancies():
    from amr_curriculum.graph import reentrant_variables

    corpus = gen_synthetic_corpus(200, (3, 6), seed=5)
    assert any(reentrant_variables(i.graph) for i in corpus)


# --- JSONL persistence -----------------------------------------------------

def test_instances_round_trip(tmp_path):
    instances = gen_synthetic_corpus(12, (1, 5), seed=9)
    path = tmp_path / "inst.jsonl"
    write_instances(instances, path)
    back = read_instances(path)
    assert len(back) == len(instances)
    for a, b in zip(instances, back):
        assert (a.id, a.snt, a.depth, a.bucket, a.kind, a.tokens, a.parent_id) == (
            b.id, b.snt, b.depth, b.bucket, b.kind, b.tokens, b.parent_id)
        assert graphs_equal(a.graph, b.graph, rename=False)


def test_sub_instances_round_trip(tmp_path):
    corpus = [(i.id, i.snt, i.graph) for i in gen_synthetic_corpus(6, (2, 4), seed=1)]
    _, subs = build_buckets(corpus, "structure")
    path = tmp_path / "subs.jsonl"
    write_instances(subs, path)
    back = read_instances(path)
    assert all(b.kind == "sub" and b.parent_id for b in back)
    assert [b.tokens[0] for b in back] == [f"<{b.depth}>" for b in back]


def test_instances_version_mismatch(tmp_path):
    path = tmp_path / "inst.jsonl"
    path.write_text('{"format":"instances","format_version":99}\n', encoding="utf-8")
    with pytest.raises(VersionMismatch):
        read_instances(path)


def test_instances_malformed_line_names_lineno(tmp_path):
    path = tmp_path / "inst.jsonl"
    write_instances(gen_synthetic_corpus(2, (1, 2), seed=0), path)
    text = path.read_text(encoding="utf-8")
    path.write_text(text + '{"id": "truncated"\n', encoding="utf-8")
    with pytest.raises(JsonlError, match="line 4"):
        read_instances(path)


def test_instances_depth_disagreement_rejected(tmp_path):
    inst = make_full_instance("x", "s", parse_penman("(a / a1 :ARG0 (b / b1))"))
    bad = Instance(id=inst.id, snt=inst.snt, graph=inst.graph, depth=5, bucket=5,
                   kind=inst.kind, tokens=inst.tokens)
    path = tmp_path / "inst.jsonl"
    write_instances([bad], path)
    with pytest.raises(JsonlError, match="depth"):
        read_instances(path)


def test_buckets_round_trip(tmp_path):
    corpus = [(i.id, i.snt, i.graph) for i in gen_synthetic_corpus(10, (1, 4), seed=2)]
    bucket_set, _ = build_buckets(corpus, "structure")
    path = tmp_path / "buckets.jsonl"
    write_buckets(bucket_set, path)
    back = read_buckets(path)
    assert back == bucket_set


def test_buckets_contiguity_checked(tmp_path):
    path = tmp_path / "buckets.jsonl"
    path.write_text(
        '{"format":"buckets","format_version":1,"level":"structure","max_index":2}\n'
        '{"level":"structure","bucket":2,"instance_ids":["a"]}\n',
        encoding="utf-8",
    )
    with pytest.raises(JsonlError, match="contiguous"):
        read_buckets(path)


def test_schedule_file_round_trip(tmp_path):
    corpus = [(i.id, i.snt, i.graph) for i in gen_synthetic_corpus(10, (1, 3), seed=2)]
    sc, _ = build_buckets(corpus, "structure")
    ic, _ = build_buckets(corpus, "instance")
    schedule = make_schedule(sc, ic, CurriculumConfig(t_sc=2, t_ic=2, batch_size=3, final_epochs=1, seed=4))
    path = tmp_path / "sched.jsonl"
    write_schedule(schedule, path)
    back = read_schedule(path)
    assert back == schedule
    assert schedule_digest(back) == schedule_digest(schedule)


def test_schedule_version_mismatch(tmp_path):
    path = tmp_path / "sched.jsonl"
    path.write_text('{"format":"schedule","format_version":42}\n', encoding="utf-8")
    with pytest.raises(VersionMismatch):
        read_schedule(path)


def test_read_result_shape():
    result = CorpusReadResult(instances=(), errors=())
    assert result.instances == () and result.errors == ()
