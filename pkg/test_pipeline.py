import logging

import numpy as np
import pytest

from config import build_config
from dfs_orders import enumerate_orderings, is_valid_ordering, ordering_from_sequence
from graph_core import Graph, random_tree, wiener_index
from pipeline import (
    FilterResult,
    PairSamplingError,
    PipelineError,
    TrajectoryFileError,
    TrajectoryRecord,
    build_datasets,
    build_trajectory_records,
    build_tree_lm_dataset,
    build_wiener_dataset,
    canonical_sample,
    dataset_from_graphs,
    filter_records,
    generate_graphs,
    generation_metrics,
    metrics_lines,
    ordering_from_string,
    ordering_to_string,
    precompute_trajectories,
    read_predictions,
    read_trajectory_file,
    record_from_orderings,
    reference_strings,
    regression_metrics,
    retention_report,
    rounded,
    sample_olr_pair,
    vocabulary_for,
    write_predictions,
)
from seq_codec import Vocabulary, decode, decode_ids

A, B, C, D, E, F = range(6)
PATH4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


def small_cfg(**overrides):
    values = {"n": "6", "train_size": "5", "test_size": "5", "hidden_width": "4",
              "embedding_width": "3", "epochs": "2", "trajectory_count": "4"}
    values.update({k: str(v) for k, v in overrides.items()})
    return build_config(values)


# ── conjuntos de datos ──

def test_vocabulary_for_each_mode():
    assert vocabulary_for(small_cfg()) == Vocabulary.anonymized_vocab()
    assert vocabulary_for(small_cfg(vocab_mode="labeled", label_alphabet="NOC")).node_symbols() == ("C", "N", "O")


def test_generate_graphs_is_deterministic():
    cfg = small_cfg()
    first = generate_graphs(cfg, "train", 4)
    assert [gid for gid, _ in first] == ["train-0", "train-1", "train-2", "train-3"]
    assert [g.key() for _, g in first] == [g.key() for _, g in generate_graphs(cfg, "train", 4)]
    with pytest.raises(PipelineError):
        generate_graphs(cfg, "train", 0)


def test_wiener_dataset_sizes_targets_and_disjointness():
    cfg = build_config({"n": "10", "train_size": "50", "test_size": "200"})
    train, test = build_wiener_dataset(cfg)
    assert len(train) + len(test) == 250
    for item in train + test:
        assert item.target == wiener_index(item.graph)
        assert decode(item.tokens).tree.node_count == 10
    assert not {it.graph.key() for it in train} & {it.graph.key() for it in test}


def test_two_node_trees_all_have_wiener_one(caplog):
    cfg = small_cfg(n=2)
    with caplog.at_level(logging.WARNING, logger="pipeline"):
        train, test = build_datasets(cfg)
    assert {it.target for it in train + test} == {1}
    assert "demasiado chico" in caplog.text


def test_dataset_builders_check_the_task():
    with pytest.raises(PipelineError):
        build_tree_lm_dataset(small_cfg())
    with pytest.raises(PipelineError):
        build_wiener_dataset(small_cfg(task="tree_lm"))


def test_tree_lm_dataset_uses_labels():
    cfg = small_cfg(task="tree_lm", vocab_mode="labeled", label_alphabet="CNO")
    train, _ = build_tree_lm_dataset(cfg)
    for item in train:
        assert item.target is None
        assert set(decode(item.tokens).symbols) <= set("CNO")


def test_canonical_sequence_mode(branchy):
    cfg = small_cfg(sequence_mode="canonical")
    (item,) = dataset_from_graphs([("branchy", branchy)], cfg)
    assert item.tokens.to_string() == "*(***)(*)*"


# ── trayectorias ──

def test_ordering_strings(branchy):
    o = ordering_from_sequence(branchy, [A, C, B, F, E, D])
    assert ordering_to_string(o) == "A(C)(BFE)D"
    assert ordering_from_string(branchy, "A(C)(BFE)D") == o
    with pytest.raises(TrajectoryFileError):
        ordering_from_string(branchy, "A(BCEF)D")
    with pytest.raises(TrajectoryFileError):
        ordering_from_string(branchy, "A(B)")


def test_precompute_skips_graphs_without_pairs(tmp_path, branchy):
    sink = tmp_path / "t.traj"
    summary = precompute_trajectories([("branchy", branchy), ("path", PATH4)], 4, 0, sink)
    assert summary.written == 1
    assert summary.skipped[0][0] == "path"
    assert "graph admits no heuristic pair" in summary.skipped[0][1]
    (record,) = read_trajectory_file(sink, {"branchy": branchy})
    assert record.graph_id == "branchy"
    assert 2 <= len(record.trajectories) <= 4
    assert len({o.last for o in record.orderings()}) == 1
    assert record.canonical_sequence == "A(BEF)(C)D"


def test_trajectory_file_errors_name_the_line(tmp_path, branchy):
    path = tmp_path / "bad.traj"
    good = "branchy\tA(BEF)(C)D\tA(BEF)(C)D|A(C)(BFE)D"
    path.write_text(good + "\n", encoding="utf-8")
    assert len(read_trajectory_file(path, {"branchy": branchy})) == 1
    cases = [
        ("branchy\tA(BEF)(C)D\tA(BEF)(C)D|D(A(BEF)C)", "cannot decode"),
        ("branchy\tA(BEF)(C)D", "3 tab-separated"),
        ("other\tA(BEF)(C)D\tA(BEF)(C)D", "unknown graph id"),
        ("branchy\tA(BEF)(C)D\tA(BEF)(C)D|A(BEF)(C)D", "repeated"),
        ("branchy\tA(BEF)(C)D\tA(BEF)(D)C", "different nodes"),
    ]
    for line, message in cases:
        path.write_text(good + "\n" + line + "\n", encoding="utf-8")
        with pytest.raises(TrajectoryFileError, match=message) as info:
            read_trajectory_file(path, {"branchy": branchy})
        assert str(info.value).startswith("line 2:")


def test_filter_and_retention(branchy):
    record = record_from_orderings("branchy", branchy, [ordering_from_sequence(branchy, s)
                                                  for s in ([A, B, E, F, C, D], [A, C, B, F, E, D])])
    assert filter_records([record], 1) == FilterResult([record], 0)
    dropped = filter_records([record], 10)
    assert dropped.kept == [] and dropped.dropped == 1 and dropped.retention == 0.0
    assert retention_report([record], 4) == {2: 0.25, 10: 0.0}
    assert retention_report([], 0) == {2: 0.0, 10: 0.0}
    with pytest.raises(PipelineError):
        filter_records([record], 0)


@pytest.mark.parametrize("seed", range(10))
def test_filter_and_retention_match_set_arithmetic(seed):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(int(rng.integers(1, 9))):
        g = random_tree(int(rng.integers(3, 7)), 100 * seed + i)
        by_end: dict[int, list[tuple[int, ...]]] = {}
        for seq in sorted(enumerate_orderings(g)):
            by_end.setdefault(seq[-1], []).append(seq)
        group = by_end[sorted(by_end)[int(rng.integers(len(by_end)))]]
        take = rng.choice(len(group), size=int(rng.integers(1, len(group) + 1)), replace=False)
        orderings = [ordering_from_sequence(g, group[k]) for k in sorted(take)]
        records.append(record_from_orderings(f"r{i}", g, orderings))
    total = len(records) + int(rng.integers(0, 5))
    counts = {r.graph_id: len(set(r.trajectories)) for r in records}

    for minimum in (1, 2, 3, 10):
        result = filter_records(records, minimum)
        expected = {gid for gid, c in counts.items() if c >= minimum}
        assert {r.graph_id for r in result.kept} == expected
        assert result.dropped == len(records) - len(expected)
        assert result.retention == pytest.approx(len(expected) / len(records))

    report = retention_report(records, total)
    assert report == {t: pytest.approx(len({gid for gid, c in counts.items() if c >= t}) / total)
                      for t in (2, 10)}


def test_record_must_share_the_end(branchy):
    with pytest.raises(TrajectoryFileError):
        record_from_orderings("branchy", branchy, [ordering_from_sequence(branchy, [A, B, E, F, C, D]),
                                             ordering_from_sequence(branchy, [A, B, E, F, D, C])])


def test_retention_is_stable_and_independent_of_workers():
    trees = [(f"t{i}", random_tree(10, 1000 + i)) for i in range(300)]
    serial = build_trajectory_records(trees, 10, 5)
    parallel = build_trajectory_records(trees, 10, 5, workers=2)
    assert [r.to_line() for r in serial.records] == [r.to_line() for r in parallel.records]
    report = retention_report(filter_records(serial.records, 10).kept, len(trees))
    again = retention_report(filter_records(build_trajectory_records(trees, 10, 5).records, 10).kept, len(trees))
    assert report == again
    assert 0.0 <= report[10] <= report[2] <= 1.0
    for record in serial.records:
        for o in record.orderings():
            assert is_valid_ordering(record.graph, o.visit_sequence)


# ── pares OLR ──

def test_pair_from_a_record(branchy):
    cfg = small_cfg(vocab_mode="labeled", label_alphabet="ABCDEF")
    labeled = branchy.with_labels(list("ABCDEF"))
    record = record_from_orderings("branchy", labeled, [ordering_from_sequence(labeled, s)
                                                     for s in ([A, B, E, F, C, D], [A, C, B, F, E, D])])
    a, b = sample_olr_pair(record, cfg, 0)
    vocab = vocabulary_for(cfg)
    assert {decode_ids(a, vocab).to_string(), decode_ids(b, vocab).to_string()} == {"A(BEF)(C)D", "A(C)(BFE)D"}


def test_record_with_one_trajectory_has_no_pair(branchy):
    record = TrajectoryRecord("branchy", branchy, "A(BEF)(C)D", ("A(BEF)(C)D",))
    with pytest.raises(PairSamplingError):
        sample_olr_pair(record, small_cfg(), 0)


@pytest.mark.parametrize("source", ["full_graph", "dfs_subgraph"])
def test_pair_from_a_graph(branchy, source):
    cfg = small_cfg(pair_source=source)
    vocab = vocabulary_for(cfg)
    a, b = sample_olr_pair(branchy, cfg, 11)
    for ids in (a, b):
        assert ids[0] == vocab.bos and ids[-1] == vocab.eos
        decode(decode_ids(ids, vocab))
    assert sample_olr_pair(branchy, cfg, 11) == (a, b)


@pytest.mark.parametrize("source", ["full_graph", "dfs_subgraph"])
def test_path_graphs_exhaust_the_retries(source):
    with pytest.raises(PairSamplingError, match="no OLR pair"):
        sample_olr_pair(PATH4, small_cfg(pair_source=source), 0)


# ── métricas ──

def test_rounding_goes_half_up():
    assert [rounded(x) for x in (2.5, 2.49, -0.5, -0.51, 7.0)] == [3, 2, 0, -1, 7]


def test_regression_metrics(tmp_path):
    m = regression_metrics([3.4, 5.6, 10.0], [3, 6, 12])
    assert m.mae == pytest.approx((0.4 + 0.4 + 2.0) / 3)
    assert m.rounded_accuracy == pytest.approx(2 / 3)
    path = tmp_path / "pred.tsv"
    write_predictions(path, m)
    assert read_predictions(path) == ([3.4, 5.6, 10.0], [3, 6, 12])
    assert metrics_lines(m.as_dict())[0].startswith("mae=")
    with pytest.raises(PipelineError):
        regression_metrics([], [])


def test_generation_metrics_set_arithmetic():
    m = generation_metrics(["s1", "s1", "s2"], {"s1"}, [3])
    assert m.validity == 1.0
    assert m.unique_at_k[3] == pytest.approx(2 / 3)
    assert m.novelty == 0.5
    fixed = generation_metrics(["x"] * 10, {"y"}, [1, 10])
    assert fixed.unique_at_k == {1: 1.0, 10: 0.1}
    assert fixed.novelty == 1.0
    assert generation_metrics(["x"] * 10, {"x"}, [10]).novelty == 0.0


def test_generation_metrics_with_invalid_samples():
    m = generation_metrics([None, None], {"s"}, [2])
    assert (m.validity, m.unique_at_k[2], m.novelty) == (0.0, 0.0, 0.0)
    m = generation_metrics(["a", None, "b", None], set(), [4])
    assert m.validity == 0.5 and m.unique_at_k[4] == 0.5
    with pytest.raises(PipelineError):
        generation_metrics(["a"], set(), [2])


def test_canonical_samples():
    vocab = Vocabulary.labeled("CNO")
    ids = [vocab.bos, vocab.id_of("C"), vocab.id_of("("), vocab.id_of("N"), vocab.id_of(")"),
           vocab.id_of("O"), vocab.eos]
    assert canonical_sample(ids, vocab) == "C(N)O"
    assert canonical_sample(ids[:-1], vocab) is None
    assert canonical_sample([vocab.bos, vocab.id_of("C")], vocab) is None
    assert canonical_sample([vocab.bos, vocab.id_of("C"), vocab.eos], vocab) == "C"
    assert canonical_sample([vocab.bos, vocab.id_of("("), vocab.eos], vocab) is None
    assert canonical_sample([vocab.bos, vocab.eos], vocab) is None


def test_reference_strings_follow_the_vocabulary(branchy):
    cfg = small_cfg(sequence_mode="canonical")
    items = dataset_from_graphs([("branchy", branchy)], cfg)
    assert reference_strings(items, vocabulary_for(cfg)) == {"*(***)(*)*"}
