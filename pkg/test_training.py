import io

import numpy as np
import pytest

from config import build_config
from dfs_orders import structure_invariance_gap
from pipeline import PipelineError, build_datasets, dataset_from_graphs
from graph_core import random_tree
from seq_codec import CodecError
from training import (
    EpochLog,
    PlateauWindow,
    build_pair_records,
    config_from_metadata,
    model_for_config,
    train,
)


def tiny_cfg(**overrides):
    values = {"n": "6", "train_size": "6", "test_size": "4", "hidden_width": "5",
              "embedding_width": "3", "epochs": "3", "batch_size": "3", "trajectory_count": "3",
              "seed": "1"}
    values.update({k: str(v) for k, v in overrides.items()})
    return build_config(values)


def test_plateau_window():
    w = PlateauWindow(3, 1e-3)
    for loss in (5.0, 4.0, 3.0):
        w.push(loss)
    assert not w.is_flat()
    for loss in (1.0, 1.0005, 1.0):
        w.push(loss)
    assert w.is_flat()
    short = PlateauWindow(4, 1.0)
    short.push(1.0)
    assert not short.is_flat()


def test_epoch_log_line():
    assert EpochLog(3, 1.5, 0.25, 0.5).line() == "epoch=3 task_loss=1.500000 olr_loss=0.250000 train_acc=0.500000"


def test_training_log_and_stop_reason():
    cfg = tiny_cfg()
    train_set, _ = build_datasets(cfg)
    sink = io.StringIO()
    result = train(cfg, train_set, log_sink=sink)
    lines = sink.getvalue().splitlines()
    assert lines[0].startswith("# task=wiener_regression")
    epoch_lines = [line for line in lines if not line.startswith("#")]
    assert [line.split()[0] for line in epoch_lines] == ["epoch=0", "epoch=1", "epoch=2", "epoch=3"]
    assert result.log[0].olr_loss == 0.0
    assert result.stop_reason == "epoch_limit"
    assert all(np.isfinite(e.task_loss) for e in result.log)


def test_same_seed_same_start_with_and_without_olr():
    base = tiny_cfg(olr_weight=0)
    train_set, _ = build_datasets(base)
    vanilla = train(base, train_set)
    regularized = train(tiny_cfg(olr_weight=10), train_set)
    assert vanilla.initial_task_loss == regularized.initial_task_loss
    assert all(e.olr_loss == 0.0 for e in vanilla.log)
    assert any(e.olr_loss > 0.0 for e in regularized.log[1:])


def test_training_is_reproducible():
    cfg = tiny_cfg(olr_weight=1)
    train_set, _ = build_datasets(cfg)
    first, second = train(cfg, train_set), train(cfg, train_set)
    assert [e.line() for e in first.log] == [e.line() for e in second.log]
    for name in first.model.params:
        assert np.array_equal(first.model.params[name], second.model.params[name])


def test_training_lowers_the_regression_loss():
    cfg = tiny_cfg(n=5, train_size=5, hidden_width=8, epochs=60, batch_size=5,
                   learning_rate=0.01, olr_weight=0, plateau_window=200)
    train_set, _ = build_datasets(cfg)
    result = train(cfg, train_set)
    assert result.log[-1].task_loss < result.initial_task_loss


def test_sgd_and_randomized_sequences():
    cfg = tiny_cfg(optimizer="sgd", learning_rate=0.001, sequence_mode="randomized", cell="vanilla")
    train_set, _ = build_datasets(cfg)
    result = train(cfg, train_set)
    assert len(result.log) == 4


def test_language_model_training_with_subgraph_pairs():
    cfg = tiny_cfg(task="tree_lm", vocab_mode="labeled", label_alphabet="CNO",
                   pair_source="dfs_subgraph", olr_weight=1)
    train_set, _ = build_datasets(cfg)
    result = train(cfg, train_set)
    assert result.model.vocab.node_symbols() == ("C", "N", "O")
    assert all(np.isfinite(e.task_loss) for e in result.log)
    assert 0.0 <= result.log[-1].train_acc <= 1.0


def test_given_records_replace_the_computed_ones():
    cfg = tiny_cfg(olr_weight=5)
    train_set, _ = build_datasets(cfg)
    result = train(cfg, train_set, records={})
    assert all(e.olr_loss == 0.0 for e in result.log)


def test_pair_records_cover_graphs_with_pairs():
    cfg = tiny_cfg()
    items = dataset_from_graphs([(f"t{i}", random_tree(7, i)) for i in range(8)], cfg)
    records = build_pair_records(items, cfg)
    assert set(records) <= {it.graph_id for it in items}
    for record in records.values():
        assert 2 <= len(record.trajectories) <= cfg.trajectory_count


def test_training_input_errors():
    cfg = tiny_cfg()
    with pytest.raises(PipelineError):
        train(cfg, [])
    train_set, _ = build_datasets(cfg)
    labeled = model_for_config(tiny_cfg(vocab_mode="labeled"))
    with pytest.raises(CodecError):
        train(cfg, train_set, model=labeled)


def test_checkpoint_metadata_restores_the_config():
    cfg = tiny_cfg(olr_weight=0.5, cell="vanilla", nonlinearity="sigmoid")
    model = model_for_config(cfg)
    assert model.metadata["task"] == "wiener_regression"
    assert config_from_metadata(model.metadata) == cfg
    with pytest.raises(PipelineError):
        config_from_metadata({})


def mean_invariance_gap(model, items) -> float:
    return float(np.mean([structure_invariance_gap(model, it.graph, model.vocab) for it in items]))


def test_large_olr_weight_shrinks_the_invariance_gap():
    wins = 0
    for seed in range(5):
        gaps = {}
        for weight in (0, 1000):
            cfg = tiny_cfg(n=5, train_size=8, test_size=4, epochs=10, learning_rate=0.02,
                           pair_source="dfs_subgraph", olr_weight=weight, seed=seed)
            train_set, test_set = build_datasets(cfg)
            gaps[weight] = mean_invariance_gap(train(cfg, train_set).model, test_set)
        wins += gaps[1000] < gaps[0]
    assert wins >= 3
