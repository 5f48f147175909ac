import pytest

from cli import main
from graph_core import Graph, read_graph_file, write_graph_file

TINY = ["--set", "n=6", "--set", "train_size=6", "--set", "test_size=4", "--set", "hidden_width=4",
        "--set", "embedding_width=3", "--set", "batch_size=3", "--set", "trajectory_count=3"]


def graph_file(tmp_path, name, graphs):
    path = tmp_path / name
    write_graph_file(path, graphs)
    return str(path)


# ── códigos de salida ──

@pytest.mark.parametrize("argv", [
    [],
    ["wiener"],
    ["gen-graphs", "--n", "5", "--count", "0", "--out", "x.g"],
    ["oracle", "--in", "x.g", "--mode", "sideways"],
    ["bogus"],
])
def test_usage_errors_exit_with_one(argv):
    assert main(argv) == 1


def test_corrupt_graph_file_exits_with_two(tmp_path, capsys):
    path = tmp_path / "bad.g"
    path.write_text("g a 3 0-1,1-2\ng b 3 0-1,1-7\n", encoding="utf-8")
    assert main(["wiener", "--in", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["wiener", "--in", str(tmp_path / "missing.g")]) == 2


def test_oracle_bound_exits_with_two(tmp_path, capsys):
    path = graph_file(tmp_path, "big.g", [("p9", Graph.from_edges(9, [(i, i + 1) for i in range(8)]))])
    assert main(["oracle", "--in", path, "--mode", "enumerate"]) == 2
    assert "oracle bound is 8" in capsys.readouterr().err
    assert main(["oracle", "--in", path, "--mode", "enumerate", "--max-nodes", "9"]) == 0


def test_oracle_mode_arguments(tmp_path):
    path = graph_file(tmp_path, "p.g", [("p3", Graph.from_edges(3, [(0, 1), (1, 2)]))])
    assert main(["oracle", "--in", path, "--mode", "end-at"]) == 1
    assert main(["oracle", "--in", path, "--mode", "invariance-gap"]) == 1


def test_oracle_invariance_gap_of_a_language_model(tmp_path, capsys):
    model = tmp_path / "lm.ckpt"
    assert main(["train", *TINY, "--set", "task=tree_lm", "--set", "olr_mode=hidden", "--epochs", "1",
                 "--out-model", str(model), "--log", str(tmp_path / "lm.log")]) == 0
    path = graph_file(tmp_path, "p.g", [("p3", Graph.from_edges(3, [(0, 1), (1, 2)]))])
    capsys.readouterr()
    assert main(["oracle", "--in", path, "--mode", "invariance-gap", "--model", str(model)]) == 0
    (line,) = capsys.readouterr().out.splitlines()
    assert line.startswith("p3\tgap=")
    assert float(line.split("=")[1]) > 0.0


def test_unwritable_output_exits_with_three(tmp_path):
    out = tmp_path / "missing-dir" / "g.g"
    assert main(["gen-graphs", "--n", "4", "--count", "2", "--out", str(out)]) == 3


# ── subcomandos de grafos ──

def test_gen_graphs_is_reproducible(tmp_path):
    first, second = tmp_path / "a.g", tmp_path / "b.g"
    for out in (first, second):
        assert main(["gen-graphs", "--n", "7", "--count", "5", "--seed", "3", "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()
    graphs = read_graph_file(first)
    assert [gid for gid, _ in graphs] == ["0", "1", "2", "3", "4"]
    assert all(g.node_count == 7 and g.edge_count == 6 for _, g in graphs)


def test_gen_graphs_with_extra_edges_and_labels(tmp_path):
    out = tmp_path / "c.g"
    assert main(["gen-graphs", "--n", "6", "--count", "3", "--extra-edges", "2", "--labels", "CNO",
                 "--out", str(out)]) == 0
    for _, g in read_graph_file(out):
        assert g.edge_count == 7
        assert set(g.node_labels) <= set("CNO")


def test_wiener_prints_one_line_per_graph(tmp_path, capsys):
    path = graph_file(tmp_path, "w.g", [("edge", Graph.from_edges(2, [(0, 1)])),
                                        ("path", Graph.from_edges(3, [(0, 1), (1, 2)]))])
    assert main(["wiener", "--in", path]) == 0
    assert capsys.readouterr().out.splitlines() == ["edge=1", "path=4"]
    out = tmp_path / "w.txt"
    assert main(["wiener", "--in", path, "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == "edge=1\npath=4\n"


def test_oracle_enumerates_a_path(tmp_path, capsys):
    path = graph_file(tmp_path, "p.g", [("p3", Graph.from_edges(3, [(0, 1), (1, 2)]))])
    assert main(["oracle", "--in", path, "--mode", "enumerate"]) == 0
    assert capsys.readouterr().out.splitlines() == ["p3\t4", "\t0,1,2", "\t1,0,2", "\t1,2,0", "\t2,1,0"]
    assert main(["oracle", "--in", path, "--mode", "end-at", "--vertex", "2"]) == 0
    assert capsys.readouterr().out.splitlines() == ["p3\t2", "\t0,1,2", "\t1,0,2"]


def test_stats_reports_connectivity(tmp_path, capsys, square, branchy):
    path = graph_file(tmp_path, "s.g", [("sq", square), ("branchy", branchy)])
    assert main(["stats", "--in", path]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "graphs=2"
    assert any(line.startswith("one_edge_connected=") for line in out)


# ── trayectorias ──

def test_trajectories_filter_and_retention(tmp_path, capsys):
    graphs = tmp_path / "t.g"
    traj, kept = tmp_path / "t.traj", tmp_path / "kept.traj"
    assert main(["gen-graphs", "--n", "8", "--count", "12", "--seed", "5", "--out", str(graphs)]) == 0
    assert main(["trajectories", "--in", str(graphs), "--count", "4", "--seed", "2", "--out", str(traj)]) == 0
    first = traj.read_bytes()
    assert main(["trajectories", "--in", str(graphs), "--count", "4", "--seed", "2", "--workers", "2",
                 "--out", str(traj)]) == 0
    assert traj.read_bytes() == first
    assert main(["filter", "--in", str(traj), "--graphs", str(graphs), "--min", "2", "--out", str(kept)]) == 0
    assert kept.read_bytes() == first
    capsys.readouterr()
    assert main(["stats", "--in", str(graphs), "--trajectories", str(traj)]) == 0
    out = capsys.readouterr().out
    assert "retention_at_2=" in out and "retention_at_10=0.0" in out


# ── entrenamiento, evaluación y generación ──

def test_train_and_eval_regression(tmp_path, capsys):
    model, log, metrics = tmp_path / "m.ckpt", tmp_path / "train.log", tmp_path / "test.metrics"
    argv = ["train", *TINY, "--seed", "4", "--olr-weight", "1", "--epochs", "2",
            "--out-model", str(model), "--log", str(log), "--metrics-out", str(metrics)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "stop=epoch_limit" in out and "mae=" in out
    assert "# olr_weight=1.0" in log.read_text(encoding="utf-8")
    assert metrics.read_text(encoding="utf-8").startswith("mae=")

    first = model.read_bytes()
    assert main(argv) == 0
    assert model.read_bytes() == first

    data = tmp_path / "test.g"
    assert main(["gen-graphs", "--n", "6", "--count", "3", "--seed", "9", "--out", str(data)]) == 0
    predictions = tmp_path / "pred.tsv"
    assert main(["eval", "--model", str(model), "--data", str(data), "--predictions-out", str(predictions)]) == 0
    assert len(predictions.read_text(encoding="utf-8").splitlines()) == 4


def test_train_from_graph_and_trajectory_files(tmp_path):
    graphs, traj = tmp_path / "t.g", tmp_path / "t.traj"
    assert main(["gen-graphs", "--n", "6", "--count", "5", "--seed", "1", "--out", str(graphs)]) == 0
    assert main(["trajectories", "--in", str(graphs), "--count", "3", "--out", str(traj)]) == 0
    assert main(["train", *TINY, "--epochs", "1", "--data", str(graphs), "--trajectories", str(traj),
                 "--out-model", str(tmp_path / "m.ckpt"), "--log", str(tmp_path / "l.log")]) == 0
    assert main(["train", *TINY, "--trajectories", str(traj),
                 "--out-model", str(tmp_path / "m.ckpt"), "--log", str(tmp_path / "l.log")]) == 1


def test_invalid_configuration_exits_with_two(tmp_path, capsys):
    argv = ["train", "--set", "hidden_width=0", "--out-model", str(tmp_path / "m"), "--log", str(tmp_path / "l")]
    assert main(argv) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_language_model_eval_and_generate(tmp_path, capsys):
    model = tmp_path / "lm.ckpt"
    assert main(["train", *TINY, "--set", "task=tree_lm", "--set", "vocab_mode=labeled", "--epochs", "1",
                 "--out-model", str(model), "--log", str(tmp_path / "lm.log")]) == 0
    data = tmp_path / "ref.g"
    assert main(["gen-graphs", "--n", "6", "--count", "3", "--labels", "CNO", "--out", str(data)]) == 0
    metrics = tmp_path / "gen.metrics"
    assert main(["eval", "--model", str(model), "--data", str(data), "--samples", "5", "--k", "5",
                 "--max-len", "30", "--metrics-out", str(metrics)]) == 0
    lines = metrics.read_text(encoding="utf-8").splitlines()
    assert [line.split("=")[0] for line in lines] == ["validity", "novelty", "unique_at_5"]

    unlabeled = graph_file(tmp_path, "plain.g", [("p", Graph.from_edges(3, [(0, 1), (1, 2)]))])
    assert main(["eval", "--model", str(model), "--data", unlabeled, "--samples", "5"]) == 2

    capsys.readouterr()
    assert main(["generate", "--model", str(model), "--count", "4", "--max-len", "30", "--seed", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].endswith("/4 muestras válidas")
